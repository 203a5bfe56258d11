#ifndef GMC_GAUSSIAN_HPP
#define GMC_GAUSSIAN_HPP

#include <ostream>
#include <string>
#include <vector>

#include "gmc/common.hpp"
#include "gmc/domain.hpp"
#include "gmc/kernel.hpp"
#include "gmc/rng.hpp"

namespace gmc {

/// A Cameron-Martin direction generated by a test function f on the grid.
struct ShiftVector {
  Vector test_fn;
  /// xi_i = sum_j K_ij f_j mu_j
  Vector field_repr;
  /// sum_ij f_i K_ij f_j mu_i mu_j, computed as |L^T (f.mu)|^2
  double h_norm_sq = 0.0;
};

/// One realization X = L z of the field. Samples derived by mollification
/// keep the latent z of the fine sample they came from; shifted samples keep
/// the applied shifts instead of re-solving for z.
struct FieldSample {
  Vector values;
  Vector latent;
  std::uint64_t cov_id = 0;
  SeedRecord seed;
  bool shifted = false;
  std::vector<ShiftVector> shifts;
  std::string provenance = "sampled";
};

FieldSample sample_field(const CovMatrix& cov, SeedRecord seed);

/// In-place variant used by ensemble loops: writes z and L z.
void sample_into(const CovMatrix& cov, SeedRecord seed, Vector& latent, Vector& values);

/// True iff sample.values == L * sample.latent bitwise.
bool reconstructs(const FieldSample& sample, const CovMatrix& cov);

/// X_eps(t) = sum_t' w_eps(t, t') X(t') with the boundary-renormalized
/// weights of `mollifier_weights`.
FieldSample mollify_field(const FieldSample& fine, const DomainGrid& fine_grid,
                          const Mollifier& moll, double eps, const DomainGrid& coarse_grid);

ShiftVector shift_from_test_function(const Vector& f, const CovMatrix& cov,
                                     const DomainGrid& grid);

FieldSample cameron_martin_shift(const FieldSample& x, const ShiftVector& xi);

struct PeyriereDraw {
  FieldSample field;  // X + K(., t)
  Index cell;         // t
};

/// t ~ mu / mu[T] and independent X; returns (X + K(., t), t).
PeyriereDraw peyriere_sample(const CovMatrix& cov, const DomainGrid& grid, SeedRecord seed);

/// Index drawn from mu / mu[T] by inverse CDF of one uniform.
Index sample_cell(const DomainGrid& grid, double u);

void write_sample_csv(std::ostream& os, const Vector& values, const std::string& column = "value");

}  // namespace gmc

#endif  // GMC_GAUSSIAN_HPP
