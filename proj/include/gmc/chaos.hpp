#ifndef GMC_CHAOS_HPP
#define GMC_CHAOS_HPP

#include <optional>
#include <ostream>
#include <vector>

#include "gmc/common.hpp"
#include "gmc/domain.hpp"
#include "gmc/gaussian.hpp"
#include "gmc/kernel.hpp"
#include "gmc/rng.hpp"

namespace gmc {

inline constexpr double kExponentClamp = 700.0;

/// Discrete chaos measure: m_i = exp(c X_i - c^2 K_ii / 2) mu_i.
struct ChaosMeasure {
  Vector weights;
  std::uint64_t grid_id = 0;
  std::optional<double> gamma;
  /// Variance diagonal used in the normalization (already scaled by c^2).
  Vector variance;
  /// Cells whose exponent was clamped to +-700.
  Index clamped = 0;

  double total_mass() const { return compensated_sum(weights); }
};

/// exp(c x_i - c^2 var_i / 2) mu_i with the exponent clamped to +-700.
/// Returns the number of clamped cells.
template <typename DerivedX, typename DerivedOut>
Index chaos_weights(const Eigen::MatrixBase<DerivedX>& x, const Vector& variance,
                    const Vector& mu, double c, Eigen::MatrixBase<DerivedOut>& out) {
  Index clamped = 0;
  const double half_c2 = 0.5 * c * c;
  for (Index i = 0; i < x.size(); ++i) {
    double e = c * x(i) - half_c2 * variance(i);
    if (e > kExponentClamp) {
      e = kExponentClamp;
      ++clamped;
    } else if (e < -kExponentClamp) {
      e = -kExponentClamp;
      ++clamped;
    }
    out(i) = std::exp(e) * mu(i);
  }
  return clamped;
}

ChaosMeasure build_chaos(const FieldSample& x, const CovMatrix& cov, const DomainGrid& grid);

/// Chaos of cY: |c| <= 1.
ChaosMeasure build_scaled_chaos(const FieldSample& x, const CovMatrix& cov,
                                const DomainGrid& grid, double c);

/// M_1, ..., M_L of the martingale X_n = sum_{k<=n} X^(k) with X^(k) drawn
/// from levels[k] on stream seed.child(k).
std::vector<ChaosMeasure> martingale_sequence(const std::vector<CovMatrix>& levels,
                                              const DomainGrid& grid, SeedRecord seed);

double integrate(const ChaosMeasure& m, const Vector& f);

/// m_i' = e^{xi_i} m_i.
ChaosMeasure reweight_shift(const ChaosMeasure& m, const ShiftVector& xi);

void write_measure_csv(std::ostream& os, const ChaosMeasure& m);

}  // namespace gmc

#endif  // GMC_CHAOS_HPP
