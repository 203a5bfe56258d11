#include "gmc/gaussian.hpp"

#include <cmath>

namespace gmc {

namespace {
constexpr std::uint64_t kFieldStream = 0;
constexpr std::uint64_t kCellStream = 1;
}  // namespace

void sample_into(const CovMatrix& cov, SeedRecord seed, Vector& latent, Vector& values) {
  latent.resize(cov.size());
  RandomStream rng(seed);
  rng.fill_normal(latent);
  values.noalias() = cov.factor().triangularView<Eigen::Lower>() * latent;
}

FieldSample sample_field(const CovMatrix& cov, SeedRecord seed) {
  FieldSample s;
  sample_into(cov, seed, s.latent, s.values);
  s.cov_id = cov.id();
  s.seed = seed;
  return s;
}

bool reconstructs(const FieldSample& sample, const CovMatrix& cov) {
  if (sample.latent.size() != cov.size()) return false;
  const Vector x = cov.factor().triangularView<Eigen::Lower>() * sample.latent;
  return x == sample.values;
}

FieldSample mollify_field(const FieldSample& fine, const DomainGrid& fine_grid,
                          const Mollifier& moll, double eps, const DomainGrid& coarse_grid) {
  if (fine.values.size() != fine_grid.size())
    throw InvalidArgument("sample does not match the fine grid");
  if (!refines(fine_grid, coarse_grid))
    throw InvalidArgument("fine grid does not refine the coarse grid");
  const auto W = mollifier_weights(coarse_grid, fine_grid, moll, eps);
  FieldSample out;
  out.values = W * fine.values;
  out.latent = fine.latent;
  out.cov_id = fine.cov_id;
  out.seed = fine.seed;
  out.provenance = "mollified:" + moll.name() + ":" + format_double(eps);
  return out;
}

ShiftVector shift_from_test_function(const Vector& f, const CovMatrix& cov,
                                     const DomainGrid& grid) {
  if (f.size() != cov.size() || f.size() != grid.size())
    throw InvalidArgument("test function, kernel and grid sizes differ");
  if (!f.allFinite()) throw InvalidArgument("test function must be finite");
  const Vector fm = f.cwiseProduct(grid.cell_measure());
  ShiftVector xi;
  xi.test_fn = f;
  xi.field_repr = cov.entries() * fm;
  xi.h_norm_sq = (cov.factor().transpose() * fm).squaredNorm();
  return xi;
}

FieldSample cameron_martin_shift(const FieldSample& x, const ShiftVector& xi) {
  if (x.values.size() != xi.field_repr.size()) throw InvalidArgument("shift size mismatch");
  FieldSample out = x;
  out.values = x.values + xi.field_repr;
  out.shifted = true;
  out.shifts.push_back(xi);
  return out;
}

Index sample_cell(const DomainGrid& grid, double u) {
  const Vector& mu = grid.cell_measure();
  const double target = u * grid.total_measure();
  CompensatedSum<double> cdf;
  Index last_positive = 0;
  for (Index i = 0; i < mu.size(); ++i) {
    if (mu(i) > 0.0) last_positive = i;
    cdf.add(mu(i));
    if (mu(i) > 0.0 && target < cdf.value()) return i;
  }
  return last_positive;
}

PeyriereDraw peyriere_sample(const CovMatrix& cov, const DomainGrid& grid, SeedRecord seed) {
  if (cov.size() != grid.size()) throw InvalidArgument("kernel does not match grid");
  FieldSample x = sample_field(cov, seed.child(kFieldStream));
  RandomStream cell_rng(seed.child(kCellStream));
  const Index t = sample_cell(grid, cell_rng.uniform());

  // f = 1_{t} / mu_t, so f.mu = e_t and the shift is exactly the column K(., t).
  ShiftVector xi;
  xi.test_fn = Vector::Zero(grid.size());
  xi.test_fn(t) = 1.0 / grid.cell_measure()(t);
  xi.field_repr = cov.entries().col(t);
  xi.h_norm_sq = cov.entries()(t, t);
  return {cameron_martin_shift(x, xi), t};
}

void write_sample_csv(std::ostream& os, const Vector& values, const std::string& column) {
  os << "cell_index," << column << '\n';
  for (Index i = 0; i < values.size(); ++i) os << i << ',' << format_double(values(i)) << '\n';
}

}  // namespace gmc
