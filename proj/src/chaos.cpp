#include "gmc/chaos.hpp"

#include <cmath>

namespace gmc {

namespace {

void check_shapes(const FieldSample& x, const CovMatrix& cov, const DomainGrid& grid) {
  if (x.values.size() != cov.size() || cov.size() != grid.size())
    throw InvalidArgument("sample, kernel and grid sizes differ");
  if (!cov.diagonal().allFinite()) throw InvalidArgument("kernel diagonal must be finite");
}

}  // namespace

ChaosMeasure build_scaled_chaos(const FieldSample& x, const CovMatrix& cov,
                                const DomainGrid& grid, double c) {
  if (!(std::abs(c) <= 1.0)) throw InvalidArgument("scaled chaos needs |c| <= 1");
  check_shapes(x, cov, grid);
  ChaosMeasure m;
  m.weights.resize(grid.size());
  const Vector var = cov.diagonal();
  m.clamped = chaos_weights(x.values, var, grid.cell_measure(), c, m.weights);
  m.variance = c * c * var;
  m.grid_id = grid.id();
  return m;
}

ChaosMeasure build_chaos(const FieldSample& x, const CovMatrix& cov, const DomainGrid& grid) {
  return build_scaled_chaos(x, cov, grid, 1.0);
}

std::vector<ChaosMeasure> martingale_sequence(const std::vector<CovMatrix>& levels,
                                              const DomainGrid& grid, SeedRecord seed) {
  if (levels.empty()) throw InvalidArgument("martingale needs at least one level");
  const Index n = grid.size();
  Vector x = Vector::Zero(n);
  Vector var = Vector::Zero(n);
  Vector latent, values;
  std::vector<ChaosMeasure> out;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const CovMatrix& level = levels[k];
    if (level.size() != n) throw InvalidArgument("level size does not match grid");
    if ((level.entries().array() < 0.0).any())
      throw InvalidArgument("martingale levels must be entrywise nonnegative");
    sample_into(level, seed.child(k), latent, values);
    x += values;
    var += level.diagonal();
    ChaosMeasure m;
    m.weights.resize(n);
    m.clamped = chaos_weights(x, var, grid.cell_measure(), 1.0, m.weights);
    m.variance = var;
    m.grid_id = grid.id();
    out.push_back(std::move(m));
  }
  return out;
}

double integrate(const ChaosMeasure& m, const Vector& f) {
  if (f.size() != m.weights.size()) throw InvalidArgument("integrand size mismatch");
  return compensated_sum(f.cwiseProduct(m.weights));
}

ChaosMeasure reweight_shift(const ChaosMeasure& m, const ShiftVector& xi) {
  if (xi.field_repr.size() != m.weights.size()) throw InvalidArgument("shift size mismatch");
  ChaosMeasure out = m;
  out.weights = xi.field_repr.array().exp() * m.weights.array();
  return out;
}

void write_measure_csv(std::ostream& os, const ChaosMeasure& m) {
  os << "cell_index,weight\n";
  for (Index i = 0; i < m.weights.size(); ++i) os << i << ',' << format_double(m.weights(i)) << '\n';
}

}  // namespace gmc
