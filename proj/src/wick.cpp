#include "gmc/wick.hpp"

namespace gmc {

HermiteTable::HermiteTable(int nmax) {
  if (nmax < 0 || nmax > 20) throw InvalidArgument("HermiteTable supports orders 0..20");
  coeffs_.push_back({1});
  if (nmax >= 1) coeffs_.push_back({0, 1});
  for (int n = 2; n <= nmax; ++n) {
    std::vector<std::int64_t> c(static_cast<std::size_t>(n) + 1, 0);
    const auto& a = coeffs_[static_cast<std::size_t>(n) - 1];
    const auto& b = coeffs_[static_cast<std::size_t>(n) - 2];
    for (std::size_t k = 0; k < a.size(); ++k) c[k + 1] += a[k];
    for (std::size_t k = 0; k < b.size(); ++k) c[k] -= static_cast<std::int64_t>(n - 1) * b[k];
    coeffs_.push_back(std::move(c));
  }
}

const std::vector<std::int64_t>& HermiteTable::coefficients(int n) const {
  if (n < 0 || n > max_order()) throw InvalidArgument("Hermite order out of range");
  return coeffs_[static_cast<std::size_t>(n)];
}

double HermiteTable::eval_monomial(int n, double x) const {
  const auto& c = coefficients(n);
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + static_cast<double>(*it);
  return acc;
}

Vector wick_power_field(const FieldSample& x, const CovMatrix& cov, int n) {
  if (x.values.size() != cov.size()) throw InvalidArgument("sample and kernel sizes differ");
  Vector w(x.values.size());
  for (Index i = 0; i < w.size(); ++i) {
    const double var = cov.entries()(i, i);
    // Degenerate cells carry no randomness; their Wick power is 0 for n >= 1.
    w(i) = (var == 0.0 && n >= 1) ? 0.0 : wick_power(n, x.values(i), var);
  }
  return w;
}

double factorial(int n) {
  if (n < 0) throw InvalidArgument("factorial of a negative number");
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

}  // namespace gmc
