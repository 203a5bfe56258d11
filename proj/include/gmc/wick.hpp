#ifndef GMC_WICK_HPP
#define GMC_WICK_HPP

#include <cstdint>
#include <vector>

#include "gmc/common.hpp"
#include "gmc/gaussian.hpp"
#include "gmc/kernel.hpp"

namespace gmc {

inline constexpr int kHermiteMaxOrder = 12;

/// Probabilists' Hermite polynomials h_n = e^{-D^2/2} x^n, i.e.
/// h_n = x h_{n-1} - (n-1) h_{n-2}. Physicists' H_n(x) = 2^{n/2} h_n(sqrt(2) x).
class HermiteTable {
 public:
  explicit HermiteTable(int nmax = kHermiteMaxOrder);

  int max_order() const { return static_cast<int>(coeffs_.size()) - 1; }
  /// Monomial coefficients of h_n, lowest degree first.
  const std::vector<std::int64_t>& coefficients(int n) const;
  /// Horner evaluation of the stored expansion.
  double eval_monomial(int n, double x) const;

 private:
  std::vector<std::vector<std::int64_t>> coeffs_;
};

/// h_n(x) by the three-term recurrence.
template <typename Scalar>
Scalar hermite(int n, Scalar x, int nmax = kHermiteMaxOrder) {
  if (n < 0 || n > nmax) throw InvalidArgument("Hermite order out of range [0, nmax]");
  Scalar prev{1};
  if (n == 0) return prev;
  Scalar cur = x;
  for (int k = 2; k <= n; ++k) {
    const Scalar next = x * cur - Scalar(k - 1) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// sigma^n h_n(x / sigma) written without the division:
/// p_n = x p_{n-1} - (n-1) sigma^2 p_{n-2}. At sigma = 0 this is x^n.
template <typename Scalar>
Scalar wick_power(int n, Scalar x, Scalar variance, int nmax = kHermiteMaxOrder) {
  if (n < 0 || n > nmax) throw InvalidArgument("Wick order out of range [0, nmax]");
  Scalar prev{1};
  if (n == 0) return prev;
  Scalar cur = x;
  for (int k = 2; k <= n; ++k) {
    const Scalar next = x * cur - Scalar(k - 1) * variance * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// W_i = sigma_i^n h_n(X_i / sigma_i), sigma_i^2 = K_ii.
Vector wick_power_field(const FieldSample& x, const CovMatrix& cov, int n);

double factorial(int n);

}  // namespace gmc

#endif  // GMC_WICK_HPP
