#ifndef GMC_TESTS_SUPPORT_HPP
#define GMC_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdint>

#include "gmc/common.hpp"
#include "gmc/domain.hpp"
#include "gmc/kernel.hpp"
#include "gmc/rng.hpp"

namespace gmc::test {

inline DomainGrid unit_grid(Index n, int dim = 1) { return build_grid(dim, Interval{0.0, 1.0}, n); }

inline Matrix two_by_two_entries() {
  Matrix K(2, 2);
  K << 1.0, 0.2, 0.2, 1.0;
  return K;
}

inline CovMatrix two_by_two() { return CovMatrix::factorize(two_by_two_entries()); }

/// Small deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rs_(SeedRecord{seed, 0x5eed}) {}
  double uniform(double a, double b) { return a + (b - a) * rs_.uniform(); }
  double normal() { return rs_.normal(); }
  Index integer(Index lo, Index hi) {
    return lo + static_cast<Index>(rs_.uniform() * static_cast<double>(hi - lo + 1));
  }
  Vector normal_vector(Index n) {
    Vector v(n);
    rs_.fill_normal(v);
    return v;
  }
  /// Random symmetric PSD matrix A A^T / n.
  Matrix psd(Index n) {
    Matrix A(n, n);
    rs_.fill_normal(A);
    Matrix K = A * A.transpose() / static_cast<double>(n);
    return 0.5 * (K + K.transpose());
  }

 private:
  RandomStream rs_;
};

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace gmc::test

#endif  // GMC_TESTS_SUPPORT_HPP
