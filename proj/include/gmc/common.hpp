#ifndef GMC_COMMON_HPP
#define GMC_COMMON_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace gmc {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

/// Raised when an operation's preconditions are violated by its inputs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Neumaier's variant of Kahan summation.
template <typename Scalar>
class CompensatedSum {
 public:
  void add(Scalar x) {
    const Scalar t = sum_ + x;
    if (abs_(sum_) >= abs_(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(Scalar x) {
    add(x);
    return *this;
  }
  Scalar value() const { return sum_ + carry_; }

 private:
  static Scalar abs_(Scalar x) { return x < Scalar(0) ? -x : x; }
  Scalar sum_{0};
  Scalar carry_{0};
};

template <typename Derived>
typename Derived::Scalar compensated_sum(const Eigen::DenseBase<Derived>& values) {
  CompensatedSum<typename Derived::Scalar> acc;
  for (Index j = 0; j < values.cols(); ++j) {
    for (Index i = 0; i < values.rows(); ++i) acc.add(values(i, j));
  }
  return acc.value();
}

// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::span<const std::byte> bytes,
                    std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t hash_string(std::string_view s);
std::uint64_t hash_matrix(const Matrix& m);
std::string hex64(std::uint64_t v);

/// Shortest round-trip decimal representation (dot decimal, locale-free).
std::string format_double(double v);

/// x^n by repeated multiplication; exact sign handling for negative bases.
template <typename Scalar>
Scalar int_pow(Scalar x, int n) {
  Scalar r{1};
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

}  // namespace gmc

#endif  // GMC_COMMON_HPP
