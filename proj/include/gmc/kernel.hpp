#ifndef GMC_KERNEL_HPP
#define GMC_KERNEL_HPP

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include "gmc/common.hpp"
#include "gmc/domain.hpp"

namespace gmc {

/// Compactly supported unit-mass bump. Multi-dimensional profiles are
/// products of the 1-D profile over axes.
class Mollifier {
 public:
  enum class Profile { Box, Triangle, Tabulated };

  /// 1 on [-1/2, 1/2].
  static Mollifier box();
  /// (1 - |u|)+ on [-1, 1].
  static Mollifier triangle();
  /// Piecewise-linear interpolant of `values` on equispaced nodes spanning
  /// [-radius, radius]; endpoints must be 0 and the trapezoid mass 1 to 1e-10.
  static Mollifier tabulated(std::vector<double> values, double radius);
  static Mollifier from_name(const std::string& name);

  Profile profile() const { return profile_; }
  double radius() const { return radius_; }
  const std::vector<double>& table() const { return table_; }
  std::string name() const;

  double profile_1d(double u) const;
  double operator()(const Vector& x) const;
  /// psi_eps(x) = eps^{-d} psi(x / eps).
  double scaled(const Vector& x, double eps) const;

  bool operator==(const Mollifier& other) const {
    return profile_ == other.profile_ && radius_ == other.radius_ && table_ == other.table_;
  }

 private:
  Mollifier(Profile p, double r) : profile_(p), radius_(r) {}
  Profile profile_;
  double radius_;
  std::vector<double> table_;
};

struct KernelSpec;

struct ExplicitKernel {
  Matrix entries;
};

/// gamma^2 log+ (1/|t-s|) + g(t,s). The diagonal is capped at the cell
/// scale: K(t,t) = gamma^2 log+(2/h) + g(t,t), with h the largest grid
/// spacing.
struct LogKernel {
  double gamma = 1.0;
  double g_const = 0.0;
  /// Optional symmetric bounded perturbation; added to g_const. Not serializable.
  std::function<double(const Vector&, const Vector&)> g;
};

/// gamma^2 ∫_lower^C e^{-u|t-s|} du/u. With lower = 1 this is Kahane's
/// family; lower > 1 gives one band of its sigma-positive decomposition.
struct KahaneFamily {
  double C = 16.0;
  double gamma = 1.0;
  double lower = 1.0;
};

struct SigmaPositiveSum {
  std::vector<KernelSpec> levels;
};

struct MollifiedKernel {
  std::shared_ptr<const KernelSpec> base;
  Mollifier mollifier = Mollifier::box();
  double epsilon = 0.0;
};

struct KernelSpec {
  std::variant<ExplicitKernel, LogKernel, KahaneFamily, SigmaPositiveSum, MollifiedKernel> variant;

  std::string tag() const;
};

nlohmann::json to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Mollifier& m);
Mollifier mollifier_from_json(const nlohmann::json& doc);

/// Kernel not PSD on this grid even at the largest jitter.
class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(const std::string& what, double min_eigenvalue)
      : std::runtime_error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// Symmetric covariance matrix on a grid plus a lower Cholesky factor of
/// K + jitter*I. Jitter is the first rung of {0, 1e-12, 1e-10, 1e-8} x max
/// diagonal that factorizes.
class CovMatrix {
 public:
  static CovMatrix factorize(Matrix entries);

  Index size() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }
  const Matrix& factor() const { return factor_; }
  double jitter() const { return jitter_; }
  Vector diagonal() const { return entries_.diagonal(); }
  std::uint64_t id() const { return id_; }

  const std::vector<std::string>& diagnostics() const { return diagnostics_; }
  void add_diagnostic(std::string msg) { diagnostics_.push_back(std::move(msg)); }

 private:
  CovMatrix() = default;
  Matrix entries_;
  Matrix factor_;
  double jitter_ = 0.0;
  std::uint64_t id_ = 0;
  std::vector<std::string> diagnostics_;
};

inline constexpr double kJitterLadder[] = {0.0, 1e-12, 1e-10, 1e-8};

/// Pointwise kernel evaluation on the grid without factorization. The upper
/// triangle is computed and mirrored so the result is bitwise symmetric.
Matrix kernel_matrix(const KernelSpec& spec, const DomainGrid& grid);
CovMatrix eval_kernel(const KernelSpec& spec, const DomainGrid& grid);

/// Single-pair evaluation for stationary variants (Log, Kahane). For
/// LogKernel at t == s this applies the diagonal cap for spacing `h`.
double kernel_value(const LogKernel& k, const Vector& t, const Vector& s, double h);
double kernel_value(const KahaneFamily& k, const Vector& t, const Vector& s);

/// Geometric cutoffs C_k = C^{k/levels} unless `cutoffs` (1 = C_0 < ... < C_L = C)
/// is supplied.
std::vector<KahaneFamily> sigma_positive_levels(const KahaneFamily& spec, int levels,
                                                std::optional<std::vector<double>> cutoffs = {});
std::vector<CovMatrix> sigma_positive_decompose(const KahaneFamily& spec, const DomainGrid& grid,
                                                int levels,
                                                std::optional<std::vector<double>> cutoffs = {});

/// Row-normalized weights w(t, t') ∝ psi_eps(t - t') for t in `target`, t'
/// in `source`.
Eigen::SparseMatrix<double, Eigen::RowMajor> mollifier_weights(const DomainGrid& target,
                                                               const DomainGrid& source,
                                                               const Mollifier& moll, double eps);

/// W K W^T on the same grid.
CovMatrix mollify_kernel(const CovMatrix& K, const DomainGrid& grid, const Mollifier& moll,
                         double eps);
/// W K W^T with W mapping the (fine) kernel grid onto `target`.
CovMatrix mollify_kernel(const CovMatrix& K, const DomainGrid& kernel_grid,
                         const DomainGrid& target, const Mollifier& moll, double eps);

/// sum_ij K_ij^n mu_i mu_j.
template <typename Derived>
double kernel_moment(const Eigen::MatrixBase<Derived>& K, const Vector& mu, int n) {
  if (n < 1) throw InvalidArgument("kernel moment order must be >= 1");
  CompensatedSum<double> acc;
  for (Index j = 0; j < K.cols(); ++j)
    for (Index i = 0; i < K.rows(); ++i) acc.add(int_pow(K(i, j), n) * mu(i) * mu(j));
  return acc.value();
}
double kernel_moment(const CovMatrix& K, const DomainGrid& grid, int n);

struct ScalingPoint {
  double eps;
  Index grid_cells;
  double sup_value;   // max over box positions of the box-averaged K^n
  double log_power;   // |log eps|^n
  double ratio() const { return sup_value / log_power; }
};

/// Box-smoothed K^n on [0,1] for a dyadic eps ladder. Each eps uses the grid
/// with `cells_per_box` cells per box; successive grids are refinements.
std::vector<ScalingPoint> kernel_moment_scaling(const LogKernel& spec, int n,
                                                const std::vector<double>& eps_ladder,
                                                int cells_per_box = 4);

void write_matrix_csv(std::ostream& os, const Matrix& m);

}  // namespace gmc

#endif  // GMC_KERNEL_HPP
