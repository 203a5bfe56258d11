#ifndef GMC_VERIFY_HPP
#define GMC_VERIFY_HPP

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmc/chaos.hpp"
#include "gmc/common.hpp"
#include "gmc/domain.hpp"
#include "gmc/ensemble.hpp"
#include "gmc/gaussian.hpp"
#include "gmc/kernel.hpp"
#include "gmc/rng.hpp"

namespace gmc {

/// Equal: |e - t| <= tol. AtMost: e - t <= tol. AtLeast: t - e <= tol.
/// Below: e < t - tol (a significant decrease). tol is z*se or abs_tol.
enum class Relation { Equal, AtMost, AtLeast, Below, Informational };
std::string to_string(Relation r);

/// Outcome of one comparison. Statistical reports pass when the estimate
/// lies within z*se of the target in the stated direction; deterministic
/// ones use abs_tol instead. Informational reports always pass.
struct TestReport {
  std::string name;
  double estimate = 0.0;
  double target = 0.0;
  double se = 0.0;
  std::int64_t replicas = 0;
  Relation relation = Relation::Equal;
  bool statistical = true;
  double z = 3.0;
  double abs_tol = 0.0;
  bool pass = false;
  std::map<std::string, std::string> metadata;

  /// Recomputes `pass` from the stored numbers.
  void evaluate();
  TestReport& with(const std::string& key, const std::string& value) {
    metadata[key] = value;
    return *this;
  }
  TestReport& with(const std::string& key, double value) { return with(key, format_double(value)); }
};

TestReport statistical_report(std::string name, double estimate, double target, double se,
                              std::int64_t replicas, double z, Relation rel = Relation::Equal);
TestReport deterministic_report(std::string name, double estimate, double target, double abs_tol,
                                Relation rel = Relation::Equal);
TestReport informational_report(std::string name, double estimate, double target, double se,
                                std::int64_t replicas);

nlohmann::json to_json(const TestReport& r);
void write_jsonl(std::ostream& os, const std::vector<TestReport>& reports);
void print_table(std::ostream& os, const std::vector<TestReport>& reports);
/// Failed non-informational reports.
std::size_t count_failures(const std::vector<TestReport>& reports);

/// Two-sided normal quantile z with P(|Z| > z) = alpha.
double normal_two_sided_quantile(double alpha);
/// z for `comparisons` simultaneous tests at the family-wise level implied by `z`.
double bonferroni_z(double z, std::size_t comparisons);

struct EnsembleSpec {
  CovMatrix cov;
  DomainGrid grid;
  std::int64_t replicas = 100000;
  SeedRecord seed;
  double z = 3.0;
};

using CellSet = std::vector<Index>;
Vector indicator(Index size, const CellSet& cells);

/// sum_ij exp(c1 c2 K_ij) mu_i mu_j, the closed-form E[M_{c1}[T] M_{c2}[T]].
double second_moment_closed_form(const Matrix& K, const Vector& mu, double c1 = 1.0,
                                 double c2 = 1.0);

// --- Chaos identities ------------------------------------------------------

/// E M[A] vs mu[A]; A = all cells when `cells` is empty.
TestReport test_expectation(const EnsembleSpec& spec, const CellSet& cells = {});

/// E[m_i m'_j] vs e^{c1 c2 K_ij} mu_i mu_j, where m is the chaos of c1 Y and
/// m' of c2 Y built from the same sample. One report per pair.
std::vector<TestReport> test_second_moment(const EnsembleSpec& spec,
                                           const std::vector<std::pair<Index, Index>>& pairs,
                                           double c1 = 1.0, double c2 = 1.0);
std::vector<std::pair<Index, Index>> all_unordered_pairs(Index n);

/// Max relative difference between exp(xi).M(X) and M(X + xi) over replicas
/// and unclamped cells; passes at 1e-12.
TestReport test_shift_covariance(const EnsembleSpec& spec, const ShiftVector& xi,
                                 double abs_tol = 1e-12);

/// E[<X,g> M[A]] vs sum_{i in A} (K g)_i mu_i.
TestReport test_peyriere_linear(const EnsembleSpec& spec, const Vector& g, const CellSet& A);
/// E[phi(X_k) M[A]] from chaos samples vs mu[T] E[phi((X + K(.,t))_k) 1_A(t)]
/// from Peyriere draws; independent ensembles, pooled se.
TestReport test_peyriere_bounded(const EnsembleSpec& spec, const std::function<double(double)>& phi,
                                 Index k, const CellSet& A);

struct MollifierComparison {
  std::vector<TestReport> reports;
  std::vector<double> distances;  // D(eps) along the ladder
  std::vector<double> distance_se;
  double mean_mass = 0.0;         // at the last eps
};

/// D(eps) = E|M_{psi1,eps}[T] - M_{psi2,eps}[T]| with both mollifications
/// applied to the same fine sample. `eps_ladder` must be strictly decreasing.
MollifierComparison test_mollifier_independence(const CovMatrix& fine_cov,
                                                const DomainGrid& fine_grid,
                                                const DomainGrid& coarse_grid,
                                                const Mollifier& first, const Mollifier& second,
                                                const std::vector<double>& eps_ladder,
                                                std::int64_t replicas, SeedRecord seed,
                                                double z = 3.0, double fraction = 0.1);

/// Requires K1 <= K2 entrywise. Closed-form second moments plus E f(M1[T])
/// <= E f(M2[T]) for f in {x^2, (x-1)+, x log(1+x)}.
std::vector<TestReport> test_kahane_comparison(const CovMatrix& cov1, const CovMatrix& cov2,
                                               const DomainGrid& grid, std::int64_t replicas,
                                               SeedRecord seed, double z = 3.0);

/// Informational: tail masses E[M[T] 1{M[T] > c}], c in {2, 5, 10}, and the
/// closed-form E M[T]^2 for each gamma < sqrt(2d).
std::vector<TestReport> test_uniform_integrability_diagnostic(const std::vector<double>& gammas,
                                                              double C, const DomainGrid& grid,
                                                              std::int64_t replicas,
                                                              SeedRecord seed);

struct NonatomicityResult {
  std::vector<TestReport> reports;
  std::vector<double> atom_ratio;  // A(N)
  std::vector<double> atom_ratio_se;
  std::vector<double> diagonal_proxy;
};

/// A(N) = E[max_i m_i / M[T]] on each grid; passes when every step down the
/// ladder is a decrease larger than z pooled standard errors.
NonatomicityResult test_nonatomicity(const KernelSpec& kernel,
                                     const std::vector<DomainGrid>& ladder,
                                     std::int64_t replicas, SeedRecord seed, double z = 3.0);
/// sum_i e^{K_ii} mu_i^2.
double diagonal_mass_proxy(const CovMatrix& cov, const DomainGrid& grid);

/// Frozen prefix X_{<=depth} (levels [0, depth)); fresh draws of level
/// `depth`; E[M_{depth+1}[A] | prefix] vs M_depth[A].
TestReport test_martingale(const std::vector<CovMatrix>& levels, const DomainGrid& grid,
                           const CellSet& A, std::size_t depth, std::int64_t replicas,
                           SeedRecord seed, double z = 3.0);
/// E M_n[T] = mu[T] for every n.
std::vector<TestReport> test_martingale_normalization(const std::vector<CovMatrix>& levels,
                                                      const DomainGrid& grid,
                                                      std::int64_t replicas, SeedRecord seed,
                                                      double z = 3.0);

/// Martingale route at full depth vs direct chaos of the summed kernel:
/// first and second moments of M[T] agree.
std::vector<TestReport> test_uniqueness(const std::vector<CovMatrix>& levels,
                                        const DomainGrid& grid, std::int64_t replicas,
                                        SeedRecord seed, double z = 3.0);

// --- Wick calculus ---------------------------------------------------------

/// E[h_n(Z) h_m(Z)] vs n! delta_nm for 0 <= n <= m <= nmax.
std::vector<TestReport> test_hermite_orthogonality(int nmax, std::int64_t draws, SeedRecord seed,
                                                   double z = 3.0);
/// E[W_i] = 0 for the Wick power of order n on every cell.
std::vector<TestReport> test_wick_mean(const EnsembleSpec& spec, int n);
/// E|sum_i W_i mu_i|^2 vs n! sum_ij K_ij^n mu_i mu_j.
TestReport wick_l2_check(const CovMatrix& cov, const DomainGrid& grid, int n,
                         std::int64_t replicas, SeedRecord seed, double z = 3.0);

/// Box-smoothed K^n against |log eps|^n; passes when every ratio is in
/// [1/band, band].
std::vector<TestReport> test_kernel_scaling(const LogKernel& kernel, int n,
                                            const std::vector<double>& eps_ladder,
                                            double band = 2.0, int cells_per_box = 4);

// --- Suites ----------------------------------------------------------------

struct SuiteConfig {
  std::vector<std::string> suites;
  std::optional<std::int64_t> replicas;
  SeedRecord seed{7, 0};
  double z = 3.0;
  bool bonferroni = false;
  /// Kernel and grid for the "custom" suite.
  std::optional<KernelSpec> kernel;
  std::optional<DomainGrid> grid;
};

struct SuiteResult {
  std::vector<TestReport> reports;
  std::size_t comparisons = 0;  // statistical comparisons
  std::size_t failures = 0;
  int exit_code() const { return failures == 0 ? 0 : 1; }
};

const std::vector<std::string>& suite_names();
/// Throws InvalidArgument listing the valid names on an unknown suite.
SuiteResult run_suite(const SuiteConfig& config);

}  // namespace gmc

#endif  // GMC_VERIFY_HPP
