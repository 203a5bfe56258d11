#include "gmc/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

#include "gmc/wick.hpp"

namespace gmc {

std::string to_string(Relation r) {
  switch (r) {
    case Relation::Equal: return "equal";
    case Relation::AtMost: return "at_most";
    case Relation::AtLeast: return "at_least";
    case Relation::Below: return "below";
    case Relation::Informational: return "informational";
  }
  return "unknown";
}

void TestReport::evaluate() {
  if (relation == Relation::Informational) {
    pass = true;
    return;
  }
  const double tol = statistical ? z * se : abs_tol;
  const double d = estimate - target;
  switch (relation) {
    case Relation::Equal: pass = std::abs(d) <= tol; break;
    case Relation::AtMost: pass = d <= tol; break;
    case Relation::AtLeast: pass = -d <= tol; break;
    case Relation::Below: pass = d < -tol; break;
    default: pass = true;
  }
  if (!std::isfinite(estimate) || !std::isfinite(target)) pass = false;
}

TestReport statistical_report(std::string name, double estimate, double target, double se,
                              std::int64_t replicas, double z, Relation rel) {
  TestReport r;
  r.name = std::move(name);
  r.estimate = estimate;
  r.target = target;
  r.se = se;
  r.replicas = replicas;
  r.relation = rel;
  r.statistical = true;
  r.z = z;
  r.evaluate();
  return r;
}

TestReport deterministic_report(std::string name, double estimate, double target, double abs_tol,
                                Relation rel) {
  TestReport r;
  r.name = std::move(name);
  r.estimate = estimate;
  r.target = target;
  r.relation = rel;
  r.statistical = false;
  r.abs_tol = abs_tol;
  r.evaluate();
  return r;
}

TestReport informational_report(std::string name, double estimate, double target, double se,
                                std::int64_t replicas) {
  TestReport r;
  r.name = std::move(name);
  r.estimate = estimate;
  r.target = target;
  r.se = se;
  r.replicas = replicas;
  r.relation = Relation::Informational;
  r.statistical = se > 0.0;
  r.pass = true;
  return r;
}

nlohmann::json to_json(const TestReport& r) {
  nlohmann::json meta(nlohmann::json::value_t::object);
  for (const auto& [k, v] : r.metadata) meta[k] = v;
  meta["z"] = format_double(r.z);
  meta["abs_tol"] = format_double(r.abs_tol);
  nlohmann::json j = {{"test", r.name},
                      {"estimate", r.estimate},
                      {"target", r.target},
                      {"se", r.se},
                      {"replicas", r.replicas},
                      {"relation", to_string(r.relation)},
                      {"statistical", r.statistical},
                      {"verdict", r.pass ? "pass" : "fail"},
                      {"metadata", meta}};
  if (auto it = r.metadata.find("n"); it != r.metadata.end()) j["n"] = std::stoi(it->second);
  return j;
}

void write_jsonl(std::ostream& os, const std::vector<TestReport>& reports) {
  for (const auto& r : reports) os << to_json(r).dump() << '\n';
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void print_table(std::ostream& os, const std::vector<TestReport>& reports) {
  std::size_t width = 4;
  for (const auto& r : reports) width = std::max(width, r.name.size());
  os << std::left << std::setw(static_cast<int>(width)) << "test" << "  " << std::right
     << std::setw(13) << "estimate" << std::setw(13) << "target" << std::setw(12) << "se"
     << std::setw(9) << "replicas" << "  verdict\n";
  for (const auto& r : reports) {
    os << std::left << std::setw(static_cast<int>(width)) << r.name << "  " << std::right
       << std::setw(13) << fmt(r.estimate) << std::setw(13) << fmt(r.target) << std::setw(12)
       << fmt(r.se) << std::setw(9) << r.replicas << "  "
       << (r.relation == Relation::Informational ? "info" : (r.pass ? "PASS" : "FAIL")) << '\n';
  }
}

std::size_t count_failures(const std::vector<TestReport>& reports) {
  return static_cast<std::size_t>(std::count_if(reports.begin(), reports.end(), [](const auto& r) {
    return r.relation != Relation::Informational && !r.pass;
  }));
}

double normal_two_sided_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must be in (0, 1)");
  double lo = 0.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > alpha) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double bonferroni_z(double z, std::size_t comparisons) {
  if (comparisons <= 1) return z;
  const double alpha = std::erfc(z / std::sqrt(2.0));
  return normal_two_sided_quantile(alpha / static_cast<double>(comparisons));
}

Vector indicator(Index size, const CellSet& cells) {
  Vector v = Vector::Zero(size);
  for (Index c : cells) {
    if (c < 0 || c >= size) throw InvalidArgument("cell index out of range");
    v(c) = 1.0;
  }
  return v;
}

double second_moment_closed_form(const Matrix& K, const Vector& mu, double c1, double c2) {
  CompensatedSum<double> acc;
  const double c = c1 * c2;
  for (Index j = 0; j < K.cols(); ++j)
    for (Index i = 0; i < K.rows(); ++i) acc.add(std::exp(c * K(i, j)) * mu(i) * mu(j));
  return acc.value();
}

namespace {

void check_spec(const EnsembleSpec& spec) {
  if (spec.replicas < 1) throw InvalidArgument("replicas must be >= 1");
  if (spec.cov.size() != spec.grid.size()) throw InvalidArgument("kernel and grid sizes differ");
}

std::string seed_text(SeedRecord s) { return hex64(s.key) + ":" + hex64(s.stream); }

void tag(TestReport& r, const EnsembleSpec& spec) {
  r.with("N", std::to_string(spec.grid.size())).with("seed", seed_text(spec.seed));
}

struct Sampler {
  const CovMatrix& cov;
  Vector latent, values;
  void draw(SeedRecord s) { sample_into(cov, s, latent, values); }
};

std::string cells_text(const CellSet& cells) {
  if (cells.empty()) return "all";
  std::string s;
  for (std::size_t k = 0; k < cells.size(); ++k) s += (k ? " " : "") + std::to_string(cells[k]);
  return s;
}

}  // namespace

TestReport test_expectation(const EnsembleSpec& spec, const CellSet& cells) {
  check_spec(spec);
  const Index n = spec.grid.size();
  Vector ind = cells.empty() ? Vector::Ones(n) : indicator(n, cells);
  const Vector& mu = spec.grid.cell_measure();
  const Vector var = spec.cov.diagonal();
  const double target = compensated_sum(ind.cwiseProduct(mu));
  auto stats = reduce_replicas(spec.replicas, spec.seed, RunningStats{},
                               [&](RunningStats& acc, std::int64_t, SeedRecord s) {
                                 Sampler sm{spec.cov, {}, {}};
                                 sm.draw(s);
                                 Vector w(n);
                                 chaos_weights(sm.values, var, mu, 1.0, w);
                                 acc.add(compensated_sum(ind.cwiseProduct(w)));
                               });
  auto r = statistical_report("expectation", stats.mean(), target, stats.se(), stats.count(),
                              spec.z);
  tag(r, spec);
  r.with("cells", cells_text(cells));
  return r;
}

std::vector<std::pair<Index, Index>> all_unordered_pairs(Index n) {
  std::vector<std::pair<Index, Index>> out;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) out.emplace_back(i, j);
  return out;
}

std::vector<TestReport> test_second_moment(const EnsembleSpec& spec,
                                           const std::vector<std::pair<Index, Index>>& pairs,
                                           double c1, double c2) {
  check_spec(spec);
  if (!(std::abs(c1) <= 1.0 && std::abs(c2) <= 1.0))
    throw InvalidArgument("scaled chaos needs |c| <= 1");
  const Index n = spec.grid.size();
  for (const auto& [i, j] : pairs)
    if (i < 0 || j < 0 || i >= n || j >= n) throw InvalidArgument("pair index out of range");
  const Vector& mu = spec.grid.cell_measure();
  const Vector var = spec.cov.diagonal();
  auto bank = reduce_replicas(spec.replicas, spec.seed, StatsBank(pairs.size()),
                              [&](StatsBank& acc, std::int64_t, SeedRecord s) {
                                Sampler sm{spec.cov, {}, {}};
                                sm.draw(s);
                                Vector a(n), b(n);
                                chaos_weights(sm.values, var, mu, c1, a);
                                chaos_weights(sm.values, var, mu, c2, b);
                                for (std::size_t p = 0; p < pairs.size(); ++p)
                                  acc[p].add(a(pairs[p].first) * b(pairs[p].second));
                              });
  std::vector<TestReport> out;
  const Matrix& K = spec.cov.entries();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    const double target = std::exp(c1 * c2 * K(i, j)) * mu(i) * mu(j);
    auto r = statistical_report("second_moment", bank[p].mean(), target, bank[p].se(),
                                bank[p].count(), spec.z);
    tag(r, spec);
    r.with("i", std::to_string(i)).with("j", std::to_string(j)).with("c1", c1).with("c2", c2);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

struct MaxAcc {
  double max_rel = 0.0;
  std::int64_t skipped = 0;
  std::int64_t count = 0;
  void merge(const MaxAcc& o) {
    max_rel = std::max(max_rel, o.max_rel);
    skipped += o.skipped;
    count += o.count;
  }
};

}  // namespace

TestReport test_shift_covariance(const EnsembleSpec& spec, const ShiftVector& xi,
                                 double abs_tol) {
  check_spec(spec);
  const Index n = spec.grid.size();
  if (xi.field_repr.size() != n) throw InvalidArgument("shift size mismatch");
  const Vector var = spec.cov.diagonal();
  const auto acc = reduce_replicas(
      spec.replicas, spec.seed, MaxAcc{}, [&](MaxAcc& a, std::int64_t, SeedRecord s) {
        FieldSample x = sample_field(spec.cov, s);
        const ChaosMeasure base = build_chaos(x, spec.cov, spec.grid);
        const ChaosMeasure reweighted = reweight_shift(base, xi);
        const ChaosMeasure recomputed =
            build_chaos(cameron_martin_shift(x, xi), spec.cov, spec.grid);
        for (Index i = 0; i < n; ++i) {
          const double e0 = x.values(i) - 0.5 * var(i);
          const double e1 = e0 + xi.field_repr(i);
          if (std::abs(e0) > kExponentClamp || std::abs(e1) > kExponentClamp ||
              std::abs(xi.field_repr(i)) > kExponentClamp) {
            ++a.skipped;
            continue;
          }
          const double ref = recomputed.weights(i);
          const double diff = std::abs(reweighted.weights(i) - ref);
          const double rel = ref != 0.0 ? diff / std::abs(ref) : diff;
          a.max_rel = std::max(a.max_rel, rel);
        }
        ++a.count;
      });
  auto r = deterministic_report("shift_covariance", acc.max_rel, 0.0, abs_tol);
  r.replicas = acc.count;
  tag(r, spec);
  r.with("clamped_cells_skipped", std::to_string(acc.skipped))
      .with("h_norm_sq", xi.h_norm_sq);
  return r;
}

TestReport test_peyriere_linear(const EnsembleSpec& spec, const Vector& g, const CellSet& A) {
  check_spec(spec);
  const Index n = spec.grid.size();
  if (g.size() != n) throw InvalidArgument("g size mismatch");
  const Vector ind = A.empty() ? Vector::Ones(n) : indicator(n, A);
  const Vector& mu = spec.grid.cell_measure();
  const Vector var = spec.cov.diagonal();
  const Vector Kg = spec.cov.entries() * g;
  const double target = compensated_sum(ind.cwiseProduct(Kg).cwiseProduct(mu));
  auto stats = reduce_replicas(spec.replicas, spec.seed, RunningStats{},
                               [&](RunningStats& acc, std::int64_t, SeedRecord s) {
                                 Sampler sm{spec.cov, {}, {}};
                                 sm.draw(s);
                                 Vector w(n);
                                 chaos_weights(sm.values, var, mu, 1.0, w);
                                 acc.add(sm.values.dot(g) * compensated_sum(ind.cwiseProduct(w)));
                               });
  auto r = statistical_report("peyriere_linear", stats.mean(), target, stats.se(), stats.count(),
                              spec.z);
  tag(r, spec);
  r.with("cells", cells_text(A));
  return r;
}

TestReport test_peyriere_bounded(const EnsembleSpec& spec, const std::function<double(double)>& phi,
                                 Index k, const CellSet& A) {
  check_spec(spec);
  const Index n = spec.grid.size();
  if (k < 0 || k >= n) throw InvalidArgument("coordinate index out of range");
  const Vector ind = A.empty() ? Vector::Ones(n) : indicator(n, A);
  const Vector& mu = spec.grid.cell_measure();
  const Vector var = spec.cov.diagonal();
  const double total = spec.grid.total_measure();
  const auto lhs = reduce_replicas(spec.replicas, spec.seed.child(0), RunningStats{},
                                   [&](RunningStats& acc, std::int64_t, SeedRecord s) {
                                     Sampler sm{spec.cov, {}, {}};
                                     sm.draw(s);
                                     Vector w(n);
                                     chaos_weights(sm.values, var, mu, 1.0, w);
                                     acc.add(phi(sm.values(k)) *
                                             compensated_sum(ind.cwiseProduct(w)));
                                   });
  const auto rhs = reduce_replicas(spec.replicas, spec.seed.child(1), RunningStats{},
                                   [&](RunningStats& acc, std::int64_t, SeedRecord s) {
                                     const PeyriereDraw d = peyriere_sample(spec.cov, spec.grid, s);
                                     acc.add(total * phi(d.field.values(k)) * ind(d.cell));
                                   });
  const double se = std::hypot(lhs.se(), rhs.se());
  auto r = statistical_report("peyriere_bounded", lhs.mean() - rhs.mean(), 0.0, se,
                              lhs.count(), spec.z);
  tag(r, spec);
  r.with("lhs", lhs.mean()).with("rhs", rhs.mean()).with("k", std::to_string(k))
      .with("cells", cells_text(A));
  return r;
}

namespace {

/// diag(W K W^T) without forming the product.
Vector mollified_variance(const Eigen::SparseMatrix<double, Eigen::RowMajor>& W, const Matrix& K) {
  const Matrix WK = W * K;
  Vector v(W.rows());
  for (Index i = 0; i < W.rows(); ++i) {
    double s = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(W, i); it; ++it)
      s += WK(i, it.col()) * it.value();
    v(i) = s;
  }
  return v;
}

struct MollAcc {
  StatsBank dist;
  RunningStats mass;
  void merge(const MollAcc& o) {
    dist.merge(o.dist);
    mass.merge(o.mass);
  }
};

}  // namespace

MollifierComparison test_mollifier_independence(const CovMatrix& fine_cov,
                                                const DomainGrid& fine_grid,
                                                const DomainGrid& coarse_grid,
                                                const Mollifier& first, const Mollifier& second,
                                                const std::vector<double>& eps_ladder,
                                                std::int64_t replicas, SeedRecord seed,
                                                double z, double fraction) {
  if (eps_ladder.empty()) throw InvalidArgument("eps ladder is empty");
  for (std::size_t k = 0; k < eps_ladder.size(); ++k) {
    if (!(eps_ladder[k] > 0.0)) throw InvalidArgument("eps must be > 0");
    if (k > 0 && !(eps_ladder[k] < eps_ladder[k - 1]))
      throw InvalidArgument("eps ladder must be strictly decreasing");
  }
  if (fine_cov.size() != fine_grid.size()) throw InvalidArgument("kernel and grid sizes differ");
  if (!refines(fine_grid, coarse_grid))
    throw InvalidArgument("fine grid does not refine the coarse grid");
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  const std::size_t L = eps_ladder.size();
  std::vector<Sparse> W1, W2;
  std::vector<Vector> v1, v2;
  for (double eps : eps_ladder) {
    W1.push_back(mollifier_weights(coarse_grid, fine_grid, first, eps));
    W2.push_back(mollifier_weights(coarse_grid, fine_grid, second, eps));
    v1.push_back(mollified_variance(W1.back(), fine_cov.entries()));
    v2.push_back(mollified_variance(W2.back(), fine_cov.entries()));
  }
  const Vector& mu = coarse_grid.cell_measure();
  const Index nc = coarse_grid.size();
  MollAcc init{StatsBank(L), {}};
  const auto acc = reduce_replicas(replicas, seed, init, [&](MollAcc& a, std::int64_t, SeedRecord s) {
    Sampler sm{fine_cov, {}, {}};
    sm.draw(s);
    Vector x1(nc), x2(nc), w1(nc), w2(nc);
    for (std::size_t k = 0; k < L; ++k) {
      x1.noalias() = W1[k] * sm.values;
      x2.noalias() = W2[k] * sm.values;
      chaos_weights(x1, v1[k], mu, 1.0, w1);
      chaos_weights(x2, v2[k], mu, 1.0, w2);
      const double m1 = compensated_sum(w1);
      a.dist[k].add(std::abs(m1 - compensated_sum(w2)));
      if (k + 1 == L) a.mass.add(m1);
    }
  });

  MollifierComparison out;
  out.mean_mass = acc.mass.mean();
  for (std::size_t k = 0; k < L; ++k) {
    out.distances.push_back(acc.dist[k].mean());
    out.distance_se.push_back(acc.dist[k].se());
    auto r = informational_report("mollifier_distance", acc.dist[k].mean(), 0.0, acc.dist[k].se(),
                                  acc.dist[k].count());
    r.with("eps", eps_ladder[k]).with("psi1", first.name()).with("psi2", second.name());
    out.reports.push_back(std::move(r));
  }
  int point_inversions = 0, significant = 0;
  for (std::size_t k = 1; k < L; ++k) {
    const double d = out.distances[k] - out.distances[k - 1];
    const double se = std::hypot(out.distance_se[k], out.distance_se[k - 1]);
    if (d > 0.0) ++point_inversions;
    if (d > z * se) ++significant;
  }
  auto inv = deterministic_report("mollifier_inversions", point_inversions, 1.0, 0.0,
                                  Relation::AtMost);
  inv.replicas = replicas;
  inv.with("significant_inversions", std::to_string(significant)).with("z", z);
  out.reports.push_back(std::move(inv));
  auto sig = deterministic_report("mollifier_significant_inversions", significant, 0.0, 0.0);
  sig.replicas = replicas;
  out.reports.push_back(std::move(sig));
  auto last = deterministic_report("mollifier_final_distance", out.distances.back(),
                                   fraction * out.mean_mass, 0.0, Relation::AtMost);
  last.se = out.distance_se.back();
  last.replicas = replicas;
  last.with("fraction", fraction).with("mean_mass", out.mean_mass).with("eps", eps_ladder.back());
  out.reports.push_back(std::move(last));
  for (auto& r : out.reports) r.with("seed", seed_text(seed));
  return out;
}

std::vector<TestReport> test_kahane_comparison(const CovMatrix& cov1, const CovMatrix& cov2,
                                               const DomainGrid& grid, std::int64_t replicas,
                                               SeedRecord seed, double z) {
  const Index n = grid.size();
  if (cov1.size() != n || cov2.size() != n) throw InvalidArgument("kernel and grid sizes differ");
  const Matrix diff = cov1.entries() - cov2.entries();
  Index wi = 0, wj = 0;
  const double worst = diff.maxCoeff(&wi, &wj);
  if (worst > 0.0) {
    throw InvalidArgument("Kahane comparison needs K1 <= K2 entrywise; worst pair (" +
                          std::to_string(wi) + ", " + std::to_string(wj) + ") exceeds by " +
                          format_double(worst));
  }
  const Vector& mu = grid.cell_measure();
  std::vector<TestReport> out;
  const double s1 = second_moment_closed_form(cov1.entries(), mu);
  const double s2 = second_moment_closed_form(cov2.entries(), mu);
  auto det = deterministic_report("kahane_closed_form", s1, s2, 0.0, Relation::AtMost);
  det.with("N", std::to_string(n));
  out.push_back(std::move(det));

  const std::vector<std::pair<std::string, std::function<double(double)>>> fs = {
      {"x^2", [](double x) { return x * x; }},
      {"(x-1)+", [](double x) { return std::max(x - 1.0, 0.0); }},
      {"x*log(1+x)", [](double x) { return x * std::log1p(x); }}};
  const Vector var1 = cov1.diagonal(), var2 = cov2.diagonal();
  struct Acc {
    StatsBank diff, a, b;
    void merge(const Acc& o) {
      diff.merge(o.diff);
      a.merge(o.a);
      b.merge(o.b);
    }
  };
  Acc init{StatsBank(fs.size()), StatsBank(fs.size()), StatsBank(fs.size())};
  const auto acc = reduce_replicas(replicas, seed, init, [&](Acc& a, std::int64_t, SeedRecord s) {
    RandomStream rs(s);
    Vector zv(n);
    rs.fill_normal(zv);
    Vector x1 = cov1.factor().triangularView<Eigen::Lower>() * zv;
    Vector x2 = cov2.factor().triangularView<Eigen::Lower>() * zv;
    Vector w1(n), w2(n);
    chaos_weights(x1, var1, mu, 1.0, w1);
    chaos_weights(x2, var2, mu, 1.0, w2);
    const double m1 = compensated_sum(w1), m2 = compensated_sum(w2);
    for (std::size_t k = 0; k < fs.size(); ++k) {
      const double f1 = fs[k].second(m1), f2 = fs[k].second(m2);
      a.diff[k].add(f1 - f2);
      a.a[k].add(f1);
      a.b[k].add(f2);
    }
  });
  for (std::size_t k = 0; k < fs.size(); ++k) {
    auto r = statistical_report("kahane_convex", acc.diff[k].mean(), 0.0, acc.diff[k].se(),
                                acc.diff[k].count(), z, Relation::AtMost);
    r.with("f", fs[k].first).with("E_f_M1", acc.a[k].mean()).with("E_f_M2", acc.b[k].mean())
        .with("N", std::to_string(n)).with("seed", seed_text(seed));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TestReport> test_uniform_integrability_diagnostic(const std::vector<double>& gammas,
                                                              double C, const DomainGrid& grid,
                                                              std::int64_t replicas,
                                                              SeedRecord seed) {
  const double bound = std::sqrt(2.0 * grid.dim());
  for (double g : gammas) {
    if (!(g >= 0.0)) throw InvalidArgument("gamma must be >= 0");
    if (g >= bound)
      throw InvalidArgument("gamma " + format_double(g) + " is not subcritical: need gamma < sqrt(2d) = " +
                            format_double(bound));
  }
  const std::vector<double> cs = {2.0, 5.0, 10.0};
  const Vector& mu = grid.cell_measure();
  const Index n = grid.size();
  std::vector<TestReport> out;
  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    const double g = gammas[gi];
    const CovMatrix cov = eval_kernel(KernelSpec{KahaneFamily{C, g, 1.0}}, grid);
    const Vector var = cov.diagonal();
    auto bank = reduce_replicas(replicas, seed.child(gi), StatsBank(cs.size()),
                                [&](StatsBank& acc, std::int64_t, SeedRecord s) {
                                  Sampler sm{cov, {}, {}};
                                  sm.draw(s);
                                  Vector w(n);
                                  chaos_weights(sm.values, var, mu, 1.0, w);
                                  const double m = compensated_sum(w);
                                  for (std::size_t k = 0; k < cs.size(); ++k)
                                    acc[k].add(m > cs[k] ? m : 0.0);
                                });
    for (std::size_t k = 0; k < cs.size(); ++k) {
      auto r = informational_report("ui_tail_mass", bank[k].mean(), 0.0, bank[k].se(),
                                    bank[k].count());
      r.with("gamma", g).with("C", C).with("c", cs[k]).with("seed", seed_text(seed.child(gi)));
      out.push_back(std::move(r));
    }
    auto r = informational_report("ui_second_moment", second_moment_closed_form(cov.entries(), mu),
                                  0.0, 0.0, 0);
    r.with("gamma", g).with("C", C);
    out.push_back(std::move(r));
  }
  return out;
}

double diagonal_mass_proxy(const CovMatrix& cov, const DomainGrid& grid) {
  const Vector& mu = grid.cell_measure();
  CompensatedSum<double> acc;
  for (Index i = 0; i < mu.size(); ++i) acc.add(std::exp(cov.entries()(i, i)) * mu(i) * mu(i));
  return acc.value();
}

NonatomicityResult test_nonatomicity(const KernelSpec& kernel,
                                     const std::vector<DomainGrid>& ladder,
                                     std::int64_t replicas, SeedRecord seed, double z) {
  if (ladder.empty()) throw InvalidArgument("refinement ladder is empty");
  NonatomicityResult out;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    const DomainGrid& grid = ladder[k];
    const CovMatrix cov = eval_kernel(kernel, grid);
    const Vector& mu = grid.cell_measure();
    const Vector var = cov.diagonal();
    const Index n = grid.size();
    const auto st = reduce_replicas(replicas, seed.child(k), RunningStats{},
                                    [&](RunningStats& acc, std::int64_t, SeedRecord s) {
                                      Sampler sm{cov, {}, {}};
                                      sm.draw(s);
                                      Vector w(n);
                                      chaos_weights(sm.values, var, mu, 1.0, w);
                                      acc.add(w.maxCoeff() / compensated_sum(w));
                                    });
    out.atom_ratio.push_back(st.mean());
    out.atom_ratio_se.push_back(st.se());
    out.diagonal_proxy.push_back(diagonal_mass_proxy(cov, grid));
    auto r = informational_report("atom_ratio", st.mean(), 0.0, st.se(), st.count());
    r.with("N", std::to_string(n)).with("diagonal_proxy", out.diagonal_proxy.back())
        .with("seed", seed_text(seed.child(k)));
    out.reports.push_back(std::move(r));
  }
  for (std::size_t k = 1; k < ladder.size(); ++k) {
    const double se = std::hypot(out.atom_ratio_se[k], out.atom_ratio_se[k - 1]);
    auto r = statistical_report("atom_ratio_decrease", out.atom_ratio[k] - out.atom_ratio[k - 1],
                                0.0, se, replicas, z, Relation::Below);
    r.with("N_from", std::to_string(ladder[k - 1].size()))
        .with("N_to", std::to_string(ladder[k].size()));
    out.reports.push_back(std::move(r));
  }
  return out;
}

namespace {

void check_levels(const std::vector<CovMatrix>& levels, const DomainGrid& grid) {
  if (levels.empty()) throw InvalidArgument("martingale needs at least one level");
  for (const auto& l : levels)
    if (l.size() != grid.size()) throw InvalidArgument("level size does not match grid");
}

}  // namespace

TestReport test_martingale(const std::vector<CovMatrix>& levels, const DomainGrid& grid,
                           const CellSet& A, std::size_t depth, std::int64_t replicas,
                           SeedRecord seed, double z) {
  check_levels(levels, grid);
  if (depth < 1 || depth >= levels.size())
    throw InvalidArgument("martingale depth must be in [1, levels)");
  const Index n = grid.size();
  const Vector ind = A.empty() ? Vector::Ones(n) : indicator(n, A);
  const Vector& mu = grid.cell_measure();
  Vector prefix = Vector::Zero(n), pvar = Vector::Zero(n), latent, values;
  const SeedRecord prefix_seed = seed.child(0);
  for (std::size_t k = 0; k < depth; ++k) {
    sample_into(levels[k], prefix_seed.child(k), latent, values);
    prefix += values;
    pvar += levels[k].diagonal();
  }
  Vector w(n);
  chaos_weights(prefix, pvar, mu, 1.0, w);
  const double frozen = compensated_sum(ind.cwiseProduct(w));
  const CovMatrix& top = levels[depth];
  const Vector var = pvar + top.diagonal();
  const auto st = reduce_replicas(replicas, seed.child(1), RunningStats{},
                                  [&](RunningStats& acc, std::int64_t, SeedRecord s) {
                                    Sampler sm{top, {}, {}};
                                    sm.draw(s);
                                    Vector x = prefix + sm.values;
                                    Vector ww(n);
                                    chaos_weights(x, var, mu, 1.0, ww);
                                    acc.add(compensated_sum(ind.cwiseProduct(ww)));
                                  });
  auto r = statistical_report("martingale", st.mean(), frozen, st.se(), st.count(), z);
  r.with("depth", std::to_string(depth)).with("N", std::to_string(n))
      .with("cells", cells_text(A)).with("seed", seed_text(seed));
  return r;
}

std::vector<TestReport> test_martingale_normalization(const std::vector<CovMatrix>& levels,
                                                      const DomainGrid& grid,
                                                      std::int64_t replicas, SeedRecord seed,
                                                      double z) {
  check_levels(levels, grid);
  const std::size_t L = levels.size();
  const auto bank = reduce_replicas(replicas, seed, StatsBank(L),
                                    [&](StatsBank& acc, std::int64_t, SeedRecord s) {
                                      const auto seq = martingale_sequence(levels, grid, s);
                                      for (std::size_t k = 0; k < L; ++k)
                                        acc[k].add(seq[k].total_mass());
                                    });
  std::vector<TestReport> out;
  for (std::size_t k = 0; k < L; ++k) {
    auto r = statistical_report("martingale_normalization", bank[k].mean(), grid.total_measure(),
                                bank[k].se(), bank[k].count(), z);
    r.with("level", std::to_string(k + 1)).with("N", std::to_string(grid.size()))
        .with("seed", seed_text(seed));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TestReport> test_uniqueness(const std::vector<CovMatrix>& levels,
                                        const DomainGrid& grid, std::int64_t replicas,
                                        SeedRecord seed, double z) {
  check_levels(levels, grid);
  Matrix sum = Matrix::Zero(grid.size(), grid.size());
  for (const auto& l : levels) sum += l.entries();
  const CovMatrix direct = CovMatrix::factorize(sum);
  struct Acc {
    RunningStats m1, m2;
    void merge(const Acc& o) {
      m1.merge(o.m1);
      m2.merge(o.m2);
    }
  };
  const auto route_a = reduce_replicas(replicas, seed.child(0), Acc{},
                                       [&](Acc& a, std::int64_t, SeedRecord s) {
                                         const double m =
                                             martingale_sequence(levels, grid, s).back().total_mass();
                                         a.m1.add(m);
                                         a.m2.add(m * m);
                                       });
  const auto route_b = reduce_replicas(replicas, seed.child(1), Acc{},
                                       [&](Acc& a, std::int64_t, SeedRecord s) {
                                         const double m =
                                             build_chaos(sample_field(direct, s), direct, grid)
                                                 .total_mass();
                                         a.m1.add(m);
                                         a.m2.add(m * m);
                                       });
  std::vector<TestReport> out;
  auto r1 = statistical_report("uniqueness_first_moment", route_a.m1.mean() - route_b.m1.mean(),
                               0.0, std::hypot(route_a.m1.se(), route_b.m1.se()), replicas, z);
  r1.with("martingale", route_a.m1.mean()).with("direct", route_b.m1.mean());
  auto r2 = statistical_report("uniqueness_second_moment", route_a.m2.mean() - route_b.m2.mean(),
                               0.0, std::hypot(route_a.m2.se(), route_b.m2.se()), replicas, z);
  r2.with("martingale", route_a.m2.mean()).with("direct", route_b.m2.mean())
      .with("closed_form", second_moment_closed_form(sum, grid.cell_measure()));
  for (auto* r : {&r1, &r2})
    r->with("levels", std::to_string(levels.size())).with("N", std::to_string(grid.size()))
        .with("seed", seed_text(seed));
  out.push_back(std::move(r1));
  out.push_back(std::move(r2));
  return out;
}

std::vector<TestReport> test_hermite_orthogonality(int nmax, std::int64_t draws, SeedRecord seed,
                                                   double z) {
  if (nmax < 0 || nmax > kHermiteMaxOrder) throw InvalidArgument("Hermite order out of range");
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a <= nmax; ++a)
    for (int b = a; b <= nmax; ++b) pairs.emplace_back(a, b);
  const auto bank = reduce_replicas(draws, seed, StatsBank(pairs.size()),
                                    [&](StatsBank& acc, std::int64_t, SeedRecord s) {
                                      RandomStream rs(s);
                                      const double x = rs.normal();
                                      std::vector<double> h(static_cast<std::size_t>(nmax) + 1);
                                      for (int k = 0; k <= nmax; ++k) h[k] = hermite(k, x);
                                      for (std::size_t p = 0; p < pairs.size(); ++p)
                                        acc[p].add(h[pairs[p].first] * h[pairs[p].second]);
                                    });
  std::vector<TestReport> out;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [a, b] = pairs[p];
    const double target = a == b ? factorial(a) : 0.0;
    auto r = statistical_report("hermite_orthogonality", bank[p].mean(), target, bank[p].se(),
                                bank[p].count(), z);
    r.with("n", std::to_string(a)).with("m", std::to_string(b)).with("seed", seed_text(seed));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TestReport> test_wick_mean(const EnsembleSpec& spec, int n) {
  check_spec(spec);
  const Index N = spec.grid.size();
  const Vector var = spec.cov.diagonal();
  const auto bank = reduce_replicas(spec.replicas, spec.seed, StatsBank(static_cast<std::size_t>(N)),
                                    [&](StatsBank& acc, std::int64_t, SeedRecord s) {
                                      Sampler sm{spec.cov, {}, {}};
                                      sm.draw(s);
                                      for (Index i = 0; i < N; ++i)
                                        acc[static_cast<std::size_t>(i)].add(
                                            var(i) == 0.0 && n >= 1
                                                ? 0.0
                                                : wick_power(n, sm.values(i), var(i)));
                                    });
  std::vector<TestReport> out;
  for (Index i = 0; i < N; ++i) {
    const auto& st = bank[static_cast<std::size_t>(i)];
    auto r = statistical_report("wick_mean", st.mean(), n == 0 ? 1.0 : 0.0, st.se(), st.count(),
                                spec.z);
    tag(r, spec);
    r.with("n", std::to_string(n)).with("cell", std::to_string(i));
    out.push_back(std::move(r));
  }
  return out;
}

TestReport wick_l2_check(const CovMatrix& cov, const DomainGrid& grid, int n,
                         std::int64_t replicas, SeedRecord seed, double z) {
  if (replicas < 10000) throw InvalidArgument("wick_l2_check needs at least 1e4 replicas");
  if (n < 1 || n > kHermiteMaxOrder) throw InvalidArgument("Wick order out of range");
  if (cov.size() != grid.size()) throw InvalidArgument("kernel and grid sizes differ");
  const Vector& mu = grid.cell_measure();
  const Vector var = cov.diagonal();
  const Index N = grid.size();
  const double target = factorial(n) * kernel_moment(cov.entries(), mu, n);
  const auto st = reduce_replicas(replicas, seed, RunningStats{},
                                  [&](RunningStats& acc, std::int64_t, SeedRecord s) {
                                    Sampler sm{cov, {}, {}};
                                    sm.draw(s);
                                    CompensatedSum<double> S;
                                    for (Index i = 0; i < N; ++i)
                                      if (var(i) != 0.0)
                                        S.add(wick_power(n, sm.values(i), var(i)) * mu(i));
                                    acc.add(S.value() * S.value());
                                  });
  auto r = statistical_report("wick_l2", st.mean(), target, st.se(), st.count(), z);
  r.with("n", std::to_string(n)).with("N", std::to_string(N)).with("seed", seed_text(seed));
  return r;
}

std::vector<TestReport> test_kernel_scaling(const LogKernel& kernel, int n,
                                            const std::vector<double>& eps_ladder, double band,
                                            int cells_per_box) {
  if (!(band > 1.0)) throw InvalidArgument("band must be > 1");
  const auto pts = kernel_moment_scaling(kernel, n, eps_ladder, cells_per_box);
  std::vector<TestReport> out;
  for (const auto& p : pts) {
    auto r = deterministic_report("kernel_scaling", std::log(p.ratio()), 0.0, std::log(band));
    r.with("n", std::to_string(n)).with("eps", p.eps).with("ratio", p.ratio())
        .with("sup_value", p.sup_value).with("log_power", p.log_power)
        .with("N", std::to_string(p.grid_cells));
    out.push_back(std::move(r));
  }
  return out;
}

// --- Suites ----------------------------------------------------------------

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "all",  "custom", "exact",        "kahane",  "martingale", "mollifier", "moments",
      "nonatomicity", "peyriere", "scaling", "ui", "uniqueness", "wick"};
  return names;
}

namespace {

DomainGrid unit_grid(Index n) { return build_grid(1, Interval{0.0, 1.0}, n); }

CovMatrix two_by_two() {
  Matrix K(2, 2);
  K << 1.0, 0.2, 0.2, 1.0;
  return CovMatrix::factorize(K);
}

CovMatrix zero_cov(Index n) { return CovMatrix::factorize(Matrix::Zero(n, n)); }

std::int64_t reps(const SuiteConfig& c, std::int64_t dflt) { return c.replicas.value_or(dflt); }

void append(std::vector<TestReport>& out, std::vector<TestReport> more) {
  for (auto& r : more) out.push_back(std::move(r));
}

std::vector<Vector> random_test_functions(Index n, int count, SeedRecord seed) {
  std::vector<Vector> fs;
  for (int k = 0; k < count; ++k) {
    RandomStream rs(seed.child(static_cast<std::uint64_t>(k)));
    Vector f(n);
    rs.fill_normal(f);
    fs.push_back(std::move(f));
  }
  return fs;
}

std::vector<TestReport> suite_exact(const SuiteConfig& c, SeedRecord seed) {
  std::vector<TestReport> out;
  const DomainGrid g2 = unit_grid(2);
  const DomainGrid g64 = unit_grid(64);
  const CovMatrix k2 = two_by_two();
  const CovMatrix kahane = eval_kernel(KernelSpec{KahaneFamily{16.0, 1.0, 1.0}}, g64);
  const std::int64_t n = reps(c, 100);
  int idx = 0;
  for (const auto* pr : {&k2, &kahane}) {
    const DomainGrid& g = pr == &k2 ? g2 : g64;
    const auto fs = random_test_functions(g.size(), 10, seed.child(100 + idx));
    EnsembleSpec spec{*pr, g, n, seed.child(static_cast<std::uint64_t>(idx)), c.z};
    for (std::size_t k = 0; k < fs.size(); ++k) {
      auto r = test_shift_covariance(spec, shift_from_test_function(fs[k], *pr, g));
      r.with("kernel", pr == &k2 ? "explicit_2x2" : "kahane_C16").with("f", std::to_string(k));
      out.push_back(std::move(r));
    }
    ++idx;
  }
  EnsembleSpec zero{zero_cov(2), g2, reps(c, 1000), seed.child(10), c.z};
  auto r0 = test_shift_covariance(zero, shift_from_test_function(Vector::Zero(2), zero.cov, g2));
  r0.with("kernel", "zero");
  out.push_back(std::move(r0));
  auto e = test_expectation(zero);
  e.with("kernel", "zero");
  out.push_back(std::move(e));
  for (auto r : test_second_moment(zero, all_unordered_pairs(2))) {
    r.with("kernel", "zero");
    out.push_back(std::move(r));
  }
  auto p = test_peyriere_linear(zero, Vector::Ones(2), {1});
  p.with("kernel", "zero");
  out.push_back(std::move(p));
  return out;
}

std::vector<TestReport> suite_moments(const SuiteConfig& c, SeedRecord seed) {
  std::vector<TestReport> out;
  const std::int64_t n = reps(c, 100000);
  const DomainGrid g2 = unit_grid(2);
  EnsembleSpec spec{two_by_two(), g2, n, seed.child(0), c.z};
  auto e1 = test_expectation(spec, {0});
  e1.with("kernel", "explicit_2x2");
  out.push_back(std::move(e1));
  auto s = test_second_moment(spec, {{0, 1}, {0, 0}, {1, 1}});
  for (auto& r : s) r.with("kernel", "explicit_2x2");
  append(out, std::move(s));
  auto sc = test_second_moment(spec, {{0, 1}, {0, 0}}, 0.5, 0.8);
  for (auto& r : sc) r.with("kernel", "explicit_2x2");
  append(out, std::move(sc));
  const DomainGrid g64 = unit_grid(64);
  std::uint64_t k = 1;
  for (double gamma : {0.5, 1.0}) {
    EnsembleSpec ks{eval_kernel(KernelSpec{KahaneFamily{64.0, gamma, 1.0}}, g64), g64, n,
                    seed.child(k++), c.z};
    auto r = test_expectation(ks);
    r.with("kernel", "kahane").with("C", 64.0).with("gamma", gamma);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<CovMatrix> default_levels(const DomainGrid& g, double C, double gamma) {
  return sigma_positive_decompose(KahaneFamily{C, gamma, 1.0}, g, 3);
}

CellSet left_half(Index n) {
  CellSet a;
  for (Index i = 0; i < n / 2; ++i) a.push_back(i);
  return a;
}

std::vector<TestReport> suite_martingale(const SuiteConfig& c, SeedRecord seed) {
  const DomainGrid g = unit_grid(64);
  const auto levels = default_levels(g, 8.0, 1.0);
  std::vector<TestReport> out;
  out.push_back(test_martingale(levels, g, left_half(64), 1, reps(c, 10000), seed.child(0), c.z));
  append(out, test_martingale_normalization(levels, g, reps(c, 10000), seed.child(1), c.z));
  return out;
}

std::vector<TestReport> suite_peyriere(const SuiteConfig& c, SeedRecord seed) {
  const DomainGrid g2 = unit_grid(2);
  EnsembleSpec spec{two_by_two(), g2, reps(c, 100000), seed.child(0), c.z};
  std::vector<TestReport> out;
  Vector e1 = Vector::Zero(2);
  e1(0) = 1.0;
  out.push_back(test_peyriere_linear(spec, e1, {1}));
  spec.seed = seed.child(1);
  out.push_back(test_peyriere_bounded(spec, [](double x) { return std::min(x, 3.0); }, 0, {0}));
  return out;
}

std::vector<TestReport> suite_mollifier(const SuiteConfig& c, SeedRecord seed) {
  const DomainGrid fine = unit_grid(512);
  const CovMatrix cov = eval_kernel(KernelSpec{LogKernel{1.0, 0.0, {}}}, fine);
  std::vector<double> ladder;
  for (int k = 2; k <= 6; ++k) ladder.push_back(std::ldexp(1.0, -k));
  return test_mollifier_independence(cov, fine, fine, Mollifier::box(), Mollifier::triangle(),
                                     ladder, reps(c, 10000), seed, c.z)
      .reports;
}

std::vector<TestReport> suite_kahane(const SuiteConfig& c, SeedRecord seed) {
  const DomainGrid g = unit_grid(32);
  const CovMatrix k4 = eval_kernel(KernelSpec{KahaneFamily{4.0, 1.0, 1.0}}, g);
  const CovMatrix k16 = eval_kernel(KernelSpec{KahaneFamily{16.0, 1.0, 1.0}}, g);
  const CovMatrix shifted =
      CovMatrix::factorize(k4.entries() + Matrix::Constant(g.size(), g.size(), 0.1));
  std::vector<TestReport> out;
  auto a = test_kahane_comparison(k4, shifted, g, reps(c, 100000), seed.child(0), c.z);
  for (auto& r : a) r.with("pair", "K+0.1");
  append(out, std::move(a));
  auto b = test_kahane_comparison(k4, k16, g, reps(c, 100000), seed.child(1), c.z);
  for (auto& r : b) r.with("pair", "C4_vs_C16");
  append(out, std::move(b));
  return out;
}

std::vector<TestReport> suite_ui(const SuiteConfig& c, SeedRecord seed) {
  return test_uniform_integrability_diagnostic({0.5, 1.0, 1.3}, 64.0, unit_grid(64),
                                               reps(c, 20000), seed);
}

std::vector<TestReport> suite_nonatomicity(const SuiteConfig& c, SeedRecord seed) {
  std::vector<DomainGrid> ladder = {unit_grid(64), unit_grid(128), unit_grid(256)};
  return test_nonatomicity(KernelSpec{LogKernel{1.0, 0.0, {}}}, ladder, reps(c, 10000), seed, c.z)
      .reports;
}

std::vector<TestReport> suite_wick(const SuiteConfig& c, SeedRecord seed) {
  std::vector<TestReport> out;
  const std::int64_t n = reps(c, 100000);
  append(out, test_hermite_orthogonality(6, n, seed.child(0), c.z));
  const DomainGrid g = build_grid(1, Interval{0.0, 2.0}, 2);
  const CovMatrix k2 = two_by_two();
  for (int order : {2, 3, 4}) {
    EnsembleSpec spec{k2, g, n, seed.child(static_cast<std::uint64_t>(order)), c.z};
    append(out, test_wick_mean(spec, order));
  }
  for (int order : {2, 3})
    out.push_back(wick_l2_check(k2, g, order, std::max<std::int64_t>(n, 10000),
                                seed.child(10 + static_cast<std::uint64_t>(order)), c.z));
  return out;
}

std::vector<TestReport> suite_scaling(const SuiteConfig&, SeedRecord) {
  std::vector<double> ladder;
  for (int k = 6; k <= 10; ++k) ladder.push_back(std::ldexp(1.0, -k));
  std::vector<TestReport> out;
  for (int n : {1, 2}) append(out, test_kernel_scaling(LogKernel{1.0, 0.0, {}}, n, ladder));
  return out;
}

std::vector<TestReport> suite_uniqueness(const SuiteConfig& c, SeedRecord seed) {
  const DomainGrid g = unit_grid(32);
  return test_uniqueness(default_levels(g, 8.0, 0.5), g, reps(c, 20000), seed, c.z);
}

std::vector<TestReport> suite_custom(const SuiteConfig& c, SeedRecord seed) {
  if (!c.kernel || !c.grid) throw InvalidArgument("suite 'custom' needs a kernel and a grid");
  const DomainGrid& g = *c.grid;
  const CovMatrix cov = eval_kernel(*c.kernel, g);
  EnsembleSpec spec{cov, g, reps(c, 10000), seed.child(0), c.z};
  std::vector<TestReport> out;
  out.push_back(test_expectation(spec));
  spec.seed = seed.child(1);
  append(out, test_second_moment(spec, {{0, 0}, {0, g.size() - 1}}));
  spec.seed = seed.child(2);
  spec.replicas = std::min<std::int64_t>(spec.replicas, 100);
  const auto fs = random_test_functions(g.size(), 3, seed.child(3));
  for (const auto& f : fs) out.push_back(test_shift_covariance(spec, shift_from_test_function(f, cov, g)));
  return out;
}

using SuiteFn = std::vector<TestReport> (*)(const SuiteConfig&, SeedRecord);

const std::vector<std::pair<std::string, SuiteFn>>& suite_table() {
  static const std::vector<std::pair<std::string, SuiteFn>> t = {
      {"exact", suite_exact},         {"moments", suite_moments},
      {"martingale", suite_martingale}, {"peyriere", suite_peyriere},
      {"mollifier", suite_mollifier}, {"kahane", suite_kahane},
      {"ui", suite_ui},               {"nonatomicity", suite_nonatomicity},
      {"wick", suite_wick},           {"scaling", suite_scaling},
      {"uniqueness", suite_uniqueness}, {"custom", suite_custom}};
  return t;
}

}  // namespace

SuiteResult run_suite(const SuiteConfig& config) {
  const auto& names = suite_names();
  std::set<std::string> wanted;
  for (const auto& s : config.suites) {
    if (std::find(names.begin(), names.end(), s) == names.end()) {
      std::string list;
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      throw InvalidArgument("unknown suite '" + s + "'; valid suites: " + list);
    }
    if (s == "all") {
      for (const auto& [n, fn] : suite_table())
        if (n != "custom") wanted.insert(n);
    } else {
      wanted.insert(s);
    }
  }
  if (!(config.z > 0.0)) throw InvalidArgument("z must be > 0");
  if (config.replicas && *config.replicas < 1) throw InvalidArgument("replicas must be >= 1");
  SuiteResult res;
  for (const auto& n : wanted) {
    const auto& table = suite_table();
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const auto& e) { return e.first == n; });
    auto reports = it->second(config, config.seed.child(hash_string(n)));
    for (auto& r : reports) {
      r.with("suite", n);
      res.reports.push_back(std::move(r));
    }
  }
  for (const auto& r : res.reports)
    if (r.statistical && r.relation != Relation::Informational) ++res.comparisons;
  if (config.bonferroni && res.comparisons > 1) {
    const double zb = bonferroni_z(config.z, res.comparisons);
    for (auto& r : res.reports) {
      if (!r.statistical || r.relation == Relation::Informational) continue;
      r.z = zb;
      r.evaluate();
      r.with("bonferroni", "true");
    }
  }
  res.failures = count_failures(res.reports);
  return res;
}

}  // namespace gmc
