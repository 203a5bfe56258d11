#include "gmc/kernel.hpp"

#include <cmath>
#include <map>
#include <ostream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "gmc/quadrature.hpp"

namespace gmc {

// ---------------------------------------------------------------------------
// Mollifier

Mollifier Mollifier::box() { return Mollifier(Profile::Box, 0.5); }
Mollifier Mollifier::triangle() { return Mollifier(Profile::Triangle, 1.0); }

Mollifier Mollifier::tabulated(std::vector<double> values, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("tabulated mollifier radius must be positive");
  if (values.size() < 3) throw InvalidArgument("tabulated mollifier needs at least 3 nodes");
  if (values.front() != 0.0 || values.back() != 0.0)
    throw InvalidArgument("tabulated mollifier must vanish at +-radius");
  const double dx = 2.0 * radius / static_cast<double>(values.size() - 1);
  CompensatedSum<double> mass;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidArgument("tabulated mollifier values must be finite and nonnegative");
    mass.add(v * dx);
  }
  if (std::abs(mass.value() - 1.0) > 1e-10)
    throw InvalidArgument("tabulated mollifier must have unit mass (got " +
                          format_double(mass.value()) + ")");
  Mollifier m(Profile::Tabulated, radius);
  m.table_ = std::move(values);
  return m;
}

Mollifier Mollifier::from_name(const std::string& name) {
  if (name == "box") return box();
  if (name == "triangle") return triangle();
  throw InvalidArgument("unknown mollifier '" + name + "' (known: box, triangle)");
}

std::string Mollifier::name() const {
  switch (profile_) {
    case Profile::Box: return "box";
    case Profile::Triangle: return "triangle";
    case Profile::Tabulated: return "tabulated";
  }
  return "unknown";
}

double Mollifier::profile_1d(double u) const {
  const double a = std::abs(u);
  switch (profile_) {
    case Profile::Box:
      // Closed support; the slack makes centers exactly eps/2 away count
      // regardless of rounding in the subtraction.
      return a <= 0.5 * (1.0 + 1e-12) ? 1.0 : 0.0;
    case Profile::Triangle: return a < 1.0 ? 1.0 - a : 0.0;
    case Profile::Tabulated: {
      if (a >= radius_) return 0.0;
      const double dx = 2.0 * radius_ / static_cast<double>(table_.size() - 1);
      const double pos = (u + radius_) / dx;
      const auto k = static_cast<std::size_t>(std::floor(pos));
      if (k + 1 >= table_.size()) return 0.0;
      const double frac = pos - static_cast<double>(k);
      return table_[k] * (1.0 - frac) + table_[k + 1] * frac;
    }
  }
  return 0.0;
}

double Mollifier::operator()(const Vector& x) const {
  double v = 1.0;
  for (Index k = 0; k < x.size() && v != 0.0; ++k) v *= profile_1d(x(k));
  return v;
}

double Mollifier::scaled(const Vector& x, double eps) const {
  return (*this)(x / eps) / std::pow(eps, static_cast<double>(x.size()));
}

nlohmann::json to_json(const Mollifier& m) {
  nlohmann::json doc{{"profile", m.name()}};
  if (m.profile() == Mollifier::Profile::Tabulated) {
    doc["radius"] = m.radius();
    doc["values"] = m.table();
  }
  return doc;
}

Mollifier mollifier_from_json(const nlohmann::json& doc) {
  const auto profile = doc.at("profile").get<std::string>();
  if (profile == "tabulated")
    return Mollifier::tabulated(doc.at("values").get<std::vector<double>>(),
                                doc.at("radius").get<double>());
  return Mollifier::from_name(profile);
}

// ---------------------------------------------------------------------------
// KernelSpec serialization

std::string KernelSpec::tag() const {
  struct {
    std::string operator()(const ExplicitKernel&) const { return "explicit"; }
    std::string operator()(const LogKernel&) const { return "log"; }
    std::string operator()(const KahaneFamily&) const { return "kahane"; }
    std::string operator()(const SigmaPositiveSum&) const { return "sigma_positive_sum"; }
    std::string operator()(const MollifiedKernel&) const { return "mollified"; }
  } visitor;
  return std::visit(visitor, variant);
}

nlohmann::json to_json(const KernelSpec& spec) {
  nlohmann::json doc{{"variant", spec.tag()}};
  if (const auto* e = std::get_if<ExplicitKernel>(&spec.variant)) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < e->entries.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(e->entries.cols()));
      for (Index j = 0; j < e->entries.cols(); ++j) row[static_cast<std::size_t>(j)] = e->entries(i, j);
      rows.push_back(row);
    }
    doc["entries"] = rows;
  } else if (const auto* l = std::get_if<LogKernel>(&spec.variant)) {
    if (l->g) throw InvalidArgument("LogKernel with a custom g cannot be serialized");
    doc["gamma"] = l->gamma;
    doc["g_const"] = l->g_const;
  } else if (const auto* k = std::get_if<KahaneFamily>(&spec.variant)) {
    doc["C"] = k->C;
    doc["gamma"] = k->gamma;
    if (k->lower != 1.0) doc["lower"] = k->lower;
  } else if (const auto* s = std::get_if<SigmaPositiveSum>(&spec.variant)) {
    doc["levels"] = nlohmann::json::array();
    for (const auto& level : s->levels) doc["levels"].push_back(to_json(level));
  } else if (const auto* m = std::get_if<MollifiedKernel>(&spec.variant)) {
    doc["base"] = to_json(*m->base);
    doc["mollifier"] = to_json(m->mollifier);
    doc["epsilon"] = m->epsilon;
  }
  return doc;
}

KernelSpec kernel_from_json(const nlohmann::json& doc) {
  const auto variant = doc.at("variant").get<std::string>();
  if (variant == "explicit") {
    const auto& rows = doc.at("entries");
    const auto n = static_cast<Index>(rows.size());
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i) {
      if (static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) != n)
        throw InvalidArgument("explicit kernel must be square");
      for (Index j = 0; j < n; ++j)
        m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    }
    return {ExplicitKernel{std::move(m)}};
  }
  if (variant == "log")
    return {LogKernel{doc.at("gamma").get<double>(), doc.value("g_const", 0.0), {}}};
  if (variant == "kahane")
    return {KahaneFamily{doc.at("C").get<double>(), doc.at("gamma").get<double>(),
                         doc.value("lower", 1.0)}};
  if (variant == "sigma_positive_sum") {
    SigmaPositiveSum s;
    for (const auto& level : doc.at("levels")) s.levels.push_back(kernel_from_json(level));
    return {std::move(s)};
  }
  if (variant == "mollified") {
    return {MollifiedKernel{std::make_shared<const KernelSpec>(kernel_from_json(doc.at("base"))),
                            mollifier_from_json(doc.at("mollifier")),
                            doc.at("epsilon").get<double>()}};
  }
  throw InvalidArgument("unknown kernel variant '" + variant + "'");
}

// ---------------------------------------------------------------------------
// CovMatrix

CovMatrix CovMatrix::factorize(Matrix entries) {
  if (entries.rows() != entries.cols()) throw InvalidArgument("covariance matrix must be square");
  if (entries.rows() == 0) throw InvalidArgument("covariance matrix must be nonempty");
  if (!entries.allFinite()) throw InvalidArgument("covariance matrix has non-finite entries");
  for (Index j = 0; j < entries.cols(); ++j) {
    if (entries(j, j) < 0.0) throw InvalidArgument("covariance matrix has a negative diagonal");
    for (Index i = 0; i < j; ++i) {
      if (entries(i, j) != entries(j, i))
        throw InvalidArgument("covariance matrix is not exactly symmetric");
    }
  }

  CovMatrix cov;
  cov.id_ = hash_matrix(entries);
  const Index n = entries.rows();
  const double max_diag = entries.diagonal().maxCoeff();
  if (max_diag == 0.0 && entries.isZero(0.0)) {
    cov.factor_ = Matrix::Zero(n, n);
    cov.entries_ = std::move(entries);
    return cov;
  }

  for (double rel : kJitterLadder) {
    const double jitter = rel * max_diag;
    Matrix shifted = entries;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) continue;
    Matrix L = llt.matrixL();
    if (!L.allFinite() || (L.diagonal().array() <= 0.0).any()) continue;
    cov.factor_ = std::move(L);
    cov.jitter_ = jitter;
    if (jitter > 0.0) cov.add_diagnostic("factorization needed jitter " + format_double(jitter));
    cov.entries_ = std::move(entries);
    return cov;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(entries, Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues().minCoeff();
  throw NotPositiveDefinite(
      "kernel not PSD on this grid: most negative eigenvalue " + format_double(lambda_min),
      lambda_min);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double distance(const Vector& t, const Vector& s) { return (t - s).norm(); }

void check(const LogKernel& k) {
  if (!(k.gamma >= 0.0) || !std::isfinite(k.gamma)) throw InvalidArgument("LogKernel gamma must be >= 0");
  if (!std::isfinite(k.g_const)) throw InvalidArgument("LogKernel g_const must be finite");
}

void check(const KahaneFamily& k) {
  if (!(k.gamma >= 0.0) || !std::isfinite(k.gamma)) throw InvalidArgument("KahaneFamily gamma must be >= 0");
  if (!(k.lower >= 1.0)) throw InvalidArgument("KahaneFamily lower cutoff must be >= 1");
  if (!(k.C > k.lower) || !std::isfinite(k.C))
    throw InvalidArgument("KahaneFamily needs C > 1 (and C above the lower cutoff)");
}

// Upper triangle evaluated, lower mirrored.
template <typename F>
Matrix symmetric_fill(Index n, F&& entry) {
  Matrix m(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      const double v = entry(i, j);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

Matrix mirror_upper(const Matrix& a) {
  Matrix m = a;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = j + 1; i < m.rows(); ++i) m(i, j) = m(j, i);
  return m;
}

}  // namespace

double kernel_value(const LogKernel& k, const Vector& t, const Vector& s, double h) {
  const double r = distance(t, s);
  const double g = k.g_const + (k.g ? k.g(t, s) : 0.0);
  const double g2 = k.gamma * k.gamma;
  if (r == 0.0) return g2 * std::max(0.0, std::log(2.0 / h)) + g;
  return g2 * std::max(0.0, -std::log(r)) + g;
}

double kernel_value(const KahaneFamily& k, const Vector& t, const Vector& s) {
  return k.gamma * k.gamma * exp_over_u_integral(distance(t, s), k.lower, k.C);
}

Matrix kernel_matrix(const KernelSpec& spec, const DomainGrid& grid) {
  const Index n = grid.size();
  const Matrix& c = grid.centers();

  if (const auto* e = std::get_if<ExplicitKernel>(&spec.variant)) {
    if (e->entries.rows() != n || e->entries.cols() != n)
      throw InvalidArgument("explicit kernel size does not match grid (" +
                            std::to_string(e->entries.rows()) + " vs " + std::to_string(n) + ")");
    if (e->entries != e->entries.transpose())
      throw InvalidArgument("explicit kernel is not symmetric");
    return e->entries;
  }
  if (const auto* l = std::get_if<LogKernel>(&spec.variant)) {
    check(*l);
    const double h = grid.max_spacing();
    return symmetric_fill(n, [&](Index i, Index j) {
      return kernel_value(*l, c.col(i), c.col(j), h);
    });
  }
  if (const auto* k = std::get_if<KahaneFamily>(&spec.variant)) {
    check(*k);
    // Stationary: many pairs share a distance on a regular grid.
    std::map<double, double> cache;
    const double g2 = k->gamma * k->gamma;
    return symmetric_fill(n, [&](Index i, Index j) {
      const double r = distance(c.col(i), c.col(j));
      auto it = cache.find(r);
      if (it == cache.end()) it = cache.emplace(r, exp_over_u_integral(r, k->lower, k->C)).first;
      return g2 * it->second;
    });
  }
  if (const auto* s = std::get_if<SigmaPositiveSum>(&spec.variant)) {
    if (s->levels.empty()) throw InvalidArgument("SigmaPositiveSum needs at least one level");
    Matrix total = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < s->levels.size(); ++k) {
      const Matrix level = kernel_matrix(s->levels[k], grid);
      if ((level.array() < 0.0).any())
        throw InvalidArgument("sigma-positive level " + std::to_string(k) +
                              " has a negative entry");
      total += level;
    }
    return total;
  }
  const auto& m = std::get<MollifiedKernel>(spec.variant);
  if (!m.base) throw InvalidArgument("mollified kernel has no base");
  const Matrix base = kernel_matrix(*m.base, grid);
  const auto W = mollifier_weights(grid, grid, m.mollifier, m.epsilon);
  const Matrix wk = W * base;
  const Matrix full = wk * W.transpose();
  return mirror_upper(full);
}

CovMatrix eval_kernel(const KernelSpec& spec, const DomainGrid& grid) {
  if (const auto* m = std::get_if<MollifiedKernel>(&spec.variant)) {
    if (!m->base) throw InvalidArgument("mollified kernel has no base");
    return mollify_kernel(eval_kernel(*m->base, grid), grid, m->mollifier, m->epsilon);
  }
  return CovMatrix::factorize(kernel_matrix(spec, grid));
}

std::vector<KahaneFamily> sigma_positive_levels(const KahaneFamily& spec, int levels,
                                                std::optional<std::vector<double>> cutoffs) {
  check(spec);
  if (levels < 1) throw InvalidArgument("need at least one level");
  std::vector<double> cuts;
  if (cutoffs) {
    cuts = *cutoffs;
    if (static_cast<int>(cuts.size()) != levels + 1)
      throw InvalidArgument("need levels+1 cutoffs");
    if (cuts.front() != spec.lower || cuts.back() != spec.C)
      throw InvalidArgument("cutoffs must start at the lower cutoff and end at C");
    for (std::size_t k = 1; k < cuts.size(); ++k) {
      if (!(cuts[k] > cuts[k - 1])) throw InvalidArgument("cutoffs must be strictly increasing");
    }
  } else {
    cuts.resize(static_cast<std::size_t>(levels) + 1);
    const double log_lo = std::log(spec.lower);
    const double log_hi = std::log(spec.C);
    for (int k = 0; k <= levels; ++k)
      cuts[static_cast<std::size_t>(k)] = std::exp(log_lo + (log_hi - log_lo) * k / levels);
    cuts.front() = spec.lower;
    cuts.back() = spec.C;
  }
  std::vector<KahaneFamily> out;
  for (int k = 0; k < levels; ++k)
    out.push_back({cuts[static_cast<std::size_t>(k) + 1], spec.gamma, cuts[static_cast<std::size_t>(k)]});
  return out;
}

std::vector<CovMatrix> sigma_positive_decompose(const KahaneFamily& spec, const DomainGrid& grid,
                                                int levels,
                                                std::optional<std::vector<double>> cutoffs) {
  std::vector<CovMatrix> out;
  for (const auto& level : sigma_positive_levels(spec, levels, std::move(cutoffs)))
    out.push_back(eval_kernel(KernelSpec{level}, grid));
  return out;
}

// ---------------------------------------------------------------------------
// Mollification

Eigen::SparseMatrix<double, Eigen::RowMajor> mollifier_weights(const DomainGrid& target,
                                                               const DomainGrid& source,
                                                               const Mollifier& moll, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("mollifier eps must be > 0");
  if (target.dim() != source.dim()) throw InvalidArgument("grid dimensions differ");
  const Matrix& tc = target.centers();
  const Matrix& sc = source.centers();
  const double reach = moll.radius() * eps * (1.0 + 1e-9);

  std::vector<Eigen::Triplet<double>> triplets;
  for (Index i = 0; i < target.size(); ++i) {
    const std::size_t row_start = triplets.size();
    CompensatedSum<double> row_sum;
    for (Index j = 0; j < source.size(); ++j) {
      const Vector d = tc.col(i) - sc.col(j);
      if (d.cwiseAbs().maxCoeff() > reach) continue;
      const double w = moll(d / eps) * source.cell_volume();
      if (w > 0.0) {
        triplets.emplace_back(i, j, w);
        row_sum.add(w);
      }
    }
    const double total = row_sum.value();
    if (!(total > 0.0))
      throw InvalidArgument("mollifier support at eps=" + format_double(eps) +
                            " contains no source cell center");
    for (std::size_t k = row_start; k < triplets.size(); ++k)
      triplets[k] = Eigen::Triplet<double>(triplets[k].row(), triplets[k].col(),
                                           triplets[k].value() / total);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> W(target.size(), source.size());
  W.setFromTriplets(triplets.begin(), triplets.end());
  return W;
}

CovMatrix mollify_kernel(const CovMatrix& K, const DomainGrid& grid, const Mollifier& moll,
                         double eps) {
  return mollify_kernel(K, grid, grid, moll, eps);
}

CovMatrix mollify_kernel(const CovMatrix& K, const DomainGrid& kernel_grid,
                         const DomainGrid& target, const Mollifier& moll, double eps) {
  if (K.size() != kernel_grid.size()) throw InvalidArgument("kernel does not match its grid");
  const auto W = mollifier_weights(target, kernel_grid, moll, eps);
  const Matrix wk = W * K.entries();
  const Matrix full = wk * W.transpose();
  CovMatrix out = CovMatrix::factorize(mirror_upper(full));
  if (eps < kernel_grid.spacing().minCoeff())
    out.add_diagnostic("mollifier under-resolved: eps " + format_double(eps) +
                       " is below the grid spacing");
  return out;
}

double kernel_moment(const CovMatrix& K, const DomainGrid& grid, int n) {
  if (K.size() != grid.size()) throw InvalidArgument("kernel does not match grid");
  return kernel_moment(K.entries(), grid.cell_measure(), n);
}

std::vector<ScalingPoint> kernel_moment_scaling(const LogKernel& spec, int n,
                                                const std::vector<double>& eps_ladder,
                                                int cells_per_box) {
  check(spec);
  if (n < 1) throw InvalidArgument("moment order must be >= 1");
  if (cells_per_box < 1) throw InvalidArgument("cells_per_box must be >= 1");
  std::vector<ScalingPoint> out;
  for (double eps : eps_ladder) {
    if (!(eps > 0.0 && eps <= 1.0)) throw InvalidArgument("eps must lie in (0, 1]");
    const double cells = cells_per_box / eps;
    const auto N = static_cast<Index>(std::llround(cells));
    if (std::abs(cells - static_cast<double>(N)) > 1e-9 * cells)
      throw InvalidArgument("eps must divide [0,1] into whole boxes of cells_per_box cells");
    const DomainGrid grid = build_grid(1, Interval{0.0, 1.0}, N);
    const double h = grid.spacing()(0);
    const Index m = cells_per_box;
    const Index positions = N - m + 1;

    // Sliding m x m window over K^n; ring holds the last m row-window sums.
    Matrix ring = Matrix::Zero(positions, m);
    Vector col_sum = Vector::Zero(positions);
    double best = -std::numeric_limits<double>::infinity();
    Vector row(N);
    for (Index i = 0; i < N; ++i) {
      const Vector ti = grid.center(i);
      for (Index j = 0; j < N; ++j) row(j) = int_pow(kernel_value(spec, ti, grid.center(j), h), n);
      Vector windows(positions);
      double acc = row.head(m).sum();
      windows(0) = acc;
      for (Index b = 1; b < positions; ++b) {
        acc += row(b + m - 1) - row(b - 1);
        windows(b) = acc;
      }
      const Index slot = i % m;
      col_sum += windows - ring.col(slot);
      ring.col(slot) = windows;
      if (i >= m - 1) best = std::max(best, col_sum.maxCoeff());
    }
    const double sup = best / static_cast<double>(m * m);
    out.push_back({eps, N, sup, int_pow(std::abs(std::log(eps)), n)});
  }
  return out;
}

void write_matrix_csv(std::ostream& os, const Matrix& m) {
  os << "i,j,value\n";
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) os << i << ',' << j << ',' << format_double(m(i, j)) << '\n';
}

}  // namespace gmc
