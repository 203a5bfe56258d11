#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include "gmc/kernel.hpp"
#include "gmc/quadrature.hpp"
#include "support.hpp"

using namespace gmc;

namespace {

double E1(double x) { return -std::expint(-x); }

// gamma^2 (E1(lower r) - E1(C r)), or gamma^2 log(C / lower) at r = 0.
double kahane_oracle(double r, double C, double gamma, double lower = 1.0) {
  if (r == 0.0) return gamma * gamma * std::log(C / lower);
  return gamma * gamma * (E1(lower * r) - E1(C * r));
}

bool bitwise_symmetric(const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < i; ++j)
      if (m(i, j) != m(j, i)) return false;
  return true;
}

}  // namespace

TEST_CASE("Kahane family on the diagonal equals gamma^2 log C") {
  const DomainGrid g = test::unit_grid(3);
  const CovMatrix K = eval_kernel(KernelSpec{KahaneFamily{std::numbers::e, 1.0, 1.0}}, g);
  for (Index i = 0; i < 3; ++i) CHECK(K.entries()(i, i) == doctest::Approx(1.0).epsilon(1e-12));
  const CovMatrix K2 = eval_kernel(KernelSpec{KahaneFamily{16.0, 0.7, 1.0}}, g);
  CHECK(K2.entries()(0, 0) == doctest::Approx(0.49 * std::log(16.0)).epsilon(1e-12));
}

TEST_CASE("Kahane family matches the exponential-integral oracle") {
  for (double C : {2.0, 8.0, 16.0, 64.0, 1000.0}) {
    for (double r : {1e-6, 1e-3, 0.01, 0.1, 0.3, 1.0, 1.7}) {
      Vector t(1), s(1);
      t << 0.0;
      s << r;
      CAPTURE(C);
      CAPTURE(r);
      CHECK(std::abs(kernel_value(KahaneFamily{C, 1.3, 1.0}, t, s) - kahane_oracle(r, C, 1.3)) <
            1e-9);
    }
  }
}

TEST_CASE("2x2 explicit kernel factorizes in closed form") {
  const CovMatrix K = test::two_by_two();
  CHECK(K.jitter() == 0.0);
  const Matrix& L = K.factor();
  CHECK(L(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(L(0, 1) == 0.0);
  CHECK(L(1, 0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(L(1, 1) == doctest::Approx(std::sqrt(0.96)).epsilon(1e-15));
}

TEST_CASE("log kernel uses the cell-scale diagonal cap") {
  const DomainGrid g = test::unit_grid(8);
  const double gamma = 0.9;
  const CovMatrix K = eval_kernel(KernelSpec{LogKernel{gamma, 0.0, {}}}, g);
  const double h = 0.125;
  for (Index i = 0; i < 8; ++i)
    CHECK(K.entries()(i, i) == doctest::Approx(gamma * gamma * std::log(2.0 / h)).epsilon(1e-15));
  CHECK(K.entries()(0, 3) == doctest::Approx(gamma * gamma * std::log(1.0 / 0.375)).epsilon(1e-14));
  // log+ vanishes beyond distance 1.
  const CovMatrix W = eval_kernel(KernelSpec{LogKernel{1.0, 0.25, {}}}, build_grid(1, Interval{0.0, 4.0}, 4));
  CHECK(W.entries()(0, 3) == 0.25);
}

TEST_CASE("log kernel with a bounded perturbation") {
  LogKernel k{1.0, 0.1, [](const Vector& t, const Vector& s) { return 0.05 * (t(0) + s(0)); }};
  const DomainGrid g = test::unit_grid(4);
  const Matrix K = kernel_matrix(KernelSpec{k}, g);
  CHECK(bitwise_symmetric(K));
  CHECK(K(0, 1) == doctest::Approx(std::log(4.0) + 0.1 + 0.05 * 0.5).epsilon(1e-14));
}

TEST_CASE("property: every variant evaluates to an exactly symmetric matrix") {
  test::Gen gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = static_cast<int>(gen.integer(1, 2));
    const DomainGrid g = build_grid(dim, Interval{gen.uniform(-1.0, 0.0), gen.uniform(0.5, 2.0)},
                                    gen.integer(2, dim == 1 ? 24 : 5));
    const double gamma = gen.uniform(0.0, 1.4);
    const double C = gen.uniform(1.5, 50.0);
    auto base = std::make_shared<const KernelSpec>(KernelSpec{KahaneFamily{C, gamma, 1.0}});
    std::vector<KernelSpec> specs = {
        KernelSpec{LogKernel{gamma, gen.uniform(0.0, 1.0), {}}},
        KernelSpec{KahaneFamily{C, gamma, 1.0}},
        KernelSpec{SigmaPositiveSum{{KernelSpec{KahaneFamily{std::sqrt(C), gamma, 1.0}},
                                     KernelSpec{KahaneFamily{C, gamma, std::sqrt(C)}}}}},
        KernelSpec{MollifiedKernel{base, Mollifier::triangle(), gen.uniform(0.1, 0.6)}},
        KernelSpec{ExplicitKernel{gen.psd(g.size())}}};
    for (const auto& s : specs) {
      CAPTURE(trial);
      CAPTURE(s.tag());
      CHECK(bitwise_symmetric(kernel_matrix(s, g)));
      std::optional<CovMatrix> Kopt;
      try {
        Kopt = eval_kernel(s, g);
      } catch (const NotPositiveDefinite& e) {
        CHECK(s.tag() == "log");
        CHECK(e.min_eigenvalue() < 0.0);
        continue;
      }
      const CovMatrix& K = *Kopt;
      CHECK((K.diagonal().array() >= 0.0).all());
      const Matrix LLt = K.factor() * K.factor().transpose();
      CHECK((LLt - K.entries()).cwiseAbs().maxCoeff() <=
            K.jitter() + 1e-12 * std::max(1.0, K.diagonal().maxCoeff()));
    }
  }
}

TEST_CASE("jitter ladder") {
  SUBCASE("zero matrix factors as zero without jitter") {
    const CovMatrix K = CovMatrix::factorize(Matrix::Zero(3, 3));
    CHECK(K.factor().isZero(0.0));
    CHECK(K.jitter() == 0.0);
  }
  SUBCASE("singular PSD matrix takes the first nonzero rung") {
    const CovMatrix K = CovMatrix::factorize(Matrix::Ones(2, 2));
    CHECK(K.jitter() == 1e-12);
    CHECK_FALSE(K.diagnostics().empty());
  }
  SUBCASE("indefinite matrix reports its most negative eigenvalue") {
    Matrix A(2, 2);
    A << 1.0, 2.0, 2.0, 1.0;
    try {
      CovMatrix::factorize(A);
      FAIL("expected NotPositiveDefinite");
    } catch (const NotPositiveDefinite& e) {
      CHECK(e.min_eigenvalue() == doctest::Approx(-1.0).epsilon(1e-12));
    }
  }
  SUBCASE("invalid inputs") {
    Matrix A(2, 2);
    A << 1.0, 0.2, 0.3, 1.0;
    CHECK_THROWS_AS(CovMatrix::factorize(A), InvalidArgument);
    A << -1.0, 0.0, 0.0, 1.0;
    CHECK_THROWS_AS(CovMatrix::factorize(A), InvalidArgument);
    CHECK_THROWS_AS(CovMatrix::factorize(Matrix::Zero(2, 3)), InvalidArgument);
  }
}

TEST_CASE("kernel parameter validation") {
  const DomainGrid g = test::unit_grid(4);
  CHECK_THROWS_AS(eval_kernel(KernelSpec{KahaneFamily{1.0, 1.0, 1.0}}, g), InvalidArgument);
  CHECK_THROWS_AS(eval_kernel(KernelSpec{KahaneFamily{16.0, -1.0, 1.0}}, g), InvalidArgument);
  CHECK_THROWS_AS(eval_kernel(KernelSpec{LogKernel{-0.5, 0.0, {}}}, g), InvalidArgument);
  CHECK_THROWS_AS(eval_kernel(KernelSpec{ExplicitKernel{Matrix::Identity(3, 3)}}, g), InvalidArgument);
  CHECK_THROWS_AS(eval_kernel(KernelSpec{SigmaPositiveSum{}}, g), InvalidArgument);
  Matrix neg = Matrix::Identity(4, 4);
  neg(0, 1) = neg(1, 0) = -0.1;
  CHECK_THROWS_AS(eval_kernel(KernelSpec{SigmaPositiveSum{{KernelSpec{ExplicitKernel{neg}}}}}, g),
                  InvalidArgument);
}

TEST_CASE("sigma-positive decomposition") {
  const DomainGrid g = test::unit_grid(32);
  const KahaneFamily spec{8.0, 1.0, 1.0};
  const CovMatrix full = eval_kernel(KernelSpec{spec}, g);

  SUBCASE("one level is the full kernel") {
    const auto levels = sigma_positive_decompose(spec, g, 1);
    REQUIRE(levels.size() == 1);
    CHECK((levels[0].entries() - full.entries()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("three geometric levels add up to the kernel") {
    const auto levels = sigma_positive_decompose(spec, g, 3);
    REQUIRE(levels.size() == 3);
    Matrix sum = Matrix::Zero(32, 32);
    for (const auto& l : levels) {
      CHECK((l.entries().array() >= 0.0).all());
      sum += l.entries();
    }
    CHECK((sum - full.entries()).cwiseAbs().maxCoeff() < 1e-9);
    for (const auto& l : levels)
      CHECK(l.entries()(0, 0) == doctest::Approx(std::log(8.0) / 3.0).epsilon(1e-12));
  }
  SUBCASE("explicit cutoffs") {
    const auto lv = sigma_positive_levels(spec, 2, std::vector<double>{1.0, 3.0, 8.0});
    CHECK(lv[0].lower == 1.0);
    CHECK(lv[0].C == 3.0);
    CHECK(lv[1].lower == 3.0);
    const auto levels = sigma_positive_decompose(spec, g, 2, std::vector<double>{1.0, 3.0, 8.0});
    CHECK(levels[1].entries()(5, 5) == doctest::Approx(std::log(8.0 / 3.0)).epsilon(1e-12));
    CHECK(levels[1].entries()(0, 7) ==
          doctest::Approx(kahane_oracle(7.0 / 32.0, 8.0, 1.0, 3.0)).epsilon(1e-9));
  }
  SUBCASE("nonmonotone cutoffs are rejected") {
    CHECK_THROWS_AS(sigma_positive_levels(spec, 2, std::vector<double>{1.0, 9.0, 8.0}),
                    InvalidArgument);
    CHECK_THROWS_AS(sigma_positive_levels(spec, 2, std::vector<double>{1.0, 1.0, 8.0}),
                    InvalidArgument);
    CHECK_THROWS_AS(sigma_positive_levels(spec, 2, std::vector<double>{1.0, 8.0}), InvalidArgument);
    CHECK_THROWS_AS(sigma_positive_levels(spec, 0), InvalidArgument);
  }
}

TEST_CASE("property: Kahane family stays within gamma^2 of gamma^2 log(C ^ 1/r)") {
  test::Gen gen(17);
  for (int trial = 0; trial < 12; ++trial) {
    const int dim = static_cast<int>(gen.integer(1, 3));
    const DomainGrid g = build_grid(dim, Interval{0.0, 1.0}, dim == 1 ? 40 : (dim == 2 ? 8 : 4));
    const double C = std::exp(gen.uniform(0.5, 6.0));
    const double gamma = gen.uniform(0.2, 1.4);
    const Matrix K = kernel_matrix(KernelSpec{KahaneFamily{C, gamma, 1.0}}, g);
    for (Index i = 0; i < g.size(); ++i)
      for (Index j = 0; j < g.size(); ++j) {
        const double r = (g.center(i) - g.center(j)).norm();
        const double ref = gamma * gamma * (r == 0.0 ? std::log(C) : std::log(std::min(C, 1.0 / r)));
        REQUIRE(std::abs(K(i, j) - ref) <= gamma * gamma);
      }
  }
}

TEST_CASE("mollifier profiles") {
  const Mollifier box = Mollifier::box(), tri = Mollifier::triangle();
  CHECK(box.profile_1d(0.5) == 1.0);
  CHECK(box.profile_1d(0.51) == 0.0);
  CHECK(tri.profile_1d(0.25) == 0.75);
  CHECK(tri.profile_1d(-1.0) == 0.0);
  Vector x(2);
  x << 0.5, -0.5;
  CHECK(tri(x) == 0.25);
  CHECK(tri.scaled(x, 0.5) == doctest::Approx(0.0));
  CHECK(tri.scaled(x, 2.0) == doctest::Approx(0.75 * 0.75 / 4.0));

  const Mollifier hat = Mollifier::tabulated({0.0, 1.0, 0.0}, 1.0);
  CHECK(hat.profile_1d(0.5) == doctest::Approx(0.5));
  CHECK(hat.profile_1d(-0.25) == doctest::Approx(0.75));
  CHECK_THROWS_AS(Mollifier::tabulated({0.0, 2.0, 0.0}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(Mollifier::tabulated({0.1, 0.9, 0.0}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(Mollifier::tabulated({0.0, -1.0, 3.0, 0.0}, 0.5), InvalidArgument);
  CHECK_THROWS_AS(Mollifier::from_name("gauss"), InvalidArgument);

  // Unit mass of the 1-D profiles, by adaptive quadrature.
  for (const auto& m : {box, tri, hat}) {
    const double mass = integrate_adaptive([&](double u) { return m.profile_1d(u); }, -m.radius(),
                                           m.radius(), 1e-12);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("mollifier weights are row-normalized") {
  const DomainGrid g = test::unit_grid(40);
  for (const auto& m : {Mollifier::box(), Mollifier::triangle()}) {
    const auto W = mollifier_weights(g, g, m, 0.2);
    const Vector rows = W * Vector::Ones(40);
    CHECK((rows.array() - 1.0).abs().maxCoeff() < 1e-14);
    CHECK(W.coeff(0, 0) > 0.0);
  }
  CHECK_THROWS_AS(mollifier_weights(g, g, Mollifier::box(), 0.0), InvalidArgument);
  // Support too small to reach any source center from a shifted target.
  const DomainGrid coarse = build_grid(1, Interval{0.0, 1.0}, 3);
  CHECK_THROWS_AS(mollifier_weights(coarse, test::unit_grid(2), Mollifier::box(), 0.01),
                  InvalidArgument);
}

TEST_CASE("mollify_kernel equals the explicit triple product") {
  test::Gen gen(3);
  for (int trial = 0; trial < 6; ++trial) {
    const Index n = gen.integer(4, 32);
    const DomainGrid g = test::unit_grid(n);
    const CovMatrix K = eval_kernel(KernelSpec{LogKernel{1.0, 0.0, {}}}, g);
    const double eps = gen.uniform(0.05, 0.5);
    const Mollifier m = trial % 2 ? Mollifier::box() : Mollifier::triangle();
    // Independent weights: dense loops over psi((t - t') / eps).
    Matrix W(n, n);
    for (Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Index j = 0; j < n; ++j) {
        W(i, j) = m.profile_1d((g.center(i)(0) - g.center(j)(0)) / eps);
        s += W(i, j);
      }
      W.row(i) /= s;
    }
    Matrix ref = Matrix::Zero(n, n);
    for (Index a = 0; a < n; ++a)
      for (Index b = 0; b < n; ++b)
        for (Index i = 0; i < n; ++i)
          for (Index j = 0; j < n; ++j) ref(a, b) += W(a, i) * K.entries()(i, j) * W(b, j);
    const CovMatrix Ke = mollify_kernel(K, g, m, eps);
    CAPTURE(trial);
    CHECK((Ke.entries() - ref).cwiseAbs().maxCoeff() < 1e-12 * ref.cwiseAbs().maxCoeff());
    CHECK(bitwise_symmetric(Ke.entries()));
  }
}

TEST_CASE("mollify_kernel limits") {
  const DomainGrid g = test::unit_grid(16);
  const CovMatrix K = eval_kernel(KernelSpec{LogKernel{1.0, 0.0, {}}}, g);
  SUBCASE("wide support averages to the grand mean") {
    const CovMatrix Ke = mollify_kernel(K, g, Mollifier::box(), 4.0);
    const double mean = K.entries().mean();
    CHECK((Ke.entries().array() - mean).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("box of one cell width is the identity smoothing") {
    const CovMatrix Ke = mollify_kernel(K, g, Mollifier::box(), 1.0 / 16.0);
    CHECK(Ke.entries() == K.entries());
  }
  SUBCASE("box and triangle differ and both factor without jitter") {
    const CovMatrix B = mollify_kernel(K, g, Mollifier::box(), 0.25);
    const CovMatrix T = mollify_kernel(K, g, Mollifier::triangle(), 0.25);
    CHECK((B.entries() - T.entries()).cwiseAbs().maxCoeff() > 1e-3);
    CHECK(B.jitter() == 0.0);
    CHECK(T.jitter() == 0.0);
  }
  SUBCASE("under-resolved eps leaves a diagnostic") {
    const CovMatrix Ke = mollify_kernel(K, g, Mollifier::box(), 0.01);
    REQUIRE_FALSE(Ke.diagnostics().empty());
    CHECK(Ke.diagnostics().back().find("under-resolved") != std::string::npos);
  }
  SUBCASE("fine kernel onto a coarse target") {
    const DomainGrid c = test::unit_grid(4);
    const CovMatrix Kc = mollify_kernel(K, g, c, Mollifier::box(), 0.25);
    CHECK(Kc.size() == 4);
    CHECK(Kc.entries()(0, 0) == doctest::Approx(K.entries().topLeftCorner(4, 4).mean()).epsilon(1e-12));
  }
}

TEST_CASE("kernel moments") {
  const DomainGrid g2 = test::unit_grid(2);
  CHECK(kernel_moment(test::two_by_two(), g2, 2) == doctest::Approx(0.52).epsilon(1e-15));
  CHECK(kernel_moment(CovMatrix::factorize(Matrix::Zero(2, 2)), g2, 3) == 0.0);
  CHECK_THROWS_AS(kernel_moment(test::two_by_two(), g2, 0), InvalidArgument);

  const DomainGrid g = test::unit_grid(16);
  const CovMatrix K = eval_kernel(KernelSpec{KahaneFamily{16.0, 1.0, 1.0}}, g);
  double direct = 0.0;
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j)
      direct += kahane_oracle(std::abs(g.center(i)(0) - g.center(j)(0)), 16.0, 1.0) / 256.0;
  CHECK(std::abs(kernel_moment(K, g, 1) - direct) < 1e-9);

  const Vector& mu = g.cell_measure();
  double frob = 0.0;
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j) {
      const double v = K.entries()(i, j) * std::sqrt(mu(i) * mu(j));
      frob += v * v;
    }
  CHECK(test::rel_diff(kernel_moment(K, g, 2), frob) < 1e-12);
}

TEST_CASE("kernel moment scaling") {
  std::vector<double> ladder;
  for (int k = 3; k <= 7; ++k) ladder.push_back(std::ldexp(1.0, -k));

  SUBCASE("n = 1 ratio stays within the factor-2 band") {
    for (const auto& p : kernel_moment_scaling(LogKernel{1.0, 0.0, {}}, 1, ladder)) {
      CAPTURE(p.eps);
      CHECK(p.ratio() >= 0.5);
      CHECK(p.ratio() <= 2.0);
    }
  }
  SUBCASE("zero kernel") {
    for (const auto& p : kernel_moment_scaling(LogKernel{0.0, 0.0, {}}, 2, ladder))
      CHECK(p.sup_value == 0.0);
  }
  SUBCASE("homogeneity in gamma^2") {
    for (int n : {1, 2}) {
      const auto a = kernel_moment_scaling(LogKernel{1.0, 0.0, {}}, n, ladder);
      const auto b = kernel_moment_scaling(LogKernel{std::sqrt(2.0), 0.0, {}}, n, ladder);
      for (std::size_t k = 0; k < a.size(); ++k)
        CHECK(test::rel_diff(b[k].sup_value, std::pow(2.0, n) * a[k].sup_value) < 1e-12);
    }
  }
  SUBCASE("sliding window agrees with brute-force block averages") {
    for (int n : {1, 2}) {
      const auto pts = kernel_moment_scaling(LogKernel{1.0, 0.0, {}}, n, {0.125, 0.0625}, 4);
      for (const auto& p : pts) {
        const DomainGrid g = test::unit_grid(p.grid_cells);
        const Matrix K = kernel_matrix(KernelSpec{LogKernel{1.0, 0.0, {}}}, g);
        double best = 0.0;
        for (Index a = 0; a + 4 <= g.size(); ++a)
          for (Index b = 0; b + 4 <= g.size(); ++b) {
            double s = 0.0;
            for (Index i = a; i < a + 4; ++i)
              for (Index j = b; j < b + 4; ++j) s += std::pow(K(i, j), n);
            best = std::max(best, s / 16.0);
          }
        CHECK(test::rel_diff(p.sup_value, best) < 1e-12);
        CHECK(p.log_power == doctest::Approx(std::pow(std::abs(std::log(p.eps)), n)));
      }
    }
  }
  SUBCASE("invalid ladders") {
    CHECK_THROWS_AS(kernel_moment_scaling(LogKernel{}, 1, {0.3}), InvalidArgument);
    CHECK_THROWS_AS(kernel_moment_scaling(LogKernel{}, 1, {2.0}), InvalidArgument);
    CHECK_THROWS_AS(kernel_moment_scaling(LogKernel{}, 0, {0.5}), InvalidArgument);
  }
}

TEST_CASE("KernelSpec JSON round trip") {
  const DomainGrid g = test::unit_grid(6);
  auto base = std::make_shared<const KernelSpec>(KernelSpec{LogKernel{0.8, 0.1, {}}});
  std::vector<KernelSpec> specs = {
      KernelSpec{ExplicitKernel{Matrix::Identity(6, 6) * 0.5}},
      KernelSpec{LogKernel{0.8, 0.1, {}}},
      KernelSpec{KahaneFamily{12.0, 1.1, 1.0}},
      KernelSpec{SigmaPositiveSum{{KernelSpec{KahaneFamily{4.0, 1.0, 1.0}},
                                   KernelSpec{KahaneFamily{16.0, 1.0, 4.0}}}}},
      KernelSpec{MollifiedKernel{base, Mollifier::tabulated({0.0, 1.0, 0.0}, 1.0), 0.3}}};
  for (const auto& s : specs) {
    const auto j = to_json(s);
    CHECK(j.at("variant") == s.tag());
    const KernelSpec back = kernel_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(kernel_matrix(back, g) == kernel_matrix(s, g));
  }
  CHECK_THROWS(kernel_from_json(nlohmann::json{{"variant", "nope"}}));
  CHECK(mollifier_from_json(to_json(Mollifier::triangle())) == Mollifier::triangle());
}

TEST_CASE("matrix CSV export") {
  std::ostringstream os;
  write_matrix_csv(os, test::two_by_two_entries());
  CHECK(os.str() == "i,j,value\n0,0,1\n0,1,0.2\n1,0,0.2\n1,1,1\n");
}
