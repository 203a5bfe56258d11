#include "gmc/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "gmc/common.hpp"

namespace gmc {

GaussLegendreRule gauss_legendre(int n) {
  if (n < 1) throw InvalidArgument("Gauss-Legendre rule needs n >= 1");
  GaussLegendreRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return rule;
}

namespace {

const GaussLegendreRule& rule10() {
  static const GaussLegendreRule rule = gauss_legendre(10);
  return rule;
}

double apply(const std::function<double(double)>& f, double a, double b) {
  const auto& r = rule10();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t k = 0; k < r.nodes.size(); ++k) s += r.weights[k] * f(mid + half * r.nodes[k]);
  return s * half;
}

double adapt(const std::function<double(double)>& f, double a, double b, double whole,
             double tol, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = apply(f, a, mid);
  const double right = apply(f, mid, b);
  if (depth <= 0 || std::abs(left + right - whole) <= tol) return left + right;
  return adapt(f, a, mid, left, 0.5 * tol, depth - 1) +
         adapt(f, mid, b, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth) {
  if (a == b) return 0.0;
  return adapt(f, a, b, apply(f, a, b), abs_tol, max_depth);
}

double exp_over_u_integral(double r, double lo, double hi, double abs_tol) {
  if (!(lo > 0.0) || hi < lo) throw InvalidArgument("need 0 < lo <= hi");
  const double s0 = std::log(lo);
  const double s1 = std::log(hi);
  // Integrand equals 1 identically at r = 0.
  if (r == 0.0) return s1 - s0;
  return integrate_adaptive([r](double s) { return std::exp(-r * std::exp(s)); }, s0, s1,
                            abs_tol);
}

}  // namespace gmc
