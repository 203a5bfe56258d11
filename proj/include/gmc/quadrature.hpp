#ifndef GMC_QUADRATURE_HPP
#define GMC_QUADRATURE_HPP

#include <functional>
#include <vector>

namespace gmc {

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point rule by Newton iteration on P_n.
GaussLegendreRule gauss_legendre(int n);

/// Adaptive bisection with a 10-point rule: a panel is accepted once its
/// estimate agrees with the sum over its two halves to within the panel's
/// share of `abs_tol`.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol = 1e-10, int max_depth = 48);

/// ∫_lo^hi e^{-u r} du/u evaluated on log-u panels.
double exp_over_u_integral(double r, double lo, double hi, double abs_tol = 1e-10);

}  // namespace gmc

#endif  // GMC_QUADRATURE_HPP
