#pragma once

// Thin numerical-integration layer shared by the special functions, the
// Grammian and the convolution weights. Adaptive rules come from Boost.Math;
// fixed Gauss-Legendre rules are generated here for runtime node counts.

#include <functional>
#include <string_view>
#include <vector>

namespace tfsns::quad {

struct Estimate {
  double value = 0.0;
  double error = 0.0;  // absolute error estimate reported by the rule
  double l1 = 0.0;     // integral of |f|, used for relative error checks
};

using Integrand = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (15/31) on a finite interval. Throws NumericalError
/// naming `what` when the error estimate exceeds max(rel_tol * L1, abs_tol).
Estimate adaptive(const Integrand& f, double a, double b, double rel_tol,
                  double abs_tol, std::string_view what);

/// Same rule without the convergence check, for integrals assembled from
/// several pieces and judged as a whole.
Estimate adaptive_unchecked(const Integrand& f, double a, double b,
                            double rel_tol, double abs_tol);

/// Throws NumericalError naming `what` when est.error exceeds
/// 10 max(rel_tol * est.l1, abs_tol) or the value is not finite.
void require_converged(const Estimate& est, double rel_tol, double abs_tol,
                       double a, double b, std::string_view what);

/// Double-exponential (tanh-sinh) rule; tolerates integrable endpoint
/// singularities and is used where the integrand is steep at an end point.
Estimate endpoint_singular(const Integrand& f, double a, double b,
                           double rel_tol, double abs_tol,
                           std::string_view what);

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n);
  int size() const { return static_cast<int>(nodes.size()); }

  /// Integral of f over [a, b].
  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      acc += weights[i] * f(mid + half * nodes[i]);
    }
    return half * acc;
  }
};

}  // namespace tfsns::quad
