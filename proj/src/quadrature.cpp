#include "tfsns/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "tfsns/errors.hpp"

namespace tfsns::quad {

namespace {

}  // namespace

void require_converged(const Estimate& est, double rel_tol, double abs_tol,
                       double a, double b, std::string_view what) {
  const double allowed = std::max(rel_tol * est.l1, abs_tol);
  if (!std::isfinite(est.value) || est.error > 10.0 * allowed) {
    std::ostringstream os;
    os << "quadrature did not converge for " << what << " on [" << a << ", "
       << b << "]: value=" << est.value << " error=" << est.error
       << " allowed=" << allowed;
    throw NumericalError(os.str());
  }
}

namespace {

// Bisection on single Gauss-Kronrod panels. Boost's recursion sums panel
// errors measured on the reference interval, so it is not used.
Estimate gk_panel(const Integrand& f, double a, double b) {
  Estimate e;
  e.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, 0, 0.0, &e.error, &e.l1);
  // The one-panel error comes back on the reference interval [-1, 1].
  e.error *= 0.5 * std::abs(b - a);
  return e;
}

void gk_refine(const Integrand& f, double a, double b, const Estimate& whole,
               double tol, int depth, Estimate& acc) {
  if (whole.error <= tol * (b - a) || depth == 0) {
    acc.value += whole.value;
    acc.error += whole.error;
    acc.l1 += whole.l1;
    return;
  }
  const double m = 0.5 * (a + b);
  gk_refine(f, a, m, gk_panel(f, a, m), tol, depth - 1, acc);
  gk_refine(f, m, b, gk_panel(f, m, b), tol, depth - 1, acc);
}

}  // namespace

Estimate adaptive_unchecked(const Integrand& f, double a, double b,
                            double rel_tol, double abs_tol) {
  Estimate est;
  if (a == b) return est;
  const Estimate first = gk_panel(f, a, b);
  // Error budget per unit length, from the first-panel scale.
  const double budget = std::max(rel_tol * first.l1, abs_tol) / std::abs(b - a);
  gk_refine(f, a, b, first, budget, 14, est);
  return est;
}

Estimate adaptive(const Integrand& f, double a, double b, double rel_tol,
                  double abs_tol, std::string_view what) {
  const Estimate est = adaptive_unchecked(f, a, b, rel_tol, abs_tol);
  require_converged(est, rel_tol, abs_tol, a, b, what);
  return est;
}

Estimate endpoint_singular(const Integrand& f, double a, double b,
                           double rel_tol, double abs_tol,
                           std::string_view what) {
  thread_local boost::math::quadrature::tanh_sinh<double> rule(12);
  Estimate est;
  if (a == b) return est;
  std::size_t levels = 0;
  est.value = rule.integrate(f, a, b, rel_tol, &est.error, &est.l1, &levels);
  require_converged(est, rel_tol, abs_tol, a, b, what);
  return est;
}

GaussLegendre::GaussLegendre(int n) {
  if (n < 1) throw ParameterError("Gauss-Legendre rule needs n >= 1");
  nodes.resize(n);
  weights.resize(n);
  // Newton iteration on P_n from the Chebyshev-like initial guess; the rule
  // is symmetric so only half the roots are computed.
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = x;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

}  // namespace tfsns::quad
