#pragma once

// Scalar kernels behind the Mittag-Leffler operator families: the Mainardi
// (Wright-type) density K_eta and the two-parameter Mittag-Leffler function
// E_{a,b}, plus a quadrature route through the Mainardi representation that
// serves as an independent check of the series/contour evaluation.

namespace tfsns::specfun {

/// Accuracy targets and branch switch points. Reported in CLI diagnostics.
struct Tolerances {
  /// Relative size of the last retained Taylor term.
  static constexpr double series_rel_stop = 1e-18;
  /// Negative-axis series is used while |x|^(1/a) stays below this; beyond it
  /// the alternating terms cancel more than the absolute target allows.
  static constexpr double series_cancellation_limit = 8.0;
  /// Asymptotic expansion on the negative axis is accepted when its smallest
  /// term drops below this fraction of the sum.
  static constexpr double asymptotic_rel_stop = 1e-17;
  /// Relative tolerance of the real-axis contour integral.
  static constexpr double contour_rel_tol = 1e-14;
  /// Mainardi: series for s <= mainardi_switch, integral representation above.
  static constexpr double mainardi_switch = 1.0;
  static constexpr double mainardi_rel_tol = 1e-14;
  /// Tolerance of the Laplace-transform quadrature oracle.
  static constexpr double oracle_rel_tol = 1e-12;
  static constexpr int max_series_terms = 200000;
};

struct MLQuery {
  double a = 1.0;  ///< order, 0 < a <= 1
  double b = 1.0;  ///< second parameter, b > 0
  double x = 0.0;  ///< real argument
};

struct MainardiQuery {
  double eta = 0.5;  ///< order, 0 < eta < 1
  double s = 0.0;    ///< argument, s >= 0
};

/// Which Laplace moment of the Mainardi density to integrate.
enum class MainardiMoment {
  first,   ///< int K_a(s) e^{-xs} ds      = E_{a,1}(-x)
  second,  ///< int a s K_a(s) e^{-xs} ds  = E_{a,a}(-x)
};

/// Evaluation branch actually taken by mittag_leffler (for diagnostics).
enum class MLBranch { closed_form, series, asymptotic, contour, recurrence };

/// Mainardi function K_eta(s) = sum_m (-s)^m / (m! Gamma(1 - eta - eta m)).
double mainardi(const MainardiQuery& q);
inline double mainardi(double eta, double s) { return mainardi({eta, s}); }

/// Two-parameter Mittag-Leffler function E_{a,b}(x).
double mittag_leffler(const MLQuery& q);
inline double mittag_leffler(double a, double b, double x) {
  return mittag_leffler({a, b, x});
}

/// Branch selected by mittag_leffler for the given query.
MLBranch mittag_leffler_branch(const MLQuery& q);

/// Laplace transform of the Mainardi density (first moment) or of
/// a*s*K_a(s) (second moment) at x >= 0, by adaptive quadrature.
double ml_via_mainardi_quadrature(double a, double x, MainardiMoment mode);

/// Taylor partial sum of E_{a,b}(x) with exactly `n_terms` terms.
double ml_series(double a, double b, double x, int n_terms);

/// Number of Taylor terms the stopping rule retains for (a, b, x).
int ml_series_terms(double a, double b, double x);

/// 1/Gamma(x), zero at the poles of Gamma.
double rgamma(double x);

/// Thread-safe log|Gamma(x)|.
double log_gamma(double x);

}  // namespace tfsns::specfun
