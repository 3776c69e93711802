#include "tfsns/specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <utility>

#include "tfsns/errors.hpp"
#include "tfsns/quadrature.hpp"

namespace tfsns::specfun {

namespace {

using Tol = Tolerances;
constexpr double kPi = std::numbers::pi;

void check_ml_params(double a, double b) {
  if (!(a > 0.0 && a <= 1.0)) {
    std::ostringstream os;
    os << "Mittag-Leffler order a=" << a << " outside (0, 1]";
    throw ParameterError(os.str());
  }
  if (!(b > 0.0) || !std::isfinite(b)) {
    std::ostringstream os;
    os << "Mittag-Leffler parameter b=" << b << " must be > 0";
    throw ParameterError(os.str());
  }
}

// sin(pi x) with exact reduction of the argument.
double sin_pi(double x) {
  double r = std::fmod(x, 2.0);
  if (r < 0) r += 2.0;
  if (r == 0.0 || r == 1.0) return 0.0;
  if (r == 0.5) return 1.0;
  if (r == 1.5) return -1.0;
  return std::sin(kPi * r);
}

// Neumaier-compensated accumulator.
struct Accumulator {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

struct SeriesResult {
  double value;
  int terms;
};

// Taylor series in log-magnitude form. n_fixed > 0 forces that many terms.
SeriesResult taylor(double a, double b, double x, int n_fixed) {
  if (x == 0.0) return {rgamma(b), 1};
  const double lx = std::log(std::abs(x));
  const bool alternating = x < 0;
  Accumulator acc;
  double prev_log = -std::numeric_limits<double>::infinity();
  bool past_peak = false;
  const int limit = n_fixed > 0 ? n_fixed : Tol::max_series_terms;
  int m = 0;
  for (; m < limit; ++m) {
    const double log_term = m * lx - log_gamma(a * m + b);
    if (log_term > 709.0) {
      std::ostringstream os;
      os << "E_{" << a << "," << b << "}(" << x
         << ") overflows double precision";
      throw NumericalError(os.str());
    }
    const double mag = std::exp(log_term);
    acc.add((alternating && (m % 2 == 1)) ? -mag : mag);
    if (m > 0 && log_term < prev_log) past_peak = true;
    prev_log = log_term;
    if (n_fixed == 0 && past_peak &&
        mag <= Tol::series_rel_stop * std::abs(acc.value())) {
      ++m;
      break;
    }
  }
  if (n_fixed == 0 && m >= limit) {
    throw NumericalError("Mittag-Leffler series did not terminate");
  }
  return {acc.value(), m};
}

// Algebraic expansion E_{a,b}(-x) ~ -sum_k (-x)^{-k} / Gamma(b - a k),
// exponentially accurate on the negative axis for 0 < a < 1. Returns nullopt
// when the smallest term is still too large.
std::optional<double> negative_asymptotic(double a, double b, double x) {
  Accumulator acc;
  const double lx = std::log(x);
  double last_env = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 2000; ++k) {
    const double arg = b - a * k;
    // Envelope without the sin(pi y) factor of the reflection formula, so
    // terms that vanish near poles of Gamma cannot stop the sum early.
    const double env =
        arg >= 1.0 ? std::exp(-k * lx) * std::abs(rgamma(arg))
                  : std::exp(log_gamma(1.0 - arg) - k * lx) / kPi;
    if (env > last_env) return std::nullopt;  // diverging before converging
    last_env = env;
    // -(-x)^{-k} = -(-1)^k x^{-k}
    const double term = ((k % 2 == 0) ? -1.0 : 1.0) * std::exp(-k * lx) *
                        rgamma(arg);
    acc.add(term);
    if (env <= Tol::asymptotic_rel_stop * std::abs(acc.value())) {
      return acc.value();
    }
  }
  return std::nullopt;
}

// Real-axis integral representation of E_{a,b}(-x), 0 < a < 1, b < 1 + a,
// x > 0 (the argument lies outside the sector |arg z| <= a pi).
double negative_contour(double a, double b, double x) {
  const double inv_a = 1.0 / a;
  const double p = (1.0 - b) / a;
  const double s1 = sin_pi(1.0 - b);
  const double s2 = sin_pi(1.0 - b + a);
  const double c = std::cos(kPi * a);
  const double scale = 1.0 / (a * kPi);
  auto kernel = [=](double chi) {
    if (chi <= 0.0) return 0.0;
    const double decay = std::exp(p * std::log(chi) - std::pow(chi, inv_a));
    const double num = chi * s1 + x * s2;
    const double den = chi * chi + 2.0 * chi * x * c + x * x;
    return scale * decay * num / den;
  };
  const double chi_max = std::pow(60.0, a);
  // Break points: unit scale of exp(-chi^{1/a}) and the minimum of the
  // denominator when cos(pi a) < 0.
  double breaks[4] = {0.0, std::min(1.0, chi_max), chi_max, chi_max};
  const double peak = (c < 0.0) ? -c * x : 0.0;
  // Past chi^{1/a} = 40 the integrand is below e^{-40} of its head.
  if (peak > breaks[1] && peak < std::pow(40.0, a)) {
    breaks[2] = peak;
  }
  quad::Estimate total = quad::endpoint_singular(
      kernel, breaks[0], breaks[1], Tol::contour_rel_tol, 1e-300,
      "Mittag-Leffler contour (head)");
  // Tail pieces can be many orders below the head; judge the sum as a whole.
  for (int i = 1; i < 3; ++i) {
    if (breaks[i + 1] > breaks[i]) {
      const auto piece = quad::adaptive_unchecked(
          kernel, breaks[i], breaks[i + 1], Tol::contour_rel_tol, 0.0);
      total.value += piece.value;
      total.error += piece.error;
      total.l1 += piece.l1;
    }
  }
  quad::require_converged(total, Tol::contour_rel_tol, 1e-300, 0.0, chi_max,
                          "Mittag-Leffler contour");
  return total.value;
}

double exp_order_one(double b, double x);

std::pair<double, MLBranch> evaluate(double a, double b, double x) {
  if (x == 0.0) return {rgamma(b), MLBranch::closed_form};
  if (a == 1.0) {
    if (b == 1.0) return {std::exp(x), MLBranch::closed_form};
    if (b == 2.0) return {std::expm1(x) / x, MLBranch::closed_form};
    if (x > 0.0 || -x <= Tol::series_cancellation_limit) {
      return {taylor(a, b, x, 0).value, MLBranch::series};
    }
    return {exp_order_one(b, x), MLBranch::recurrence};
  }
  if (x > 0.0) return {taylor(a, b, x, 0).value, MLBranch::series};

  const double ax = -x;
  const double x_switch =
      std::min(5.0 * std::max(1.0, b),
               std::pow(Tol::series_cancellation_limit, a));
  if (ax <= x_switch) return {taylor(a, b, x, 0).value, MLBranch::series};
  // Subdominant exponentials of size exp(x^{1/a} cos(pi/a)) are not
  // captured by the algebraic expansion; only use it once they are negligible.
  const double cos_pa = std::cos(kPi / a);
  const bool subdominant_small =
      cos_pa >= 0.0 || std::pow(ax, 1.0 / a) * -cos_pa >= 40.0;
  if (subdominant_small) {
    if (auto v = negative_asymptotic(a, b, ax)) {
      return {*v, MLBranch::asymptotic};
    }
  }
  // The representation degenerates as b approaches 1 + a from below.
  if (b < 1.0 + a - 1e-9) {
    try {
      return {negative_contour(a, b, ax), MLBranch::contour};
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os.precision(17);
      os << "E_{" << a << "," << b << "}(" << x << "): " << e.what();
      throw NumericalError(os.str());
    }
  }
  // Lower b with E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z.
  const double lower = evaluate(a, b - a, x).first;
  return {(lower - rgamma(b - a)) / x, MLBranch::recurrence};
}

// E_{1,b}(x) for x well below zero and b not in {1, 2}.
double exp_order_one(double b, double x) {
  if (b > 1.0) {
    // 1/Gamma(m+b) = B(m+1, b-1) / (m! Gamma(b-1)) gives
    // E_{1,b}(x) = (1/Gamma(b-1)) int_0^1 e^{xs} (1-s)^{b-2} ds.
    auto f = [=](double s) { return std::exp(x * s) * std::pow(1.0 - s, b - 2.0); };
    const double integral =
        quad::endpoint_singular(f, 0.0, 1.0, Tol::contour_rel_tol, 1e-300,
                                "E_{1,b} beta integral")
            .value;
    return integral * rgamma(b - 1.0);
  }
  return rgamma(b) + x * exp_order_one(b + 1.0, x);
}

// Zolotarev-type integral for the Mainardi function, exact for s > 0:
// K(s) = s^{eta/(1-eta)} / ((1-eta) pi) int_0^pi A(phi) exp(-A(phi) s^{1/(1-eta)}) dphi.
double mainardi_integral(double eta, double s) {
  const double q = 1.0 - eta;
  const double big_x = std::pow(s, 1.0 / q);
  const double log_pref = (eta / q) * std::log(s) - std::log(q * kPi);
  auto f = [=](double phi) {
    const double sa = std::sin(eta * phi);
    const double sb = std::sin(q * phi);
    const double sc = std::sin(phi);
    if (sa <= 0.0 || sb <= 0.0 || sc <= 0.0) return 0.0;
    const double log_a =
        (eta / q) * std::log(sa) + std::log(sb) - std::log(sc) / q;
    if (!std::isfinite(log_a)) return 0.0;
    const double v = log_pref + log_a - std::exp(log_a) * big_x;
    return v < -745.0 ? 0.0 : std::exp(v);
  };
  return quad::endpoint_singular(f, 0.0, kPi, Tol::mainardi_rel_tol, 1e-300,
                                 "Mainardi integral representation")
      .value;
}

double mainardi_series(double eta, double s) {
  if (s == 0.0) return rgamma(1.0 - eta);
  // 1/Gamma(1 - eta(m+1)) = Gamma(eta(m+1)) sin(pi eta (m+1)) / pi
  const double ls = std::log(s);
  Accumulator acc;
  double prev = -std::numeric_limits<double>::infinity();
  bool past_peak = false;
  for (int m = 0; m < Tol::max_series_terms; ++m) {
    const double g = eta * (m + 1);
    const double log_mag = m * ls - log_gamma(m + 1.0) + log_gamma(g);
    const double mag = std::exp(log_mag) / kPi;
    const double term = ((m % 2 == 1) ? -mag : mag) * sin_pi(g);
    acc.add(term);
    if (m > 0 && log_mag < prev) past_peak = true;
    prev = log_mag;
    if (past_peak && mag <= Tol::series_rel_stop * std::abs(acc.value())) {
      break;
    }
  }
  return acc.value();
}

}  // namespace

double log_gamma(double x) {
  int sign = 0;
#if defined(__GLIBC__)
  return ::lgamma_r(x, &sign);
#else
  (void)sign;
  return std::lgamma(x);
#endif
}

double rgamma(double x) {
  if (x > 0.0) {
    return x < 170.0 ? 1.0 / std::tgamma(x) : std::exp(-log_gamma(x));
  }
  if (x == std::floor(x)) return 0.0;
  // Reflection: 1/Gamma(x) = Gamma(1-x) sin(pi x) / pi
  const double s = sin_pi(x);
  const double y = 1.0 - x;
  if (y < 170.0) return std::tgamma(y) * s / kPi;
  const double mag = std::exp(log_gamma(y) + std::log(std::abs(s) / kPi));
  return s < 0 ? -mag : mag;
}

double mainardi(const MainardiQuery& q) {
  if (!(q.eta > 0.0 && q.eta < 1.0)) {
    std::ostringstream os;
    os << "Mainardi order eta=" << q.eta << " outside (0, 1)";
    throw ParameterError(os.str());
  }
  if (!(q.s >= 0.0)) {
    std::ostringstream os;
    os << "Mainardi argument s=" << q.s << " must be >= 0";
    throw DomainError(os.str());
  }
  if (q.s <= Tol::mainardi_switch) return mainardi_series(q.eta, q.s);
  return mainardi_integral(q.eta, q.s);
}

double mittag_leffler(const MLQuery& q) {
  check_ml_params(q.a, q.b);
  if (!std::isfinite(q.x)) {
    throw DomainError("Mittag-Leffler argument must be finite");
  }
  return evaluate(q.a, q.b, q.x).first;
}

MLBranch mittag_leffler_branch(const MLQuery& q) {
  check_ml_params(q.a, q.b);
  return evaluate(q.a, q.b, q.x).second;
}

double ml_series(double a, double b, double x, int n_terms) {
  check_ml_params(a, b);
  if (n_terms < 1) throw ParameterError("ml_series needs n_terms >= 1");
  return taylor(a, b, x, n_terms).value;
}

int ml_series_terms(double a, double b, double x) {
  check_ml_params(a, b);
  return taylor(a, b, x, 0).terms;
}

double ml_via_mainardi_quadrature(double a, double x, MainardiMoment mode) {
  if (!(a > 0.0 && a < 1.0)) {
    std::ostringstream os;
    os << "Mainardi quadrature order a=" << a << " outside (0, 1)";
    throw ParameterError(os.str());
  }
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError("Mainardi quadrature needs a finite x >= 0");
  }
  const bool second = mode == MainardiMoment::second;
  auto f = [=](double s) {
    const double k = mainardi(a, s);
    const double w = std::exp(-x * s);
    return second ? a * s * k * w : k * w;
  };
  // K_a decays like exp(-(1-a) a^{a/(1-a)} s^{1/(1-a)}); stop where that
  // exponent reaches 80.
  const double q = 1.0 - a;
  const double decay_coeff = q * std::pow(a, a / q);
  double s_hi = std::pow(80.0 / decay_coeff, q);
  if (x > 0.0) s_hi = std::min(s_hi, std::max(2.0, 80.0 / x));
  s_hi = std::max(s_hi, 2.0);

  std::vector<double> breaks{0.0};
  for (double c : {1.0, 5.0, 20.0}) {
    if (x > 0.0 && c / x < Tol::mainardi_switch) breaks.push_back(c / x);
  }
  breaks.push_back(Tol::mainardi_switch);
  breaks.push_back(std::min(2.0, s_hi));
  if (s_hi > 2.0) breaks.push_back(s_hi);

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] <= breaks[i]) continue;
    total += quad::adaptive(f, breaks[i], breaks[i + 1], Tol::oracle_rel_tol,
                            1e-300, "Mainardi Laplace quadrature")
                 .value;
  }
  return total;
}

}  // namespace tfsns::specfun
