#include "tfsns/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <tuple>

#include "tfsns/errors.hpp"
#include "tfsns/specfun.hpp"

namespace tfsns::spectral {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

std::vector<TorusMode> torus_modes(int N) {
  std::vector<TorusMode> out;
  for (int r = 1;; ++r) {
    std::vector<std::tuple<int, int, int>> ks;
    for (int kx = 0; kx <= r; ++kx) {
      for (int ky = -r; ky <= r; ++ky) {
        if (kx == 0 && ky <= 0) continue;
        ks.emplace_back(kx * kx + ky * ky, kx, ky);
      }
    }
    std::sort(ks.begin(), ks.end());
    out.clear();
    for (const auto& [k2, kx, ky] : ks) {
      // Shells beyond r*r are incomplete at this radius.
      if (k2 > r * r) break;
      out.push_back({kx, ky, true});
      out.push_back({kx, ky, false});
    }
    if (static_cast<int>(out.size()) >= N) break;
  }
  out.resize(N);
  return out;
}

void check_same_size(const BasisSpec& basis, const SpectralField& f) {
  if (f.size() != basis.N) {
    std::ostringstream os;
    os << "field has " << f.size() << " coefficients, basis has " << basis.N;
    throw ParameterError(os.str());
  }
}

}  // namespace

BasisKind parse_basis_kind(std::string_view name) {
  if (name == "dirichlet_sine_1d") return BasisKind::dirichlet_sine_1d;
  if (name == "divfree_torus_2d") return BasisKind::divfree_torus_2d;
  throw ParameterError("unknown basis kind '" + std::string(name) + "'");
}

std::string to_string(BasisKind kind) {
  return kind == BasisKind::dirichlet_sine_1d ? "dirichlet_sine_1d"
                                              : "divfree_torus_2d";
}

BasisSpec build_basis(BasisKind kind, int N, double nu, double alpha) {
  if (N < 1) throw ParameterError("basis needs N >= 1");
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    throw ParameterError("viscosity nu must be > 0");
  }
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    throw ParameterError("alpha must lie in (1, 2]");
  }
  BasisSpec b;
  b.kind = kind;
  b.N = N;
  b.nu = nu;
  b.alpha = alpha;
  b.eigenvalues.resize(N);
  if (kind == BasisKind::dirichlet_sine_1d) {
    for (int m = 0; m < N; ++m) {
      const double k = kPi * (m + 1);
      b.eigenvalues[m] = k * k;
    }
  } else {
    b.torus_modes = torus_modes(N);
    for (int m = 0; m < N; ++m) {
      const auto& md = b.torus_modes[m];
      b.eigenvalues[m] = 4.0 * kPi * kPi * (md.kx * md.kx + md.ky * md.ky);
    }
  }
  b.frac_eigenvalues =
      nu * b.eigenvalues.array().pow(0.5 * alpha).matrix();
  return b;
}

double sine_mode(int m, double x) { return kSqrt2 * std::sin(m * kPi * x); }

Eigen::Vector2d torus_mode_value(const TorusMode& mode, double x, double y) {
  const double kn = std::hypot(mode.kx, mode.ky);
  const double th = 2.0 * kPi * (mode.kx * x + mode.ky * y);
  const double s = kSqrt2 * (mode.cosine ? std::cos(th) : std::sin(th));
  return {-mode.ky / kn * s, mode.kx / kn * s};
}

double torus_mode_divergence(const TorusMode& mode, double x, double y) {
  const double kn = std::hypot(mode.kx, mode.ky);
  const double th = 2.0 * kPi * (mode.kx * x + mode.ky * y);
  // d/dtheta of the scalar profile
  const double ds = kSqrt2 * (mode.cosine ? -std::sin(th) : std::cos(th));
  const double dux_dx = -mode.ky / kn * ds * 2.0 * kPi * mode.kx;
  const double duy_dy = mode.kx / kn * ds * 2.0 * kPi * mode.ky;
  return dux_dx + duy_dy;
}

SpectralField apply_fractional_power(const BasisSpec& basis,
                                     const SpectralField& f, double gamma) {
  check_same_size(basis, f);
  if (gamma == 0.0) return f;
  return (f.array() * basis.eigenvalues.array().pow(gamma)).matrix();
}

double sobolev_norm(const BasisSpec& basis, const SpectralField& f,
                    double beta) {
  check_same_size(basis, f);
  if (beta == 0.0) return f.norm();
  return std::sqrt(
      (basis.eigenvalues.array().pow(beta) * f.array().square()).sum());
}

Eigen::VectorXd M_eta_symbol(const BasisSpec& basis, double t, double eta) {
  if (t < 0.0) throw DomainError("M_eta(t) needs t >= 0");
  Eigen::VectorXd s(basis.N);
  const double te = std::pow(t, eta);
  for (int m = 0; m < basis.N; ++m) {
    s[m] = specfun::mittag_leffler(eta, 1.0, -basis.frac_eigenvalues[m] * te);
  }
  return s;
}

Eigen::VectorXd M_eta_eta_symbol(const BasisSpec& basis, double t,
                                 double eta) {
  if (t < 0.0) throw DomainError("M_{eta,eta}(t) needs t >= 0");
  Eigen::VectorXd s(basis.N);
  const double te = std::pow(t, eta);
  for (int m = 0; m < basis.N; ++m) {
    s[m] = specfun::mittag_leffler(eta, eta, -basis.frac_eigenvalues[m] * te);
  }
  return s;
}

SpectralField apply_M_eta(const BasisSpec& basis, double t,
                          const SpectralField& f, double eta) {
  check_same_size(basis, f);
  return (M_eta_symbol(basis, t, eta).array() * f.array()).matrix();
}

SpectralField apply_M_eta_eta(const BasisSpec& basis, double t,
                              const SpectralField& f, double eta) {
  check_same_size(basis, f);
  return (M_eta_eta_symbol(basis, t, eta).array() * f.array()).matrix();
}

double increment_modulus(const BasisSpec& basis, double eta, double beta,
                         double tau1, double tau2) {
  if (tau1 == tau2) return 0.0;
  const Eigen::VectorXd a = M_eta_symbol(basis, tau1, eta);
  const Eigen::VectorXd b = M_eta_symbol(basis, tau2, eta);
  const Eigen::ArrayXd w = basis.eigenvalues.array().pow(0.5 * beta);
  const double num = (w * (b - a).array().abs()).maxCoeff();
  return num / std::pow(std::abs(tau2 - tau1), eta * beta / basis.alpha);
}

BoundProbeReport bound_probe(const BasisSpec& basis, double eta, double beta,
                             const std::vector<double>& t_grid) {
  if (!(beta >= 0.0 && beta <= basis.alpha)) {
    throw ParameterError("bound_probe needs 0 <= beta <= alpha");
  }
  BoundProbeReport rep;
  rep.expected_slope = -eta * beta / basis.alpha;
  const Eigen::ArrayXd w = basis.eigenvalues.array().pow(0.5 * beta);
  std::vector<double> lx, ly;
  for (double t : t_grid) {
    if (!(t > 0.0)) throw DomainError("bound_probe times must be > 0");
    const double r = (w * M_eta_symbol(basis, t, eta).array().abs()).maxCoeff();
    rep.t.push_back(t);
    rep.R.push_back(r);
    rep.max_constant =
        std::max(rep.max_constant, r * std::pow(t, -rep.expected_slope));
    if (r > 0.0 && std::isfinite(r)) {
      lx.push_back(std::log(t));
      ly.push_back(std::log(r));
    }
  }
  if (lx.size() < 3) {
    throw NumericalError("bound_probe: fewer than 3 usable points for the fit");
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw NumericalError("bound_probe: degenerate time grid");
  rep.slope = sxy / sxx;
  rep.intercept = my - rep.slope * mx;
  for (std::size_t i = 0; i + 1 < rep.t.size(); ++i) {
    rep.increment_modulus.push_back(
        increment_modulus(basis, eta, beta, rep.t[i], rep.t[i + 1]));
  }
  return rep;
}

}  // namespace tfsns::spectral
