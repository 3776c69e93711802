#include "tfsns/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tfsns/errors.hpp"
#include "tfsns/specfun.hpp"

namespace tfsns::dynamics {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

[[noreturn]] void range_error(const std::string& field, double v,
                              const std::string& bound) {
  std::ostringstream os;
  os << field << "=" << v << " violates " << bound;
  throw ParameterError(os.str());
}

void check_finite_rows(const Eigen::MatrixXd& z, double blowup) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double n = z.row(i).norm();
    if (!std::isfinite(n) || n > blowup) {
      std::ostringstream os;
      os << "state norm " << n << " at grid index " << i
         << " exceeds the blow-up guard " << blowup;
      throw NumericalError(os.str());
    }
  }
}

}  // namespace

void check_ranges(const ModelParams& mp) {
  if (!(mp.eta > 0.0 && mp.eta <= 1.0)) range_error("model.eta", mp.eta, "eta in (0,1)");
  if (!(mp.alpha > 1.0 && mp.alpha <= 2.0)) range_error("model.alpha", mp.alpha, "alpha in (1,2]");
  if (!(mp.beta >= 0.0 && mp.beta < mp.alpha)) range_error("model.beta", mp.beta, "0 <= beta < alpha");
  if (!(mp.p >= 2.0)) range_error("model.p", mp.p, "p >= 2");
  if (!(mp.nu > 0.0) || !std::isfinite(mp.nu)) range_error("model.nu", mp.nu, "nu > 0");
  if (!(mp.T > 0.0) || !std::isfinite(mp.T)) range_error("model.T", mp.T, "T > 0");
  if (mp.N < 1) range_error("model.N", mp.N, "N >= 1");
  if (mp.K < 1) range_error("model.K", mp.K, "K >= 1");
}

bool ValidityReport::all_pass() const {
  for (const auto& c : conditions) {
    if (!c.pass) return false;
  }
  return true;
}

std::string ValidityReport::first_violation() const {
  for (const auto& c : conditions) {
    if (!c.pass) return c.name;
  }
  return {};
}

ValidityReport validate_params(const ModelParams& mp) {
  const double eta = mp.eta, a = mp.alpha, b = mp.beta, p = mp.p;
  ValidityReport r;
  const double ep = eta * p;
  r.conditions.push_back({"c1", "eta*p != 1", ep, std::abs(ep - 1.0) > 1e-12});
  const double c2 = p * (1.0 - eta / a) - 1.0;
  r.conditions.push_back({"c2", "p(1-eta/alpha)-1 > 0", c2, c2 > 0.0});
  const double c3 = p * (eta - eta * (b + 1.0) / a) - 1.0;
  r.conditions.push_back({"c3", "p(eta-eta(beta+1)/alpha)-1 > 0", c3, c3 > 0.0});
  const double c4 = 2.0 * p * eta - p - 2.0;
  r.conditions.push_back({"c4", "2p*eta-p-2 > 0", c4, c4 > 0.0});
  const double c5 = 2.0 * p * eta * (a - b) - (p + 2.0) * a;
  r.conditions.push_back({"c5", "2p*eta(alpha-beta)-(p+2)alpha > 0", c5, c5 > 0.0});
  return r;
}

void require_valid(const ModelParams& mp, bool override_validation) {
  check_ranges(mp);
  if (override_validation) return;
  const auto rep = validate_params(mp);
  for (const auto& c : rep.conditions) {
    if (!c.pass) {
      std::ostringstream os;
      os << "condition " << c.name << " (" << c.formula << ") fails with value "
         << c.value << "; pass --override-validation to run anyway";
      throw ParameterError(os.str());
    }
  }
}

NonlinearityKind parse_nonlinearity_kind(const std::string& name) {
  if (name == "zero") return NonlinearityKind::zero;
  if (name == "burgers_1d") return NonlinearityKind::burgers_1d;
  if (name == "navier_stokes_2d") return NonlinearityKind::navier_stokes_2d;
  throw ParameterError("unknown nonlinearity kind '" + name + "'");
}

std::string to_string(NonlinearityKind kind) {
  switch (kind) {
    case NonlinearityKind::zero: return "zero";
    case NonlinearityKind::burgers_1d: return "burgers_1d";
    case NonlinearityKind::navier_stokes_2d: return "navier_stokes_2d";
  }
  return "?";
}

Nonlinearity::Nonlinearity(const BasisSpec& basis, NonlinearitySpec spec)
    : spec_(spec), N_(basis.N) {
  if (!(spec.R > 0.0)) throw ParameterError("saturation radius R must be > 0");
  using spectral::BasisKind;
  if (spec.kind == NonlinearityKind::zero) return;
  if (spec.kind == NonlinearityKind::burgers_1d) {
    if (basis.kind != BasisKind::dirichlet_sine_1d) {
      throw ParameterError("burgers_1d needs the dirichlet_sine_1d basis");
    }
    // Midpoint rule with 2N nodes is exact for sin(j pi x) sin(m pi x),
    // j <= 2N, m <= N, so the quadratic product is projected alias-free.
    points_ = 2 * N_;
    weight_ = 1.0 / points_;
    U_.resize(points_, N_);
    Ux_.resize(points_, N_);
    for (int i = 0; i < points_; ++i) {
      const double x = (i + 0.5) / points_;
      for (int m = 0; m < N_; ++m) {
        const double k = kPi * (m + 1);
        U_(i, m) = kSqrt2 * std::sin(k * x);
        Ux_(i, m) = kSqrt2 * k * std::cos(k * x);
      }
    }
    return;
  }
  if (basis.kind != BasisKind::divfree_torus_2d) {
    throw ParameterError("navier_stokes_2d needs the divfree_torus_2d basis");
  }
  int kmax = 0;
  for (const auto& md : basis.torus_modes) {
    kmax = std::max({kmax, std::abs(md.kx), std::abs(md.ky)});
  }
  // Triple products reach wavenumber 3 kmax; the periodic trapezoid rule on
  // M > 3 kmax points per direction integrates them exactly.
  const int M = 3 * kmax + 1;
  points_ = M * M;
  weight_ = 1.0 / points_;
  U_.resize(points_, N_);
  V_.resize(points_, N_);
  Ux_.resize(points_, N_);
  Uy_.resize(points_, N_);
  Vx_.resize(points_, N_);
  Vy_.resize(points_, N_);
  for (int a = 0; a < M; ++a) {
    for (int b = 0; b < M; ++b) {
      const int i = a * M + b;
      const double x = static_cast<double>(a) / M;
      const double y = static_cast<double>(b) / M;
      for (int m = 0; m < N_; ++m) {
        const auto& md = basis.torus_modes[m];
        const double kn = std::hypot(md.kx, md.ky);
        const double th = 2.0 * kPi * (md.kx * x + md.ky * y);
        const double s = kSqrt2 * (md.cosine ? std::cos(th) : std::sin(th));
        const double ds = kSqrt2 * (md.cosine ? -std::sin(th) : std::cos(th));
        const double px = -md.ky / kn, py = md.kx / kn;
        U_(i, m) = px * s;
        V_(i, m) = py * s;
        Ux_(i, m) = px * ds * 2.0 * kPi * md.kx;
        Uy_(i, m) = px * ds * 2.0 * kPi * md.ky;
        Vx_(i, m) = py * ds * 2.0 * kPi * md.kx;
        Vy_(i, m) = py * ds * 2.0 * kPi * md.ky;
      }
    }
  }
}

SpectralField Nonlinearity::bilinear(const SpectralField& z,
                                     const SpectralField& w) const {
  if (z.size() != N_ || w.size() != N_) {
    throw ParameterError("nonlinearity: field size does not match basis");
  }
  if (spec_.kind == NonlinearityKind::zero) return SpectralField::Zero(N_);
  if (spec_.kind == NonlinearityKind::burgers_1d) {
    const Eigen::VectorXd f =
        -((U_ * z).array() * (Ux_ * w).array()).matrix();
    return weight_ * (U_.transpose() * f);
  }
  const Eigen::ArrayXd u = U_ * z, v = V_ * z;
  const Eigen::VectorXd f1 =
      -(u * (Ux_ * w).array() + v * (Uy_ * w).array()).matrix();
  const Eigen::VectorXd f2 =
      -(u * (Vx_ * w).array() + v * (Vy_ * w).array()).matrix();
  return weight_ * (U_.transpose() * f1 + V_.transpose() * f2);
}

SpectralField Nonlinearity::operator()(const SpectralField& z) const {
  if (spec_.kind == NonlinearityKind::zero) {
    if (z.size() != N_) throw ParameterError("nonlinearity: field size does not match basis");
    return SpectralField::Zero(N_);
  }
  const double n = z.norm();
  if (std::isfinite(spec_.R) && n > spec_.R) {
    const double s = spec_.R / n;
    return (s * s) * bilinear(z, z);
  }
  return bilinear(z, z);
}

NoiseCoeffKind parse_noise_coeff_kind(const std::string& name) {
  if (name == "additive") return NoiseCoeffKind::additive;
  if (name == "saturating_diagonal") return NoiseCoeffKind::saturating_diagonal;
  throw ParameterError("unknown noise coefficient kind '" + name + "'");
}

std::string to_string(NoiseCoeffKind kind) {
  return kind == NoiseCoeffKind::additive ? "additive" : "saturating_diagonal";
}

Eigen::VectorXd noise_coeff(const NoiseCoeffSpec& spec, double /*t*/,
                            const SpectralField& z) {
  if (spec.sigma.size() != z.size()) {
    throw ParameterError("noise coefficient sigma does not match the field size");
  }
  if (spec.kind == NoiseCoeffKind::additive) return spec.sigma;
  return (spec.sigma.array() * z.array().tanh()).matrix();
}

NoiseCoeffConstants noise_coeff_constants(const NoiseCoeffSpec& spec,
                                          const stochastic::NoiseSpec& noise) {
  NoiseCoeffConstants c;
  const Eigen::ArrayXd w =
      spec.sigma.array().abs() * noise.q_eigenvalues.array().sqrt();
  c.L1 = std::sqrt(w.square().sum());
  c.L2 = spec.kind == NoiseCoeffKind::additive ? 0.0 : w.maxCoeff();
  return c;
}

KernelTables build_kernel_tables(const BasisSpec& basis, double eta, double T,
                                 int K, ConvolutionRule rule) {
  using specfun::mittag_leffler;
  KernelTables kt;
  const int N = basis.N;
  kt.h = T / K;
  kt.homogeneous.resize(K + 1, N);
  kt.drift = Eigen::MatrixXd::Zero(K + 1, N);
  kt.noise = Eigen::MatrixXd::Zero(K + 1, N);
  kt.ml_eta_eta.resize(K + 1, N);
  for (int m = 0; m < N; ++m) {
    const double mu = basis.frac_eigenvalues[m];
    double F_prev = 0.0;
    for (int j = 0; j <= K; ++j) {
      const double tj = j * kt.h;
      const double te = std::pow(tj, eta);
      kt.homogeneous(j, m) = mittag_leffler(eta, 1.0, -mu * te);
      kt.ml_eta_eta(j, m) = mittag_leffler(eta, eta, -mu * te);
      if (j == 0) continue;
      // int_0^s u^{eta-1} E_{eta,eta}(-mu u^eta) du = s^eta E_{eta,eta+1}(-mu s^eta)
      const double F = te * mittag_leffler(eta, eta + 1.0, -mu * te);
      if (rule == ConvolutionRule::exact_kernel) {
        kt.drift(j, m) = F - F_prev;
      } else {
        const double w = (te - std::pow((j - 1) * kt.h, eta)) / eta;
        kt.drift(j, m) = w * kt.ml_eta_eta(j, m);
      }
      F_prev = F;
      kt.noise(j, m) = std::pow(tj, eta - 1.0) * kt.ml_eta_eta(j, m);
    }
  }
  return kt;
}

std::vector<double> singular_weights(const std::vector<double>& grid, int i,
                                     double eta) {
  std::vector<double> w(i);
  for (int k = 0; k < i; ++k) {
    w[k] = (std::pow(grid[i] - grid[k], eta) -
            std::pow(grid[i] - grid[k + 1], eta)) /
           eta;
  }
  return w;
}

FixedControl::FixedControl(Eigen::MatrixXd v, Eigen::VectorXd c_diag,
                           std::shared_ptr<const KernelTables> tables)
    : v_(std::move(v)), c_(std::move(c_diag)), tables_(std::move(tables)) {
  if (v_.cols() != c_.size() || v_.cols() != tables_->drift.cols() ||
      v_.rows() + 1 != tables_->drift.rows()) {
    throw ParameterError("fixed control: v must be K x N matching the grid");
  }
}

void FixedControl::coefficient(int k, const History& /*h*/,
                               Eigen::Ref<Eigen::VectorXd> out) const {
  out = v_.row(k).transpose();
}

void FixedControl::accumulate(int i, const Eigen::MatrixXd& xi,
                              Eigen::Ref<Eigen::VectorXd> out) const {
  const auto& D = tables_->drift;
  for (Eigen::Index m = 0; m < xi.cols(); ++m) {
    double s = 0.0;
    for (int k = 0; k < i; ++k) s += D(i - k, m) * xi(k, m);
    out[m] += c_[m] * s;
  }
}

MildSolver::MildSolver(BasisSpec basis, ModelParams mp, NonlinearitySpec nl,
                       NoiseCoeffSpec noise_coeff, ConvolutionRule rule)
    : basis_(std::move(basis)),
      mp_(mp),
      grid_(stochastic::uniform_grid(mp.T, mp.K)),
      tables_(std::make_shared<KernelTables>(
          build_kernel_tables(basis_, mp.eta, mp.T, mp.K, rule))),
      G_(basis_, nl),
      hbar_(std::move(noise_coeff)) {
  check_ranges(mp_);
  if (basis_.N != mp_.N) throw ParameterError("basis size differs from model.N");
  if (hbar_.sigma.size() == 0) hbar_.sigma = Eigen::VectorXd::Zero(basis_.N);
  if (hbar_.sigma.size() != basis_.N) {
    throw ParameterError("noise sigma length differs from model.N");
  }
}

Eigen::MatrixXd MildSolver::homogeneous(const SpectralField& z0) const {
  return tables_->homogeneous.array().rowwise() * z0.transpose().array();
}

Eigen::MatrixXd MildSolver::sweep(const Eigen::MatrixXd* z_in,
                                  const SpectralField& z0,
                                  const stochastic::WienerPath* path,
                                  const ControlLaw* control) const {
  const int K = mp_.K, N = basis_.N;
  if (z0.size() != N) throw ParameterError("z0 size differs from model.N");
  if (z_in && (z_in->rows() != K + 1 || z_in->cols() != N)) {
    throw ParameterError("path must be (K+1) x N");
  }
  if (path && (path->increments.rows() != K || path->increments.cols() != N)) {
    throw ParameterError("Wiener increments must be K x N");
  }
  const auto& kt = *tables_;
  Eigen::MatrixXd out(K + 1, N);
  out.row(0) = z0.transpose();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(K, N);
  Eigen::MatrixXd NT = Eigen::MatrixXd::Zero(K, N);
  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(K, N);
  const Eigen::MatrixXd& src = z_in ? *z_in : out;
  const History hist{src, G, NT, path};
  const bool nonlinear = G_.spec().kind != NonlinearityKind::zero;
  Eigen::VectorXd zk(N), row(N), tmp(N);
  for (int i = 1; i <= K; ++i) {
    const int k = i - 1;
    zk = src.row(k).transpose();
    if (nonlinear) G.row(k) = G_(zk).transpose();
    if (path) {
      NT.row(k) = noise_coeff(hbar_, grid_[k], zk)
                      .cwiseProduct(path->increments.row(k).transpose())
                      .transpose();
    }
    if (control) {
      control->coefficient(k, hist, tmp);
      xi.row(k) = tmp.transpose();
    }
    for (int m = 0; m < N; ++m) {
      double s = kt.homogeneous(i, m) * z0[m];
      if (nonlinear) {
        for (int q = 0; q < i; ++q) s += kt.drift(i - q, m) * G(q, m);
      }
      if (path) {
        for (int q = 0; q < i; ++q) s += kt.noise(i - q, m) * NT(q, m);
      }
      row[m] = s;
    }
    if (control) control->accumulate(i, xi, row);
    out.row(i) = row.transpose();
  }
  return out;
}

Eigen::MatrixXd MildSolver::evaluate(const Eigen::MatrixXd& z,
                                     const SpectralField& z0,
                                     const stochastic::WienerPath* path,
                                     const ControlLaw* control) const {
  return sweep(&z, z0, path, control);
}

Eigen::MatrixXd MildSolver::forward(const SpectralField& z0,
                                    const stochastic::WienerPath* path,
                                    const ControlLaw* control) const {
  return sweep(nullptr, z0, path, control);
}

SolveResult MildSolver::picard_solve(const SpectralField& z0,
                                     const stochastic::WienerPath* path,
                                     const ControlLaw* control,
                                     const SolverOptions& opt) const {
  if (!(opt.tol > 0.0) || opt.max_iter < 1) {
    throw ParameterError("Picard needs tol > 0 and max_iter >= 1");
  }
  SolveResult res;
  Eigen::MatrixXd z = opt.init == PicardInit::forward
                          ? forward(z0, path, control)
                          : homogeneous(z0);
  check_finite_rows(z, opt.blowup);
  if (opt.keep_iterates) res.iterates.push_back(z);
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::MatrixXd zn = evaluate(z, z0, path, control);
    check_finite_rows(zn, opt.blowup);
    const double r = sup_distance(zn, z);
    res.residuals.push_back(r);
    z = std::move(zn);
    if (opt.keep_iterates) res.iterates.push_back(z);
    if (r < opt.tol) {
      res.path = std::move(z);
      res.picard_iterations = it;
      res.final_residual = r;
      return res;
    }
  }
  std::ostringstream os;
  os << "Picard iteration did not reach tol " << opt.tol << " in "
     << opt.max_iter << " iterations (last residual " << res.residuals.back()
     << ")";
  throw ConvergenceError(os.str(), res.residuals);
}

double sup_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).rowwise().norm().maxCoeff();
}

}  // namespace tfsns::dynamics
