#include "tfsns/control.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "tfsns/errors.hpp"
#include "tfsns/quadrature.hpp"
#include "tfsns/specfun.hpp"

namespace tfsns::control {

using specfun::mittag_leffler;

std::vector<int> uncontrollable_modes(const ControlSetup& setup) {
  std::vector<int> out;
  for (Eigen::Index m = 0; m < setup.c_diag.size(); ++m) {
    if (setup.c_diag[m] == 0.0) out.push_back(static_cast<int>(m));
  }
  return out;
}

GrammianDiag grammian_diag(const BasisSpec& basis, double eta, double T,
                           const Eigen::VectorXd& c_diag, int n_quad) {
  if (n_quad < 8) throw ParameterError("grammian_diag needs n_quad >= 8");
  if (c_diag.size() != basis.N) {
    throw ParameterError("control gains c_diag do not match the basis size");
  }
  const quad::GaussLegendre gl(n_quad);
  GrammianDiag g;
  g.quadrature_nodes = n_quad;
  g.gamma.resize(basis.N);
  const double wT = std::pow(T, eta);
  for (int m = 0; m < basis.N; ++m) {
    const double c = c_diag[m];
    if (c == 0.0) {
      g.gamma[m] = 0.0;
      continue;
    }
    const double mu = basis.frac_eigenvalues[m];
    const double I = gl.integrate(
        [&](double w) {
          const double e = mittag_leffler(eta, eta, -mu * w);
          return e * e;
        },
        0.0, wT);
    g.gamma[m] = c * c * I / eta;
  }
  return g;
}

SpectralField resolvent_apply(const GrammianDiag& g, double lambda,
                              const SpectralField& f) {
  if (!(lambda > 0.0)) throw ParameterError("resolvent needs lambda > 0");
  if (f.size() != g.gamma.size()) {
    throw ParameterError("resolvent: field size does not match the Grammian");
  }
  return (f.array() / (lambda + g.gamma.array())).matrix();
}

SpectralField apply_LT(const dynamics::KernelTables& kt,
                       const Eigen::VectorXd& c_diag,
                       const Eigen::MatrixXd& v_path) {
  const Eigen::Index K = kt.drift.rows() - 1;
  if (v_path.rows() != K || v_path.cols() != c_diag.size() ||
      v_path.cols() != kt.drift.cols()) {
    throw ParameterError("apply_LT: control path must be K x N on the solver grid");
  }
  SpectralField out = SpectralField::Zero(v_path.cols());
  for (Eigen::Index m = 0; m < v_path.cols(); ++m) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) s += kt.drift(K - k, m) * v_path(k, m);
    out[m] = c_diag[m] * s;
  }
  return out;
}

ShapedWeights::ShapedWeights(const BasisSpec& basis, double eta, double T,
                             int K, const Eigen::VectorXd& c_diag, int n_nodes)
    : K_(K),
      stride_(static_cast<std::size_t>(K) * (K + 1) / 2),
      psi_(stride_ * basis.N, 0.0) {
  if (K < 1 || n_nodes < 2) throw ParameterError("shaped weights need K >= 1");
  if (c_diag.size() != basis.N) {
    throw ParameterError("control gains c_diag do not match the basis size");
  }
  const double h = T / K;
  const double he = std::pow(h, eta);
  const quad::GaussLegendre gl(n_nodes);
  const int n = n_nodes;
  std::vector<double> s(n), w(n);
  for (int q = 0; q < n; ++q) {
    s[q] = 0.5 * (gl.nodes[q] + 1.0);
    w[q] = 0.5 * gl.weights[q];
  }
  // (h (j - s_q))^{eta-1}, shared by all modes.
  Eigen::MatrixXd pw(K + 1, n);
  for (int j = 2; j <= K; ++j) {
    for (int q = 0; q < n; ++q) pw(j, q) = std::pow(h * (j - s[q]), eta - 1.0);
  }
  Eigen::MatrixXd vander(n, n);
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) vander(p, q) = std::pow(s[q], p);
  }
  const auto vander_qr = vander.colPivHouseholderQr();
  const quad::GaussLegendre gl_end(2 * n_nodes);

  Eigen::MatrixXd tb(K + 1, n);
  for (int m = 0; m < basis.N; ++m) {
    const double c2 = c_diag[m] * c_diag[m];
    if (c2 == 0.0) continue;
    const double mu = basis.frac_eigenvalues[m];
    // E_{eta,eta}(-mu (h (l - s_q))^eta) serves both kernels.
    for (int l = 1; l <= K; ++l) {
      for (int q = 0; q < n; ++q) {
        tb(l, q) = mittag_leffler(eta, eta, -mu * std::pow(h * (l - s[q]), eta));
      }
    }
    // Product rule on the step adjacent to t_i: exact moments
    // int_0^h u^{eta-1} E_{eta,eta}(-mu u^eta) (h-u)^p du
    //   = p! h^{eta+p} E_{eta,eta+p+1}(-mu h^eta), with (h-u) = h s.
    Eigen::VectorXd mom(n);
    double fact = 1.0;
    for (int p = 0; p < n; ++p) {
      if (p > 0) fact *= p;
      mom[p] = fact * he * mittag_leffler(eta, eta + p + 1.0, -mu * he);
    }
    const Eigen::VectorXd omega = vander_qr.solve(mom);
    // Last step, both kernels singular at T: substitute w = u^eta.
    const double last =
        gl_end.integrate(
            [&](double x) {
              const double e = mittag_leffler(eta, eta, -mu * x);
              return e * e;
            },
            0.0, he) /
        eta;

    double* out = psi_.data() + static_cast<std::size_t>(m) * stride_;
    for (int i = 1; i <= K; ++i) {
      double* row = out + offset(i);
      for (int k = 0; k < i; ++k) {
        const int j = i - k;
        double v = 0.0;
        if (j >= 2) {
          for (int q = 0; q < n; ++q) v += w[q] * pw(j, q) * tb(j, q) * tb(K - k, q);
          v *= h;
        } else if (i < K) {
          for (int q = 0; q < n; ++q) v += omega[q] * tb(K - k, q);
        } else {
          v = last;
        }
        row[k] = c2 * v;
      }
    }
  }
}

Eigen::VectorXd ShapedWeights::terminal_sum() const {
  const Eigen::Index N = static_cast<Eigen::Index>(psi_.size() / stride_);
  Eigen::VectorXd out(N);
  for (Eigen::Index m = 0; m < N; ++m) {
    double s = 0.0;
    for (int k = 0; k < K_; ++k) s += (*this)(static_cast<int>(m), K_, k);
    out[m] = s;
  }
  return out;
}

SpectralField apply_LT_shaped(const ShapedWeights& psi,
                              const Eigen::MatrixXd& xi) {
  const int K = psi.steps();
  if (xi.rows() != K) throw ParameterError("apply_LT_shaped: xi must be K x N");
  SpectralField out(xi.cols());
  for (Eigen::Index m = 0; m < xi.cols(); ++m) {
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += psi(static_cast<int>(m), K, k) * xi(k, m);
    out[m] = s;
  }
  return out;
}

FeedbackControl::FeedbackControl(const dynamics::MildSolver& solver,
                                 ControlSetup setup, const GrammianDiag& gramm,
                                 std::shared_ptr<const ShapedWeights> psi,
                                 const SpectralField& z0)
    : setup_(std::move(setup)),
      kt_(solver.tables()),
      psi_(std::move(psi)),
      K_(solver.params().K) {
  const int N = solver.basis().N;
  if (!(setup_.lambda > 0.0)) throw ParameterError("control.lambda must be > 0");
  if (setup_.c_diag.size() != N || gramm.gamma.size() != N ||
      setup_.target_mean.size() != N || z0.size() != N) {
    throw ParameterError("control setup sizes do not match model.N");
  }
  if (setup_.phi.size() != 0 && (setup_.phi.rows() != K_ || setup_.phi.cols() != N)) {
    throw ParameterError("control phi must be K x N");
  }
  if (!psi_ || psi_->steps() != K_) {
    throw ParameterError("shaped weights were built for a different grid");
  }
  inv_ = (setup_.lambda + gramm.gamma.array()).inverse().matrix();
  d_ = setup_.target_mean -
       kt_->homogeneous.row(K_).transpose().cwiseProduct(z0);
  g_weight_.resize(K_, N);
  n_weight_.resize(K_, N);
  for (int j = 0; j < K_; ++j) {
    if (setup_.kernel_weight) {
      g_weight_.row(j) = kt_->drift.row(K_ - j);
      n_weight_.row(j) = kt_->noise.row(K_ - j);
    } else {
      g_weight_.row(j) = kt_->h * kt_->ml_eta_eta.row(K_ - j);
      n_weight_.row(j) = kt_->ml_eta_eta.row(K_ - j);
    }
  }
}

void FeedbackControl::coefficient(int k, const dynamics::History& h,
                                  Eigen::Ref<Eigen::VectorXd> out) const {
  if (k < 0 || k >= K_) throw ParameterError("control step index out of range");
  Eigen::VectorXd acc = d_;
  for (int j = 0; j < k; ++j) {
    acc -= g_weight_.row(j).transpose().cwiseProduct(h.G.row(j).transpose());
    acc -= n_weight_.row(j).transpose().cwiseProduct(h.noise_term.row(j).transpose());
  }
  if (setup_.phi.size() != 0 && h.path) {
    for (int j = 0; j < k; ++j) {
      acc += setup_.phi.row(j).transpose().cwiseProduct(
          h.path->increments.row(j).transpose());
    }
  }
  out = inv_.cwiseProduct(acc);
}

void FeedbackControl::accumulate(int i, const Eigen::MatrixXd& xi,
                                 Eigen::Ref<Eigen::VectorXd> out) const {
  const auto& psi = *psi_;
  for (Eigen::Index m = 0; m < xi.cols(); ++m) {
    double s = 0.0;
    for (int k = 0; k < i; ++k) s += psi(static_cast<int>(m), i, k) * xi(k, m);
    out[m] += s;
  }
}

Eigen::VectorXd FeedbackControl::control_value(int k,
                                               const dynamics::History& h) const {
  Eigen::VectorXd xi(inv_.size());
  coefficient(k, h, xi);
  return setup_.c_diag.cwiseProduct(kt_->ml_eta_eta.row(K_ - k).transpose())
      .cwiseProduct(xi);
}

ControlledSample simulate_controlled(const dynamics::MildSolver& solver,
                                    const ControlSetup& setup,
                                    const GrammianDiag& gramm,
                                    std::shared_ptr<const ShapedWeights> psi,
                                    const SpectralField& z0,
                                    const stochastic::WienerPath* path,
                                    const dynamics::SolverOptions& opt) {
  const auto& nl = solver.nonlinearity().spec();
  if (nl.kind != dynamics::NonlinearityKind::zero && !std::isfinite(nl.R)) {
    throw ParameterError(
        "controlled runs need a finite saturation radius nonlinearity.R");
  }
  const FeedbackControl law(solver, setup, gramm, std::move(psi), z0);
  const auto res = solver.picard_solve(z0, path, &law, opt);
  ControlledSample out;
  const int K = solver.params().K;
  out.terminal = res.path.row(K).transpose();
  out.target = setup.target_mean;
  if (setup.phi.size() != 0 && path) {
    out.target += stochastic::ito_integral(setup.phi, *path);
  }
  out.error_norm = (out.terminal - out.target).norm();
  out.picard_iterations = res.picard_iterations;
  return out;
}

SweepReport controllability_sweep(const std::vector<double>& lambdas,
                                  const dynamics::MildSolver& solver,
                                  const ControlSetup& setup,
                                  const stochastic::NoiseSpec& noise,
                                  const SpectralField& z0,
                                  const SweepOptions& opt) {
  if (lambdas.empty()) throw ParameterError("control sweep needs at least one lambda");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) throw ParameterError("lambda values must be > 0");
    if (i > 0 && !(lambdas[i] < lambdas[i - 1])) {
      throw ParameterError("lambda values must be sorted strictly descending");
    }
  }
  const auto& mp = solver.params();
  const GrammianDiag gramm =
      grammian_diag(solver.basis(), mp.eta, mp.T, setup.c_diag, opt.n_quad);
  const auto psi = std::make_shared<const ShapedWeights>(
      solver.basis(), mp.eta, mp.T, mp.K, setup.c_diag);
  dynamics::SolverOptions sopt = opt.solver;
  sopt.init = dynamics::PicardInit::forward;

  SweepReport rep;
  for (double lam : lambdas) {
    ControlSetup s = setup;
    s.lambda = lam;
    SweepRow row;
    row.lambda = lam;
    if (!opt.stochastic) {
      const auto r = simulate_controlled(solver, s, gramm, psi, z0, nullptr, sopt);
      row.mean = std::pow(r.error_norm, opt.error_power);
      row.max_picard = r.picard_iterations;
    } else {
      const auto vals = stochastic::mc_collect_vec(
          [&](std::uint64_t i, double* out) {
            try {
              const auto w = stochastic::sample_wiener(solver.grid(), noise, opt.seed, i);
              const auto r = simulate_controlled(solver, s, gramm, psi, z0, &w, sopt);
              out[0] = std::pow(r.error_norm, opt.error_power);
              out[1] = r.picard_iterations;
            } catch (const NumericalError& e) {
              throw NumericalError("sample " + std::to_string(i) + ": " + e.what());
            }
          },
          opt.n_samples, 2, opt.workers);
      std::vector<double> err(opt.n_samples);
      for (std::size_t i = 0; i < opt.n_samples; ++i) {
        err[i] = vals[2 * i];
        row.max_picard = std::max(row.max_picard, static_cast<int>(vals[2 * i + 1]));
      }
      const auto est = stochastic::summarize(err);
      row.mean = est.mean;
      row.stderr_ = est.stderr_;
    }
    rep.rows.push_back(row);
  }
  rep.non_increasing = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const auto& a = rep.rows[i - 1];
    const auto& b = rep.rows[i];
    const double tol = 3.0 * std::hypot(a.stderr_, b.stderr_);
    if (b.mean > a.mean + tol) rep.non_increasing = false;
  }
  bool positive = rep.rows.size() >= 2;
  for (const auto& r : rep.rows) positive = positive && r.mean > 0.0;
  if (positive) {
    double mx = 0, my = 0;
    const double n = static_cast<double>(rep.rows.size());
    for (const auto& r : rep.rows) {
      mx += std::log(r.lambda);
      my += std::log(r.mean);
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (const auto& r : rep.rows) {
      sxx += (std::log(r.lambda) - mx) * (std::log(r.lambda) - mx);
      sxy += (std::log(r.lambda) - mx) * (std::log(r.mean) - my);
    }
    rep.slope = sxy / sxx;
    rep.slope_defined = true;
  }
  return rep;
}

}  // namespace tfsns::control
