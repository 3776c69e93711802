#include "tfsns/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <system_error>

#include "tfsns/control.hpp"
#include "tfsns/dynamics.hpp"
#include "tfsns/specfun.hpp"
#include "tfsns/spectral.hpp"
#include "tfsns/stochastic.hpp"

#ifndef TFSNS_VERSION
#define TFSNS_VERSION "dev"
#endif

namespace tfsns::cli {

namespace {

Eigen::VectorXd pad(const std::vector<double>& v, int N) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
  for (std::size_t i = 0; i < v.size() && static_cast<int>(i) < N; ++i) out[i] = v[i];
  return out;
}

Eigen::VectorXd broadcast(const std::vector<double>& v, int N) {
  if (v.size() == 1) return Eigen::VectorXd::Constant(N, v[0]);
  return pad(v, N);
}

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < n; ++i) out[i] = std::pow(10.0, a + (b - a) * i / (n - 1));
  return out;
}

spectral::BasisSpec make_basis(const ExperimentConfig& c) {
  return spectral::build_basis(c.model.basis, c.model.N, c.model.nu, c.model.alpha);
}

dynamics::NoiseCoeffSpec make_hbar(const ExperimentConfig& c) {
  return {c.noise_coeff, broadcast(c.sigma, c.model.N)};
}

dynamics::SolverOptions make_solver_options(const ExperimentConfig& c) {
  dynamics::SolverOptions o;
  o.tol = c.tol;
  o.max_iter = c.max_iter;
  o.init = c.init;
  return o;
}

bool has_noise(const ExperimentConfig& c) {
  if (c.deterministic || c.noise_trace == 0.0) return false;
  for (double s : c.sigma) {
    if (s != 0.0) return true;
  }
  return false;
}

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------------------

RunOutput run_validate(const ExperimentConfig& c) {
  RunOutput out;
  const auto rep = dynamics::validate_params(c.model);
  ResultTable t{"validate", {"condition", "value", "pass"}, {}};
  int i = 1;
  for (const auto& cond : rep.conditions) {
    t.rows.push_back({static_cast<double>(i++), cond.value, cond.pass ? 1.0 : 0.0});
    out.report.push_back(cond.name + "  " + cond.formula + "  value=" +
                         fmt(cond.value) + "  " + (cond.pass ? "pass" : "FAIL"));
  }
  out.tables.push_back(std::move(t));
  out.pass = rep.all_pass();
  return out;
}

RunOutput run_mlfun(const ExperimentConfig& c) {
  using specfun::MainardiMoment;
  RunOutput out;
  ResultTable t{"mlfun", {"a", "b", "x", "value", "oracle", "abs_diff"}, {}};
  double worst = 0.0;
  auto add = [&](double a, double b, double x, double oracle) {
    const double v = specfun::mittag_leffler(a, b, x);
    const double d = std::abs(v - oracle);
    worst = std::max(worst, d);
    t.rows.push_back({a, b, x, v, oracle, d});
  };
  if (c.ml_anchors) {
    add(1.0, 1.0, 1.0, std::exp(1.0));
    const double e_erfc = std::exp(1.0) * std::erfc(1.0);
    add(0.5, 1.0, -1.0, e_erfc);
    add(0.5, 0.5, -1.0, 1.0 / std::sqrt(std::numbers::pi) - e_erfc);
  }
  const auto xs = logspace(c.ml_x_min, c.ml_x_max, c.ml_n_x);
  for (double a : c.ml_a) {
    std::vector<double> bs = c.ml_b;
    if (c.ml_b_equals_a && a != 1.0) bs.push_back(a);
    for (double b : bs) {
      const bool exp_case = a == 1.0 && b == 1.0;
      if (!exp_case && a == 1.0) {
        throw ConfigError("mlfun.b", 0, "a = 1 has an oracle only for b = 1");
      }
      if (!exp_case && b != 1.0 && b != a) {
        throw ConfigError("mlfun.b", 0,
                          "the Mainardi oracle covers b = 1 and b = a only, got b=" + fmt(b));
      }
      for (double x : xs) {
        double oracle;
        if (exp_case) {
          oracle = std::exp(-x);
        } else {
          oracle = specfun::ml_via_mainardi_quadrature(
              a, x, b == 1.0 ? MainardiMoment::first : MainardiMoment::second);
        }
        add(a, b, -x, oracle);
      }
    }
  }
  out.pass = worst <= c.ml_tol;
  out.report.push_back("rows=" + std::to_string(t.rows.size()) +
                       " max_abs_diff=" + fmt(worst) + " tol=" + fmt(c.ml_tol));
  out.tables.push_back(std::move(t));
  return out;
}

RunOutput run_bounds(const ExperimentConfig& c) {
  RunOutput out;
  const auto basis = make_basis(c);
  const auto ts = logspace(c.bounds_t_min, c.bounds_t_max, c.bounds_n_t);
  ResultTable t{"bounds", {"beta", "t", "R", "R_scaled", "increment_modulus"}, {}};
  ResultTable f{"bounds_fit", {"beta", "slope", "expected_slope", "max_constant", "pass"}, {}};
  out.pass = true;
  for (double beta : c.bounds_beta) {
    const auto rep = spectral::bound_probe(basis, c.model.eta, beta, ts);
    for (std::size_t i = 0; i < rep.t.size(); ++i) {
      const double inc = i < rep.increment_modulus.size() ? rep.increment_modulus[i] : 0.0;
      t.rows.push_back({beta, rep.t[i], rep.R[i],
                        rep.R[i] * std::pow(rep.t[i], -rep.expected_slope), inc});
    }
    const bool ok = std::abs(rep.slope - rep.expected_slope) <= c.bounds_slope_tol;
    out.pass = out.pass && ok;
    f.rows.push_back({beta, rep.slope, rep.expected_slope, rep.max_constant, ok ? 1.0 : 0.0});
    out.report.push_back("beta=" + fmt(beta) + " slope=" + fmt(rep.slope) +
                         " expected=" + fmt(rep.expected_slope) +
                         (ok ? " pass" : " FAIL"));
  }
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(f));
  return out;
}

RunOutput run_bdg(const ExperimentConfig& c) {
  using stochastic::WienerPath;
  RunOutput out;
  const auto basis = make_basis(c);
  const int N = c.model.N;
  const auto noise = stochastic::power_law_noise(N, c.noise_decay, c.noise_trace);
  const auto grid = stochastic::uniform_grid(c.model.T, c.bdg_K);
  const double T = c.model.T, eta = c.model.eta;
  // Integrand families: 0 constant, 1 ramp on the first mode,
  // 2 M_{eta,eta}-weighted kernel, 3 adapted tanh(W).
  std::vector<stochastic::AdaptedIntegrand> fam;
  fam.push_back([](int, const WienerPath&, Eigen::Ref<Eigen::VectorXd> o) { o.setOnes(); });
  fam.push_back([&](int k, const WienerPath& w, Eigen::Ref<Eigen::VectorXd> o) {
    o.setZero();
    o[0] = w.t[k];
  });
  Eigen::MatrixXd kernel(c.bdg_K, N);
  for (int k = 0; k < c.bdg_K; ++k) {
    const double s = T - grid[k];
    for (int m = 0; m < N; ++m) {
      kernel(k, m) = std::pow(s, eta - 1.0) *
                     specfun::mittag_leffler(eta, eta, -basis.frac_eigenvalues[m] * std::pow(s, eta));
    }
  }
  fam.push_back([&](int k, const WienerPath&, Eigen::Ref<Eigen::VectorXd> o) {
    o = kernel.row(k).transpose();
  });
  fam.push_back([&](int k, const WienerPath& w, Eigen::Ref<Eigen::VectorXd> o) {
    Eigen::VectorXd W = Eigen::VectorXd::Zero(N);
    for (int j = 0; j < k; ++j) W += w.increments.row(j).transpose();
    for (int m = 0; m < N; ++m) {
      const double s = std::sqrt(noise.q_eigenvalues[m]);
      o[m] = s > 0.0 ? std::tanh(W[m] / s) : 0.0;
    }
  });
  ResultTable t{"bdg",
                {"p", "family", "lhs", "lhs_stderr", "rhs", "rhs_stderr", "kappa",
                 "ratio", "ratio_stderr", "pass"},
                {}};
  out.pass = true;
  for (double p : c.bdg_p) {
    for (std::size_t f = 0; f < fam.size(); ++f) {
      const auto r = stochastic::bdg_check(p, fam[f], grid, noise, c.n_samples,
                                           c.seed, c.workers);
      bool ok = r.pass;
      // p = 2 is the Ito isometry: the ratio must also not fall below 1.
      if (p == 2.0) ok = ok && std::abs(r.ratio - 1.0) <= 3.0 * r.ratio_se;
      out.pass = out.pass && ok;
      t.rows.push_back({p, static_cast<double>(f), r.lhs.mean, r.lhs.stderr_,
                        r.rhs.mean, r.rhs.stderr_, r.kappa, r.ratio, r.ratio_se,
                        ok ? 1.0 : 0.0});
      out.report.push_back("p=" + fmt(p) + " family=" + std::to_string(f) +
                           " ratio=" + fmt(r.ratio) + " se=" + fmt(r.ratio_se) +
                           (ok ? " pass" : " FAIL"));
    }
  }
  out.tables.push_back(std::move(t));
  return out;
}

RunOutput run_solve(const ExperimentConfig& c, bool override_validation) {
  dynamics::require_valid(c.model, override_validation);
  RunOutput out;
  const auto basis = make_basis(c);
  const dynamics::MildSolver solver(basis, c.model, c.nonlinearity, make_hbar(c), c.rule);
  const auto z0 = pad(c.z0, c.model.N);
  const bool noisy = has_noise(c);
  const auto noise = stochastic::power_law_noise(c.model.N, c.noise_decay, c.noise_trace);
  const std::size_t n_paths = noisy ? c.n_samples : 1;
  ResultTable t{"solve", {"sample", "t", "norm_L2", "norm_Hbeta"}, {}};
  ResultTable d{"solve_picard", {"sample", "iteration", "residual"}, {}};
  int max_it = 0;
  for (std::size_t s = 0; s < n_paths; ++s) {
    dynamics::SolveResult res;
    if (noisy) {
      const auto w = stochastic::sample_wiener(solver.grid(), noise, c.seed, s);
      res = solver.picard_solve(z0, &w, nullptr, make_solver_options(c));
    } else {
      res = solver.picard_solve(z0, nullptr, nullptr, make_solver_options(c));
    }
    max_it = std::max(max_it, res.picard_iterations);
    for (int i = 0; i <= c.model.K; ++i) {
      const Eigen::VectorXd zi = res.path.row(i).transpose();
      t.rows.push_back({static_cast<double>(s), solver.grid()[i], zi.norm(),
                        spectral::sobolev_norm(basis, zi, c.model.beta)});
    }
    for (std::size_t it = 0; it < res.residuals.size(); ++it) {
      d.rows.push_back({static_cast<double>(s), static_cast<double>(it + 1), res.residuals[it]});
    }
  }
  out.pass = true;
  out.report.push_back("paths=" + std::to_string(n_paths) +
                       " max_picard_iterations=" + std::to_string(max_it));
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(d));
  return out;
}

RunOutput run_control_sweep(const ExperimentConfig& c, bool override_validation) {
  dynamics::require_valid(c.model, override_validation);
  RunOutput out;
  const auto basis = make_basis(c);
  const int N = c.model.N;
  const dynamics::MildSolver solver(basis, c.model, c.nonlinearity, make_hbar(c), c.rule);
  const auto z0 = pad(c.z0, N);
  control::ControlSetup setup;
  setup.c_diag = broadcast(c.control_c, N);
  setup.target_mean = pad(c.control_target, N);
  setup.kernel_weight = c.kernel_weight;
  if (c.normalize_gamma) {
    const auto g = control::grammian_diag(basis, c.model.eta, c.model.T, setup.c_diag, c.n_quad);
    for (int m = 0; m < N; ++m) {
      if (g.gamma[m] > 0.0) setup.c_diag[m] /= std::sqrt(g.gamma[m]);
    }
  }
  const auto gamma =
      control::grammian_diag(basis, c.model.eta, c.model.T, setup.c_diag, c.n_quad).gamma;
  const Eigen::VectorXd d =
      setup.target_mean - solver.tables()->homogeneous.row(c.model.K).transpose().cwiseProduct(z0);
  for (int m : control::uncontrollable_modes(setup)) {
    out.report.push_back("mode " + std::to_string(m) + " is uncontrollable (c_m = 0)");
  }
  control::SweepOptions opt;
  opt.n_samples = c.n_samples;
  opt.seed = c.seed;
  opt.error_power = c.error_power;
  opt.workers = c.workers;
  opt.n_quad = c.n_quad;
  opt.stochastic = has_noise(c);
  opt.solver = make_solver_options(c);
  if (opt.stochastic && opt.n_samples < 2) {
    throw ConfigError("run.n_samples", 0, "a stochastic sweep needs n_samples >= 2");
  }
  const auto noise = stochastic::power_law_noise(N, c.noise_decay, c.noise_trace);
  const auto rep = control::controllability_sweep(c.lambda_list, solver, setup, noise, z0, opt);
  ResultTable t{"control_sweep",
                {"lambda", "error", "stderr", "max_picard", "linear_prediction"},
                {}};
  for (const auto& r : rep.rows) {
    const double lin = std::pow(
        (r.lambda / (r.lambda + gamma.array()) * d.array()).matrix().norm(), c.error_power);
    t.rows.push_back({r.lambda, r.mean, r.stderr_, static_cast<double>(r.max_picard), lin});
    out.report.push_back("lambda=" + fmt(r.lambda) + " error=" + fmt(r.mean) +
                         " stderr=" + fmt(r.stderr_));
  }
  out.pass = rep.non_increasing && (!rep.slope_defined || rep.slope > 0.0);
  out.report.push_back(std::string("non_increasing=") + (rep.non_increasing ? "yes" : "no") +
                       (rep.slope_defined ? " slope=" + fmt(rep.slope) : " slope=undefined"));
  out.tables.push_back(std::move(t));
  return out;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s = {"validate", "mlfun", "bounds",
                                             "bdg", "solve", "control-sweep"};
  return s;
}

RunOutput run_subcommand(const std::string& sub, const ExperimentConfig& cfg,
                         bool override_validation) {
  if (sub == "validate") return run_validate(cfg);
  if (sub == "mlfun") return run_mlfun(cfg);
  if (sub == "bounds") return run_bounds(cfg);
  if (sub == "bdg") return run_bdg(cfg);
  if (sub == "solve") return run_solve(cfg, override_validation);
  if (sub == "control-sweep") return run_control_sweep(cfg, override_validation);
  throw ParameterError("unknown subcommand '" + sub + "'");
}

std::string render_table(const ResultTable& table, const std::string& sub,
                         const ExperimentConfig& cfg, bool pass) {
  std::ostringstream os;
  os << "# tfsns " << TFSNS_VERSION << "\n";
  os << "# subcommand: " << sub << "\n";
  os << "# table: " << table.name << "\n";
  os << "# seed: " << cfg.seed << "\n";
  os << "# config_hash: " << std::hex << std::setw(16) << std::setfill('0')
     << config_hash(cfg) << std::dec << "\n";
  os << "# checks: " << (pass ? "pass" : "fail") << "\n";
  for (const auto& l : cfg.canonical) os << "# config: " << l << "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    os << (i ? "," : "") << table.columns[i];
  }
  os << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (!std::isfinite(row[i])) {
        throw NumericalError("non-finite value in table " + table.name);
      }
      os << (i ? "," : "") << format_double(row[i]);
    }
    os << "\n";
  }
  return os.str();
}

ExperimentConfig config_from_header(const std::string& csv) {
  std::istringstream is(csv);
  std::string line, text;
  const std::string tag = "# config: ";
  while (std::getline(is, line)) {
    if (line.rfind(tag, 0) == 0) text += line.substr(tag.size()) + "\n";
  }
  return parse_config(text);
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("rename to " + path.string() + " failed: " + ec.message());
  }
}

std::vector<std::filesystem::path> write_outputs(const RunOutput& out,
                                                 const std::string& sub,
                                                 const ExperimentConfig& cfg,
                                                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  // Render everything first so a failure leaves no partial set behind.
  std::vector<std::pair<std::filesystem::path, std::string>> files;
  for (const auto& t : out.tables) {
    files.emplace_back(dir / (t.name + ".csv"), render_table(t, sub, cfg, out.pass));
  }
  std::vector<std::filesystem::path> paths;
  for (const auto& [p, text] : files) {
    write_atomic(p, text);
    paths.push_back(p);
  }
  return paths;
}

void set_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  for (auto& l : cfg.canonical) {
    if (l.rfind("run.seed = ", 0) == 0) l = "run.seed = " + std::to_string(seed);
  }
}

}  // namespace tfsns::cli
