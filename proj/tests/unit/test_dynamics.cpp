#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "tfsns/dynamics.hpp"
#include "tfsns/errors.hpp"
#include "tfsns/specfun.hpp"

using namespace tfsns;
using namespace tfsns::dynamics;
using spectral::BasisKind;
using spectral::build_basis;

namespace {

constexpr double kPi = std::numbers::pi;

ModelParams params(double eta, int N, int K, double T) {
  ModelParams mp;
  mp.eta = eta;
  mp.alpha = 2.0;
  mp.beta = 0.0;
  mp.p = 4.0;
  mp.N = N;
  mp.K = K;
  mp.T = T;
  return mp;
}

MildSolver make_solver(const ModelParams& mp, NonlinearityKind kind,
                       Eigen::VectorXd sigma = {}) {
  NonlinearitySpec nl;
  nl.kind = kind;
  NoiseCoeffSpec h;
  h.sigma = sigma.size() ? sigma : Eigen::VectorXd::Zero(mp.N);
  return MildSolver(build_basis(mp.basis, mp.N, mp.nu, mp.alpha), mp, nl, h);
}

// -(u u_x) on the sine basis by sin/cos product rules.
Eigen::VectorXd burgers_triads(const Eigen::VectorXd& a) {
  const int N = static_cast<int>(a.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
  for (int j = 1; j <= N; ++j) {
    for (int k = 1; k <= N; ++k) {
      const double c = -kPi / std::sqrt(2.0) * a[j - 1] * a[k - 1] * k;
      if (j + k <= N) out[j + k - 1] += c;
      if (j - k >= 1) out[j - k - 1] += c;
      if (k - j >= 1) out[k - j - 1] -= c;
    }
  }
  return out;
}

Eigen::VectorXd random_field(int N, int seed) {
  Eigen::VectorXd z(N);
  for (int m = 0; m < N; ++m) z[m] = std::sin(1.7 * seed + 2.3 * m) / (m + 1);
  return z;
}

}  // namespace

TEST_CASE("exponent conditions") {
  ModelParams mp;
  mp.eta = 0.9;
  mp.alpha = 1.8;
  mp.beta = 0.2;
  mp.p = 4;
  const auto r = validate_params(mp);
  REQUIRE(r.conditions.size() == 5);
  CHECK(r.all_pass());
  CHECK(r.conditions[0].value == doctest::Approx(3.6));
  CHECK(r.conditions[1].value == doctest::Approx(1.0));
  CHECK(r.conditions[2].value == doctest::Approx(0.2));
  CHECK(r.conditions[3].value == doctest::Approx(1.2));
  CHECK(r.conditions[4].value == doctest::Approx(0.72));

  mp.eta = 0.5;
  mp.p = 2;
  CHECK(validate_params(mp).first_violation() == "c1");
  CHECK_THROWS_WITH_AS(require_valid(mp, false), doctest::Contains("c1"), ParameterError);
  CHECK_NOTHROW(require_valid(mp, true));

  mp.eta = 0.3;
  mp.alpha = 1.2;
  mp.beta = 0.5;
  const auto c4 = validate_params(mp);
  CHECK_FALSE(c4.conditions[3].pass);
  CHECK(c4.conditions[3].value == doctest::Approx(-2.8));
}

TEST_CASE("parameter ranges") {
  auto mp = params(0.5, 4, 8, 1.0);
  CHECK_NOTHROW(check_ranges(mp));
  mp.eta = 1.5;
  CHECK_THROWS_WITH_AS(check_ranges(mp), doctest::Contains("eta"), ParameterError);
  mp = params(0.5, 4, 8, 1.0);
  mp.alpha = 1.0;
  CHECK_THROWS_AS(check_ranges(mp), ParameterError);
  mp = params(0.5, 4, 8, 1.0);
  mp.beta = 2.0;
  CHECK_THROWS_AS(check_ranges(mp), ParameterError);
  mp = params(0.5, 4, 8, 1.0);
  mp.K = 0;
  CHECK_THROWS_AS(check_ranges(mp), ParameterError);
  CHECK_NOTHROW(check_ranges(params(1.0, 4, 8, 1.0)));
}

TEST_CASE("Burgers nonlinearity") {
  const auto b = build_basis(BasisKind::dirichlet_sine_1d, 8, 1.0, 2.0);
  Nonlinearity G(b, {NonlinearityKind::burgers_1d});
  CHECK(G(Eigen::VectorXd::Zero(8)).norm() == 0.0);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(8);
  e1[0] = 1;
  Eigen::VectorXd g = G(e1);
  CHECK(g[1] == doctest::Approx(-kPi / std::sqrt(2.0)).epsilon(1e-13));
  CHECK(g[1] == doctest::Approx(-2.2214).epsilon(1e-4));
  g[1] = 0;
  CHECK(g.norm() < 1e-13);
  for (int s = 0; s < 5; ++s) {
    const auto z = random_field(8, s);
    CHECK((G(z) - burgers_triads(z)).norm() < 1e-12 * (1 + z.squaredNorm()));
    CHECK((G(2 * z) - 4 * G(z)).norm() < 1e-12 * G(z).norm());
    // <B(z, z), z> = 0 with Dirichlet conditions
    CHECK(std::abs(G(z).dot(z)) < 1e-12 * z.squaredNorm());
  }
  CHECK(G.collocation_points() == 16);
}

TEST_CASE("saturated nonlinearity is bounded") {
  const auto b = build_basis(BasisKind::dirichlet_sine_1d, 8, 1.0, 2.0);
  const double R = 0.5;
  Nonlinearity G(b, {NonlinearityKind::burgers_1d, R});
  Nonlinearity F(b, {NonlinearityKind::burgers_1d});
  const auto z = random_field(8, 3);
  const auto small = z * (0.9 * R / z.norm());
  CHECK((G(small) - F(small)).norm() == 0.0);
  double c1 = 0;
  for (double scale : {1.0, 10.0, 1e3}) {
    const auto big = z * scale;
    const double neg = spectral::sobolev_norm(b, G(big), -1.0);
    c1 = std::max(c1, neg / (R * R));
  }
  // the H^{-1} norm of G_R stays below a fixed multiple of R^2
  const auto unit = z / z.norm();
  CHECK(c1 <= spectral::sobolev_norm(b, F(unit), -1.0) * (1 + 1e-12));
}

TEST_CASE("Navier-Stokes nonlinearity on the torus") {
  const auto b = build_basis(BasisKind::divfree_torus_2d, 12, 1.0, 2.0);
  Nonlinearity G(b, {NonlinearityKind::navier_stokes_2d});
  CHECK(G(Eigen::VectorXd::Zero(12)).norm() == 0.0);
  for (int s = 0; s < 4; ++s) {
    const auto z = random_field(12, s);
    const auto w = random_field(12, s + 10);
    CHECK((G(3 * z) - 9 * G(z)).norm() < 1e-12 * G(z).norm() * 9);
    // skew symmetry <B(z, w), w> = 0 for divergence-free z
    CHECK(std::abs(G.bilinear(z, w).dot(w)) < 1e-12 * (1 + w.squaredNorm() * z.norm()));
  }
  // a single Fourier mode is a steady Euler flow
  Eigen::VectorXd e = Eigen::VectorXd::Zero(12);
  e[0] = 1.0;
  CHECK(G(e).norm() < 1e-12);
  CHECK_THROWS_AS(Nonlinearity(b, {NonlinearityKind::burgers_1d}), ParameterError);
}

TEST_CASE("noise coefficients") {
  NoiseCoeffSpec add{NoiseCoeffKind::additive, Eigen::VectorXd::Constant(3, 0.4)};
  const auto z = random_field(3, 1);
  CHECK(noise_coeff(add, 0.3, z) == add.sigma);
  CHECK(noise_coeff(add, 0.3, 100 * z) == add.sigma);

  NoiseCoeffSpec sat{NoiseCoeffKind::saturating_diagonal, Eigen::Vector3d(0.5, 0.2, 0.1)};
  const auto big = noise_coeff(sat, 0.0, Eigen::Vector3d(1e3, -1e3, 1e3));
  CHECK(big[0] == doctest::Approx(0.5));
  CHECK(big[1] == doctest::Approx(-0.2));
  const auto q = stochastic::power_law_noise(3);
  const auto c = noise_coeff_constants(sat, q);
  CHECK(noise_coeff_constants(add, q).L2 == 0.0);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd a = random_field(3, i) * 3;
    const Eigen::VectorXd w = random_field(3, i + 5000) * 3;
    const Eigen::VectorXd d = noise_coeff(sat, 0, a) - noise_coeff(sat, 0, w);
    worst = std::max(worst, std::sqrt(stochastic::hs_norm_sq(d, q)) / (a - w).norm());
    CHECK(std::sqrt(stochastic::hs_norm_sq(noise_coeff(sat, 0, a), q)) <= c.L1 * (1 + a.norm()));
  }
  CHECK(worst <= c.L2);
}

TEST_CASE("convolution weights") {
  const auto grid = stochastic::uniform_grid(2.0, 50);
  for (int i : {1, 7, 50}) {
    const auto w = singular_weights(grid, i, 0.6);
    double s = 0;
    for (double x : w) s += x;
    CHECK(s == doctest::Approx(std::pow(grid[i], 0.6) / 0.6).epsilon(1e-13));
  }
  const auto b = build_basis(BasisKind::dirichlet_sine_1d, 3, 1.0, 1.6);
  const auto kt = build_kernel_tables(b, 0.7, 1.0, 40, ConvolutionRule::exact_kernel);
  for (int m = 0; m < 3; ++m) {
    const double mu = b.frac_eigenvalues[m];
    double s = 0;
    for (int j = 1; j <= 40; ++j) s += kt.drift(j, m);
    CHECK(s == doctest::Approx(specfun::mittag_leffler(0.7, 1.7, -mu)).epsilon(1e-12));
    CHECK(kt.noise(3, m) ==
          doctest::Approx(std::pow(3 * kt.h, -0.3) *
                          specfun::mittag_leffler(0.7, 0.7, -mu * std::pow(3 * kt.h, 0.7))));
  }
  const auto fr = build_kernel_tables(b, 0.7, 1.0, 40, ConvolutionRule::frozen_kernel);
  CHECK(fr.drift(5, 1) != kt.drift(5, 1));
  CHECK(fr.drift(5, 1) == doctest::Approx(kt.drift(5, 1)).epsilon(0.05));
}

TEST_CASE("homogeneous problem") {
  auto mp = params(0.6, 3, 64, 1.0);
  const auto s = make_solver(mp, NonlinearityKind::zero);
  const Eigen::Vector3d z0(1.0, -0.5, 0.25);
  const auto r = s.picard_solve(z0, nullptr, nullptr);
  for (int i = 0; i <= mp.K; i += 8) {
    for (int m = 0; m < 3; ++m) {
      const double mu = s.basis().frac_eigenvalues[m];
      CHECK(r.path(i, m) == doctest::Approx(z0[m] * specfun::mittag_leffler(
                                                        0.6, 1, -mu * std::pow(s.grid()[i], 0.6))));
    }
  }
  CHECK(r.picard_iterations == 1);
}

TEST_CASE("classical limit is exponential Euler") {
  auto mp = params(1.0, 2, 100, 1.0);
  const auto s = make_solver(mp, NonlinearityKind::zero);
  Eigen::MatrixXd v(mp.K, 2);
  for (int k = 0; k < mp.K; ++k) {
    v(k, 0) = std::cos(0.1 * k);
    v(k, 1) = 1.0 + 0.01 * k;
  }
  const Eigen::Vector2d c(1.0, 0.5);
  FixedControl ctl(v, c, s.tables());
  const Eigen::Vector2d z0(0.3, -0.2);
  const auto r = s.picard_solve(z0, nullptr, &ctl);
  const double h = mp.T / mp.K;
  for (int m = 0; m < 2; ++m) {
    const double mu = s.basis().frac_eigenvalues[m];
    const double decay = std::exp(-mu * h);
    double z = z0[m];
    for (int k = 0; k < mp.K; ++k) {
      z = decay * z + (1 - decay) / mu * c[m] * v(k, m);
      CHECK(r.path(k + 1, m) == doctest::Approx(z).epsilon(1e-10));
    }
  }
}

TEST_CASE("affine problems converge in two iterations and superpose") {
  auto mp = params(0.7, 4, 64, 1.0);
  const auto q = stochastic::power_law_noise(4);
  const auto s = make_solver(mp, NonlinearityKind::zero, Eigen::VectorXd::Constant(4, 0.3));
  const auto w1 = stochastic::sample_wiener(s.grid(), q, 1, 0);
  auto w2 = stochastic::sample_wiener(s.grid(), q, 1, 1);
  stochastic::WienerPath w12 = w1;
  w12.increments += w2.increments;
  stochastic::WienerPath w0 = w1;
  w0.increments.setZero();
  const auto za = random_field(4, 1), zb = random_field(4, 2);
  const auto r = s.picard_solve(za, &w1, nullptr);
  CHECK(r.picard_iterations <= 2);
  const auto both = s.picard_solve(za + zb, &w12, nullptr).path;
  const Eigen::MatrixXd sep = s.picard_solve(za, &w1, nullptr).path + s.picard_solve(zb, &w2, nullptr).path -
                   s.picard_solve(Eigen::VectorXd::Zero(4), &w0, nullptr).path;
  CHECK((both - sep).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Picard contraction on small Burgers data") {
  auto mp = params(0.8, 16, 256, 0.5);
  mp.alpha = 1.6;
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(16);
  z0[0] = 0.1;
  SolverOptions opt;
  opt.tol = 1e-14;
  const auto r = make_solver(mp, NonlinearityKind::burgers_1d).picard_solve(z0, nullptr, nullptr, opt);
  double worst = 0;
  for (std::size_t i = 1; i < r.residuals.size(); ++i) {
    CHECK(r.residuals[i] < 0.5 * r.residuals[i - 1]);
    worst = std::max(worst, r.residuals[i] / r.residuals[i - 1]);
  }
  CHECK(worst < 0.5);
  // With weak dissipation the factor is set by T rather than by the decay
  // of the kernel, and halving T lowers it.
  auto factor = [&](double T) {
    auto m = mp;
    m.nu = 0.01;
    m.T = T;
    const auto r = make_solver(m, NonlinearityKind::burgers_1d).picard_solve(z0, nullptr, nullptr, opt);
    double f = 0;
    for (std::size_t i = 1; i < r.residuals.size(); ++i) {
      f = std::max(f, r.residuals[i] / r.residuals[i - 1]);
    }
    return f;
  };
  CHECK(factor(0.25) < factor(0.5));
}

TEST_CASE("forward substitution is the discrete fixed point") {
  auto mp = params(0.75, 8, 128, 1.0);
  const auto q = stochastic::power_law_noise(8);
  NonlinearitySpec nl{NonlinearityKind::burgers_1d};
  NoiseCoeffSpec h{NoiseCoeffKind::saturating_diagonal, Eigen::VectorXd::Constant(8, 0.2)};
  MildSolver s(build_basis(mp.basis, 8, 1.0, 2.0), mp, nl, h);
  const auto w = stochastic::sample_wiener(s.grid(), q, 4, 2);
  const auto z0 = random_field(8, 4);
  const auto f = s.forward(z0, &w, nullptr);
  CHECK(sup_distance(s.evaluate(f, z0, &w, nullptr), f) < 1e-13);
  SolverOptions opt;
  opt.tol = 1e-13;
  const auto p = s.picard_solve(z0, &w, nullptr, opt);
  CHECK(sup_distance(p.path, f) < 1e-12);
  opt.init = PicardInit::forward;
  CHECK(s.picard_solve(z0, &w, nullptr, opt).picard_iterations == 1);
}

TEST_CASE("the discrete map is causal") {
  auto mp = params(0.75, 4, 32, 1.0);
  const auto q = stochastic::power_law_noise(4);
  NoiseCoeffSpec h{NoiseCoeffKind::additive, Eigen::VectorXd::Constant(4, 0.5)};
  MildSolver s(build_basis(mp.basis, 4, 1.0, 2.0), mp, {NonlinearityKind::burgers_1d}, h);
  const auto w = stochastic::sample_wiener(s.grid(), q, 4, 2);
  auto w2 = w;
  const int k = 20;
  w2.increments.bottomRows(mp.K - k).array() += 1.0;
  const auto z0 = random_field(4, 1);
  const auto a = s.forward(z0, &w, nullptr);
  const auto b = s.forward(z0, &w2, nullptr);
  CHECK(a.topRows(k + 1) == b.topRows(k + 1));
  CHECK(a.row(k + 1) != b.row(k + 1));
}

TEST_CASE("solver failures") {
  auto mp = params(0.9, 4, 64, 1.0);
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(4);
  z0[0] = 1e3;
  auto s = make_solver(mp, NonlinearityKind::burgers_1d);
  CHECK_THROWS_AS(s.picard_solve(z0, nullptr, nullptr), NumericalError);
  z0[0] = 1.0;
  SolverOptions opt;
  opt.max_iter = 2;
  opt.tol = 1e-15;
  try {
    s.picard_solve(z0, nullptr, nullptr, opt);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.residuals().size() == 2);
  }
  CHECK_THROWS_AS(s.picard_solve(Eigen::VectorXd::Zero(3), nullptr, nullptr), ParameterError);
}
