#include <doctest.h>

#include <cmath>
#include <memory>

#include "tfsns/control.hpp"
#include "tfsns/errors.hpp"
#include "tfsns/specfun.hpp"

using namespace tfsns;
using namespace tfsns::control;
using dynamics::MildSolver;
using dynamics::ModelParams;
using dynamics::NonlinearityKind;
using spectral::build_basis;

namespace {

ModelParams params(double eta, int N, int K, double T) {
  ModelParams mp;
  mp.eta = eta;
  mp.alpha = 2.0 * eta;
  mp.beta = 0.0;
  mp.p = 4.0;
  mp.N = N;
  mp.K = K;
  mp.T = T;
  return mp;
}

MildSolver make_solver(const ModelParams& mp, NonlinearityKind kind,
                       double R = 2.0, double sigma = 0.0) {
  dynamics::NonlinearitySpec nl;
  nl.kind = kind;
  nl.R = R;
  dynamics::NoiseCoeffSpec h;
  h.sigma = Eigen::VectorXd::Constant(mp.N, sigma);
  return MildSolver(build_basis(mp.basis, mp.N, mp.nu, mp.alpha), mp, nl, h);
}

ControlSetup setup_for(int N, double lambda) {
  ControlSetup s;
  s.c_diag = Eigen::VectorXd::Ones(N);
  s.lambda = lambda;
  s.target_mean = Eigen::VectorXd::Zero(N);
  for (int m = 0; m < N; ++m) s.target_mean[m] = 0.3 / (m + 1);
  return s;
}

}  // namespace

TEST_CASE("grammian") {
  const auto basis = build_basis(spectral::BasisKind::dirichlet_sine_1d, 4, 1.0, 2.0);
  const Eigen::VectorXd c = Eigen::VectorXd::Ones(4);

  SUBCASE("classical limit") {
    const auto g = grammian_diag(basis, 1.0, 0.7, c, 64);
    for (int m = 0; m < 4; ++m) {
      const double mu = basis.frac_eigenvalues[m];
      CHECK(g.gamma[m] == doctest::Approx((1 - std::exp(-2 * mu * 0.7)) / (2 * mu)).epsilon(1e-12));
    }
  }
  SUBCASE("node doubling") {
    const auto a = grammian_diag(basis, 0.7, 1.0, c, 64);
    const auto b = grammian_diag(basis, 0.7, 1.0, c, 128);
    for (int m = 0; m < 4; ++m) CHECK(std::abs(a.gamma[m] - b.gamma[m]) <= 1e-8 * b.gamma[m]);
    CHECK(b.quadrature_nodes == 128);
  }
  SUBCASE("zero gains") {
    Eigen::VectorXd cz = c;
    cz[1] = 0.0;
    cz[3] = 0.0;
    const auto g = grammian_diag(basis, 0.6, 1.0, cz, 32);
    for (int m = 0; m < 4; ++m) CHECK((g.gamma[m] > 0.0) == (cz[m] != 0.0));
    ControlSetup s;
    s.c_diag = cz;
    const auto idx = uncontrollable_modes(s);
    REQUIRE(idx.size() == 2);
    CHECK(idx[0] == 1);
    CHECK(idx[1] == 3);
  }
  SUBCASE("quadratic in gain") {
    const auto g1 = grammian_diag(basis, 0.8, 1.0, c, 64);
    const auto g3 = grammian_diag(basis, 0.8, 1.0, 3.0 * c, 64);
    for (int m = 0; m < 4; ++m) CHECK(g3.gamma[m] == doctest::Approx(9 * g1.gamma[m]).epsilon(1e-13));
  }
}

TEST_CASE("resolvent") {
  GrammianDiag g;
  g.gamma = Eigen::Vector3d(0.0, 1.0, 3.0);
  const Eigen::VectorXd f = Eigen::Vector3d(2.0, 2.0, 2.0);
  const auto r = resolvent_apply(g, 0.5, f);
  CHECK(r[0] == doctest::Approx(4.0));
  CHECK(r[1] == doctest::Approx(2.0 / 1.5));
  CHECK(r[2] == doctest::Approx(2.0 / 3.5));
  for (int m = 0; m < 3; ++m) {
    const double factor = 0.5 * r[m] / f[m];
    CHECK(factor > 0.0);
    CHECK(factor <= 1.0);
  }
  CHECK_THROWS_AS(resolvent_apply(g, 0.0, f), ParameterError);
}

TEST_CASE("controllability operator") {
  const auto mp = params(1.0, 3, 64, 1.0);
  const auto solver = make_solver(mp, NonlinearityKind::zero);
  const Eigen::VectorXd c = Eigen::Vector3d(1.0, 0.5, 2.0);
  const auto kt = *solver.tables();

  CHECK(apply_LT(kt, c, Eigen::MatrixXd::Zero(64, 3)).norm() == 0.0);

  // Constant v: L_T v = c (1 - e^{-mu T}) / mu v in the classical limit.
  const Eigen::MatrixXd v = Eigen::MatrixXd::Constant(64, 3, 0.7);
  const auto out = apply_LT(kt, c, v);
  for (int m = 0; m < 3; ++m) {
    const double mu = solver.basis().frac_eigenvalues[m];
    CHECK(out[m] == doctest::Approx(c[m] * (1 - std::exp(-mu)) / mu * 0.7).epsilon(1e-10));
  }
  CHECK_THROWS_AS(apply_LT(kt, c, Eigen::MatrixXd::Zero(10, 3)), ParameterError);
}

TEST_CASE("shaped weights") {
  for (double eta : {0.6, 0.8, 1.0}) {
    const auto basis = build_basis(spectral::BasisKind::dirichlet_sine_1d, 3, 1.0, 2.0 * eta);
    const Eigen::VectorXd c = Eigen::Vector3d(1.0, 0.0, 1.5);
    const ShapedWeights psi(basis, eta, 1.0, 128, c);
    const auto g = grammian_diag(basis, eta, 1.0, c, 128);
    const auto s = psi.terminal_sum();
    CHECK(s[1] == 0.0);
    for (int m : {0, 2}) CHECK(s[m] == doctest::Approx(g.gamma[m]).epsilon(1e-9));
    for (int k = 0; k < 128; ++k) CHECK(psi(0, 128, k) > 0.0);

    // Shaped L_T of a constant bracket is the bracket times the terminal sum.
    const Eigen::MatrixXd xi = Eigen::MatrixXd::Constant(128, 3, 2.0);
    const auto lt = apply_LT_shaped(psi, xi);
    for (int m = 0; m < 3; ++m) CHECK(lt[m] == doctest::Approx(2.0 * s[m]));
  }
}

TEST_CASE("closed loop on the linear model") {
  const int N = 3;
  auto mp = params(0.8, N, 256, 1.0);
  const auto solver = make_solver(mp, NonlinearityKind::zero);
  const Eigen::VectorXd z0 = Eigen::Vector3d(0.2, -0.1, 0.05);
  auto s = setup_for(N, 0.1);
  s.c_diag[1] = 0.0;
  const auto gramm = grammian_diag(solver.basis(), mp.eta, mp.T, s.c_diag, 128);
  const auto psi = std::make_shared<const ShapedWeights>(solver.basis(), mp.eta, mp.T, mp.K, s.c_diag);

  dynamics::SolverOptions opt;
  opt.init = dynamics::PicardInit::forward;
  for (double lambda : {1.0, 0.1, 0.01}) {
    s.lambda = lambda;
    const auto r = simulate_controlled(solver, s, gramm, psi, z0, nullptr, opt);
    const FeedbackControl law(solver, s, gramm, psi, z0);
    const auto& d = law.discrepancy();
    const Eigen::VectorXd err = r.terminal - r.target;
    for (int m : {0, 2}) {
      CHECK(std::abs(err[m]) ==
            doctest::Approx(lambda / (lambda + gramm.gamma[m]) * std::abs(d[m])).epsilon(1e-8));
    }
    // The uncontrolled mode keeps its full discrepancy.
    CHECK(std::abs(err[1]) == doctest::Approx(std::abs(d[1])).epsilon(1e-12));
  }
}

TEST_CASE("feedback is adapted") {
  const int N = 4;
  const int K = 32;
  auto mp = params(0.8, N, K, 1.0);
  const auto solver = make_solver(mp, NonlinearityKind::burgers_1d, 2.0, 0.3);
  const auto noise = stochastic::power_law_noise(N, 2.0, 1.0);
  const auto path = stochastic::sample_wiener(solver.grid(), noise, 5, 0);
  const Eigen::VectorXd z0 = Eigen::Vector4d(0.3, 0.1, 0.0, -0.05);

  auto s = setup_for(N, 0.1);
  s.phi = Eigen::MatrixXd::Constant(K, N, 0.2);
  const auto gramm = grammian_diag(solver.basis(), mp.eta, mp.T, s.c_diag, 64);
  const auto psi = std::make_shared<const ShapedWeights>(solver.basis(), mp.eta, mp.T, K, s.c_diag);
  const FeedbackControl law(solver, s, gramm, psi, z0);

  const Eigen::MatrixXd z = solver.forward(z0, &path, &law);
  Eigen::MatrixXd G(K, N), nt(K, N);
  for (int j = 0; j < K; ++j) {
    const Eigen::VectorXd zj = z.row(j).transpose();
    G.row(j) = solver.nonlinearity()(zj).transpose();
    const Eigen::VectorXd hb = dynamics::noise_coeff(solver.noise_coeff_spec(), solver.grid()[j], zj);
    nt.row(j) = hb.cwiseProduct(path.increments.row(j).transpose()).transpose();
  }

  for (int k : {0, 1, 7, 20, K - 1}) {
    const dynamics::History h{z, G, nt, &path};
    const Eigen::VectorXd v = law.control_value(k, h);

    Eigen::MatrixXd z2 = z, G2 = G, nt2 = nt;
    auto path2 = path;
    for (int j = k + 1; j <= K; ++j) z2.row(j).setConstant(9.0);
    for (int j = k; j < K; ++j) {
      G2.row(j).setConstant(-7.0);
      nt2.row(j).setConstant(5.0);
      path2.increments.row(j).setConstant(3.0);
    }
    const dynamics::History h2{z2, G2, nt2, &path2};
    const Eigen::VectorXd v2 = law.control_value(k, h2);
    for (int m = 0; m < N; ++m) CHECK(v2[m] == v[m]);
  }

  // Changing the past does move the control.
  Eigen::MatrixXd G3 = G;
  G3.row(0).array() += 1.0;
  const dynamics::History h3{z, G3, nt, &path};
  const dynamics::History h1{z, G, nt, &path};
  CHECK((law.control_value(5, h3) - law.control_value(5, h1)).norm() > 0.0);
}

TEST_CASE("controllability sweep") {
  auto mp = params(0.8, 1, 2048, 1.0);
  mp.alpha = 1.6;
  const auto solver = make_solver(mp, NonlinearityKind::zero);
  ControlSetup s;
  s.target_mean = Eigen::VectorXd::Ones(1);
  const auto g = grammian_diag(solver.basis(), mp.eta, mp.T, Eigen::VectorXd::Ones(1), 128);
  s.c_diag = Eigen::VectorXd::Constant(1, 1.0 / std::sqrt(g.gamma[0]));

  SweepOptions opt;
  opt.stochastic = false;
  const auto noise = stochastic::power_law_noise(1, 2.0, 0.0);
  const auto rep = controllability_sweep({1.0, 0.1, 0.01}, solver, s, noise,
                                         Eigen::VectorXd::Zero(1), opt);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].mean == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(rep.rows[1].mean == doctest::Approx(1.0 / 121.0).epsilon(1e-6));
  CHECK(rep.rows[2].mean == doctest::Approx(1e-4 / (1.01 * 1.01)).epsilon(1e-6));
  CHECK(rep.non_increasing);
  REQUIRE(rep.slope_defined);
  CHECK(rep.slope > 0.0);

  CHECK_THROWS_AS(controllability_sweep({0.1, 1.0}, solver, s, noise, Eigen::VectorXd::Zero(1), opt),
                  ParameterError);
  CHECK_THROWS_AS(controllability_sweep({1.0, -0.1}, solver, s, noise, Eigen::VectorXd::Zero(1), opt),
                  ParameterError);
}

TEST_CASE("controlled runs need a saturated nonlinearity") {
  const auto mp = params(0.8, 2, 16, 1.0);
  const auto solver = make_solver(mp, NonlinearityKind::burgers_1d, INFINITY);
  const auto s = setup_for(2, 0.1);
  const auto gramm = grammian_diag(solver.basis(), mp.eta, mp.T, s.c_diag, 32);
  const auto psi = std::make_shared<const ShapedWeights>(solver.basis(), mp.eta, mp.T, mp.K, s.c_diag);
  CHECK_THROWS_AS(simulate_controlled(solver, s, gramm, psi, Eigen::VectorXd::Zero(2), nullptr),
                  ParameterError);

  auto bad = s;
  bad.lambda = 0.0;
  const auto ok = make_solver(mp, NonlinearityKind::zero);
  CHECK_THROWS_AS(FeedbackControl(ok, bad, gramm, psi, Eigen::VectorXd::Zero(2)), ParameterError);
}
