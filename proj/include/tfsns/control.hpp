#pragma once

// Controllability operator, diagonal Grammian, resolvent feedback and the
// approximate-controllability sweep.
//
// The feedback on step [t_k, t_{k+1}) is v(r) = C* M*_{eta,eta}(T-r) xi_k with
// xi_k the resolvent bracket built from history up to t_k. Its effect on
// z(t_i) is sum_k Psi(i,k) xi_k, where Psi integrates the product of the two
// kernels exactly over each step.

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <vector>

#include "tfsns/dynamics.hpp"
#include "tfsns/stochastic.hpp"

namespace tfsns::control {

using spectral::BasisSpec;
using spectral::SpectralField;

struct ControlSetup {
  Eigen::VectorXd c_diag;       ///< gains of the diagonal control operator C
  double lambda = 1.0;          ///< regularization
  SpectralField target_mean;    ///< E z_T
  Eigen::MatrixXd phi;          ///< K x N deterministic integrand of the random target; empty = none
  /// Keep the (T-r)^{eta-1} factor inside the correction sums of v^lambda.
  bool kernel_weight = true;
};

/// Indices of modes with c_m = 0.
std::vector<int> uncontrollable_modes(const ControlSetup& setup);

struct GrammianDiag {
  Eigen::VectorXd gamma;
  int quadrature_nodes = 0;
};

/// gamma_m = c_m^2 int_0^T u^{eta-1} E_{eta,eta}(-mu_m u^eta)^2 du, computed
/// after the substitution w = u^eta with n_quad Gauss-Legendre nodes.
GrammianDiag grammian_diag(const BasisSpec& basis, double eta, double T,
                           const Eigen::VectorXd& c_diag, int n_quad);

/// u_m / (lambda + gamma_m).
SpectralField resolvent_apply(const GrammianDiag& g, double lambda,
                              const SpectralField& f);

/// L_T of a piecewise-constant control path (K x N), using the solver's
/// step weights.
SpectralField apply_LT(const dynamics::KernelTables& kt,
                       const Eigen::VectorXd& c_diag,
                       const Eigen::MatrixXd& v_path);

/// Step weights of the shaped feedback for every mode and pair k < i.
class ShapedWeights {
 public:
  ShapedWeights(const BasisSpec& basis, double eta, double T, int K,
                const Eigen::VectorXd& c_diag, int n_nodes = 12);

  int steps() const { return K_; }
  /// Psi_m(i, k), 0 <= k < i <= K.
  double operator()(int m, int i, int k) const {
    return psi_[static_cast<std::size_t>(m) * stride_ + offset(i) + k];
  }
  /// sum_k Psi(K, k): the discrete counterpart of gamma_m.
  Eigen::VectorXd terminal_sum() const;

 private:
  static std::size_t offset(int i) {
    return static_cast<std::size_t>(i) * (i - 1) / 2;
  }
  int K_ = 0;
  std::size_t stride_ = 0;
  std::vector<double> psi_;
};

/// L_T of the shaped control v(r) = C* M*(T-r) xi_k: sum_k Psi(K,k) xi_k.
SpectralField apply_LT_shaped(const ShapedWeights& psi,
                              const Eigen::MatrixXd& xi);

/// Resolvent feedback v^lambda as a control law for the mild solver.
class FeedbackControl : public dynamics::ControlLaw {
 public:
  FeedbackControl(const dynamics::MildSolver& solver, ControlSetup setup,
                  const GrammianDiag& gramm,
                  std::shared_ptr<const ShapedWeights> psi,
                  const SpectralField& z0);

  /// Bracket xi_k of the resolvent feedback.
  void coefficient(int k, const dynamics::History& h,
                   Eigen::Ref<Eigen::VectorXd> out) const override;
  void accumulate(int i, const Eigen::MatrixXd& xi,
                  Eigen::Ref<Eigen::VectorXd> out) const override;

  /// v^lambda(t_k) = C* M*_{eta,eta}(T - t_k) xi_k.
  Eigen::VectorXd control_value(int k, const dynamics::History& h) const;

  /// d = E z_T - M_eta(T) z0.
  const SpectralField& discrepancy() const { return d_; }

 private:
  ControlSetup setup_;
  std::shared_ptr<const dynamics::KernelTables> kt_;
  std::shared_ptr<const ShapedWeights> psi_;
  int K_ = 0;
  Eigen::VectorXd inv_;  ///< 1 / (lambda + gamma)
  SpectralField d_;
  Eigen::MatrixXd g_weight_;  ///< K x N, row j: weight of G(z_j)
  Eigen::MatrixXd n_weight_;  ///< K x N, row j: weight of hbar_j dW_j
};

struct ControlledSample {
  SpectralField terminal;
  SpectralField target;
  double error_norm = 0.0;
  int picard_iterations = 0;
};

/// Closed-loop solve for one sample. `path` may be null (deterministic).
ControlledSample simulate_controlled(const dynamics::MildSolver& solver,
                                    const ControlSetup& setup,
                                    const GrammianDiag& gramm,
                                    std::shared_ptr<const ShapedWeights> psi,
                                    const SpectralField& z0,
                                    const stochastic::WienerPath* path,
                                    const dynamics::SolverOptions& opt = {});

struct SweepRow {
  double lambda = 0.0;
  double mean = 0.0;    ///< estimate of E ||z_lambda(T) - z_T||^power
  double stderr_ = 0.0;
  int max_picard = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  bool non_increasing = false;  ///< within 3 combined standard errors
  double slope = 0.0;           ///< log-log slope of mean against lambda
  bool slope_defined = false;
};

struct SweepOptions {
  std::size_t n_samples = 1;
  std::uint64_t seed = 0;
  double error_power = 2.0;
  int workers = 1;
  int n_quad = 128;
  bool stochastic = true;  ///< false: single deterministic solve per lambda
  dynamics::SolverOptions solver;
};

SweepReport controllability_sweep(const std::vector<double>& lambdas,
                                  const dynamics::MildSolver& solver,
                                  const ControlSetup& setup,
                                  const stochastic::NoiseSpec& noise,
                                  const SpectralField& z0,
                                  const SweepOptions& opt);

}  // namespace tfsns::control
