#pragma once

// Mild-solution map on a uniform time grid and its Picard solver.
//
// At grid time t_i the map returns
//   M_eta(t_i) z0
//   + sum_{k<i} Omega(i-k) [G(z_k) + control]          (deterministic part)
//   + sum_{k<i} S(i-k) hbar(t_k, z_k) dW_k              (Ito part)
// where Omega integrates (t_i-r)^{eta-1} E_{eta,eta}(-mu (t_i-r)^eta) over one
// step and S is the left-point kernel value.

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "tfsns/spectral.hpp"
#include "tfsns/stochastic.hpp"

namespace tfsns::dynamics {

using spectral::BasisSpec;
using spectral::SpectralField;

struct ModelParams {
  double eta = 0.9;
  double alpha = 1.8;
  double beta = 0.2;
  double p = 4.0;
  double nu = 1.0;
  double T = 1.0;
  int N = 16;
  int K = 256;
  spectral::BasisKind basis = spectral::BasisKind::dirichlet_sine_1d;
};

/// Throws ParameterError naming the first field outside its range.
/// eta = 1 is admitted as the classical limit.
void check_ranges(const ModelParams& mp);

struct Condition {
  std::string name;     ///< c1 .. c5
  std::string formula;
  double value = 0.0;   ///< c1: eta*p; others: the exponent itself
  bool pass = false;
};

struct ValidityReport {
  std::vector<Condition> conditions;
  bool all_pass() const;
  /// Name of the first failing condition, empty if none.
  std::string first_violation() const;
};

ValidityReport validate_params(const ModelParams& mp);

/// Throws ParameterError naming the violated condition unless overridden.
void require_valid(const ModelParams& mp, bool override_validation);

// ---------------------------------------------------------------------------

enum class NonlinearityKind { zero, burgers_1d, navier_stokes_2d };

NonlinearityKind parse_nonlinearity_kind(const std::string& name);
std::string to_string(NonlinearityKind kind);

struct NonlinearitySpec {
  NonlinearityKind kind = NonlinearityKind::zero;
  double R = std::numeric_limits<double>::infinity();  ///< saturation radius
};

/// Galerkin projection of -(z.grad)z, evaluated on a collocation grid that
/// integrates every quadratic product exactly, scaled by min(1, R/||z||)^2.
class Nonlinearity {
 public:
  Nonlinearity(const BasisSpec& basis, NonlinearitySpec spec);

  SpectralField operator()(const SpectralField& z) const;
  /// Unsaturated bilinear form B(z, w) = -P (z.grad) w.
  SpectralField bilinear(const SpectralField& z, const SpectralField& w) const;

  const NonlinearitySpec& spec() const { return spec_; }
  int collocation_points() const { return points_; }

 private:
  NonlinearitySpec spec_;
  int N_ = 0;
  int points_ = 0;
  // Values and derivatives of every mode at every collocation point.
  Eigen::MatrixXd U_, V_, Ux_, Uy_, Vx_, Vy_;
  double weight_ = 0.0;
};

enum class NoiseCoeffKind { additive, saturating_diagonal };

NoiseCoeffKind parse_noise_coeff_kind(const std::string& name);
std::string to_string(NoiseCoeffKind kind);

struct NoiseCoeffSpec {
  NoiseCoeffKind kind = NoiseCoeffKind::additive;
  Eigen::VectorXd sigma;
};

/// Diagonal multiplier of hbar(t, z): sigma_m or sigma_m tanh(u_m).
Eigen::VectorXd noise_coeff(const NoiseCoeffSpec& spec, double t,
                            const SpectralField& z);

struct NoiseCoeffConstants {
  double L1 = 0.0;  ///< ||hbar(t,z)||_{L0_2} <= L1 (1 + ||z||)
  double L2 = 0.0;  ///< Lipschitz constant in L0_2
};

NoiseCoeffConstants noise_coeff_constants(const NoiseCoeffSpec& spec,
                                          const stochastic::NoiseSpec& noise);

// ---------------------------------------------------------------------------

enum class ConvolutionRule {
  exact_kernel,   ///< integrate the full kernel over each step
  frozen_kernel,  ///< integrate (t-r)^{eta-1}, freeze E_{eta,eta} at the left end
};

/// Per-mode kernel tables on a uniform grid with step h = T/K.
struct KernelTables {
  double h = 0.0;
  Eigen::MatrixXd homogeneous;  ///< (K+1) x N: E_{eta,1}(-mu t_i^eta)
  Eigen::MatrixXd drift;        ///< (K+1) x N, row j >= 1: Omega(j)
  Eigen::MatrixXd noise;        ///< (K+1) x N, row j >= 1: S(j)
  Eigen::MatrixXd ml_eta_eta;   ///< (K+1) x N: E_{eta,eta}(-mu (jh)^eta)
};

KernelTables build_kernel_tables(const BasisSpec& basis, double eta, double T,
                                 int K, ConvolutionRule rule);

/// Singular weights ((t_i - t_k)^eta - (t_i - t_{k+1})^eta)/eta for k < i.
std::vector<double> singular_weights(const std::vector<double>& grid, int i,
                                     double eta);

/// State history visible to a control law when it computes step k.
struct History {
  const Eigen::MatrixXd& z;           ///< rows 0..k valid
  const Eigen::MatrixXd& G;           ///< rows 0..k-1 valid: G(z_j)
  const Eigen::MatrixXd& noise_term;  ///< rows 0..k-1 valid: hbar_j * dW_j
  const stochastic::WienerPath* path; ///< increments 0..k-1 may be read
};

/// Control entering the drift. The law supplies a coefficient per step and
/// adds its own weighted convolution of those coefficients to z(t_i).
class ControlLaw {
 public:
  virtual ~ControlLaw() = default;
  virtual void coefficient(int k, const History& h,
                           Eigen::Ref<Eigen::VectorXd> out) const = 0;
  /// out += sum_{k<i} weight(i, k) * xi_k, mode by mode.
  virtual void accumulate(int i, const Eigen::MatrixXd& xi,
                          Eigen::Ref<Eigen::VectorXd> out) const = 0;
};

/// Fixed piecewise-constant v: contributes sum_k Omega(i-k) c v_k.
class FixedControl : public ControlLaw {
 public:
  FixedControl(Eigen::MatrixXd v, Eigen::VectorXd c_diag,
               std::shared_ptr<const KernelTables> tables);
  void coefficient(int k, const History& h,
                   Eigen::Ref<Eigen::VectorXd> out) const override;
  void accumulate(int i, const Eigen::MatrixXd& xi,
                  Eigen::Ref<Eigen::VectorXd> out) const override;

 private:
  Eigen::MatrixXd v_;
  Eigen::VectorXd c_;
  std::shared_ptr<const KernelTables> tables_;
};

enum class PicardInit {
  homogeneous,  ///< z^(0)(t) = M_eta(t) z0
  forward,      ///< forward substitution through the causal discrete map
};

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double blowup = 1e12;
  PicardInit init = PicardInit::homogeneous;
  bool keep_iterates = false;
};

struct SolveResult {
  Eigen::MatrixXd path;  ///< (K+1) x N, row i = z(t_i)
  int picard_iterations = 0;
  double final_residual = 0.0;
  std::vector<double> residuals;
  std::vector<Eigen::MatrixXd> iterates;  ///< only with keep_iterates
};

class MildSolver {
 public:
  MildSolver(BasisSpec basis, ModelParams mp, NonlinearitySpec nl,
             NoiseCoeffSpec noise_coeff,
             ConvolutionRule rule = ConvolutionRule::exact_kernel);

  const BasisSpec& basis() const { return basis_; }
  const ModelParams& params() const { return mp_; }
  const std::vector<double>& grid() const { return grid_; }
  std::shared_ptr<const KernelTables> tables() const { return tables_; }
  const Nonlinearity& nonlinearity() const { return G_; }
  const NoiseCoeffSpec& noise_coeff_spec() const { return hbar_; }

  /// One application of the mild map to a full path. `path` may be null
  /// (no noise) and `control` may be null (v = 0).
  Eigen::MatrixXd evaluate(const Eigen::MatrixXd& z, const SpectralField& z0,
                           const stochastic::WienerPath* path,
                           const ControlLaw* control) const;

  /// Exact fixed point of the causal discrete map by forward substitution.
  Eigen::MatrixXd forward(const SpectralField& z0,
                          const stochastic::WienerPath* path,
                          const ControlLaw* control) const;

  /// Homogeneous path rows M_eta(t_i) z0.
  Eigen::MatrixXd homogeneous(const SpectralField& z0) const;

  SolveResult picard_solve(const SpectralField& z0,
                           const stochastic::WienerPath* path,
                           const ControlLaw* control,
                           const SolverOptions& opt = {}) const;

 private:
  Eigen::MatrixXd sweep(const Eigen::MatrixXd* z_in, const SpectralField& z0,
                        const stochastic::WienerPath* path,
                        const ControlLaw* control) const;

  BasisSpec basis_;
  ModelParams mp_;
  std::vector<double> grid_;
  std::shared_ptr<const KernelTables> tables_;
  Nonlinearity G_;
  NoiseCoeffSpec hbar_;
};

/// sup_i ||a_i - b_i|| over grid rows.
double sup_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace tfsns::dynamics
