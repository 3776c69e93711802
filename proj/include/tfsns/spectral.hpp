#pragma once

// Diagonal eigenbasis of -Laplace (Dirichlet sine on (0,1), or the
// divergence-free trigonometric fields on the unit torus). States are
// coefficient vectors; every operator in the model acts mode by mode.

#include <Eigen/Core>
#include <string>
#include <string_view>
#include <vector>

namespace tfsns::spectral {

/// Coefficients in the orthonormal eigenbasis.
using SpectralField = Eigen::VectorXd;

enum class BasisKind { dirichlet_sine_1d, divfree_torus_2d };

BasisKind parse_basis_kind(std::string_view name);
std::string to_string(BasisKind kind);

/// Torus mode sqrt(2) {cos|sin}(2 pi k.x) k_perp/|k|, with k in the upper
/// half plane so that each real field appears once.
struct TorusMode {
  int kx = 0;
  int ky = 0;
  bool cosine = true;
};

struct BasisSpec {
  BasisKind kind = BasisKind::dirichlet_sine_1d;
  int N = 0;
  double nu = 1.0;
  double alpha = 2.0;
  Eigen::VectorXd eigenvalues;       ///< lambda_m of -Laplace
  Eigen::VectorXd frac_eigenvalues;  ///< mu_m = nu lambda_m^{alpha/2}
  std::vector<TorusMode> torus_modes;  ///< empty for the 1D basis

  int size() const { return N; }
};

BasisSpec build_basis(BasisKind kind, int N, double nu, double alpha);

/// e_m(x) = sqrt(2) sin(m pi x); m is 1-based.
double sine_mode(int m, double x);

/// Velocity of a torus mode at (x, y).
Eigen::Vector2d torus_mode_value(const TorusMode& mode, double x, double y);

/// Pointwise divergence of a torus mode computed from the analytic partial
/// derivatives of both components.
double torus_mode_divergence(const TorusMode& mode, double x, double y);

SpectralField apply_fractional_power(const BasisSpec& basis,
                                     const SpectralField& f, double gamma);

/// (sum lambda_m^beta u_m^2)^{1/2}, i.e. the norm of A^{beta/2} f.
double sobolev_norm(const BasisSpec& basis, const SpectralField& f,
                    double beta);

/// Symbol of M_eta(t) per mode: E_{eta,1}(-mu_m t^eta).
Eigen::VectorXd M_eta_symbol(const BasisSpec& basis, double t, double eta);
/// Symbol of M_{eta,eta}(t) per mode: E_{eta,eta}(-mu_m t^eta).
Eigen::VectorXd M_eta_eta_symbol(const BasisSpec& basis, double t,
                                 double eta);

SpectralField apply_M_eta(const BasisSpec& basis, double t,
                          const SpectralField& f, double eta);
SpectralField apply_M_eta_eta(const BasisSpec& basis, double t,
                              const SpectralField& f, double eta);

struct BoundProbeReport {
  std::vector<double> t;
  std::vector<double> R;         ///< sup over unit modes of ||M_eta(t)e_m||_{H^beta}
  double slope = 0.0;            ///< least-squares slope of log R against log t
  double intercept = 0.0;
  double max_constant = 0.0;     ///< max over the grid of R(t) t^{eta beta/alpha}
  double expected_slope = 0.0;   ///< -eta beta / alpha
  /// Consecutive-pair increment modulus
  /// sup_m ||(M(t_{i+1}) - M(t_i)) e_m||_{H^beta} / (t_{i+1}-t_i)^{eta beta/alpha}.
  std::vector<double> increment_modulus;
};

/// Probe of the smoothing bound ||M_eta(t)||_{L2 -> H^beta} <= C t^{-eta beta/alpha}.
BoundProbeReport bound_probe(const BasisSpec& basis, double eta, double beta,
                             const std::vector<double>& t_grid);

/// Increment modulus for one pair of times.
double increment_modulus(const BasisSpec& basis, double eta, double beta,
                         double tau1, double tau2);

}  // namespace tfsns::spectral
