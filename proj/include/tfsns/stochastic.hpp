#pragma once

// Trace-class Q-Wiener process in the shared eigenbasis, Ito sums on a time
// grid, and order-independent Monte Carlo.
//
// Every Gaussian variate is a pure function of (seed, sample, step, mode,
// stream) through a counter-based generator, so results do not depend on
// which worker draws which sample.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace tfsns::stochastic {

/// Philox4x32-10 block cipher used as a counter-based generator.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Standard normal variate addressed by its coordinates.
double gaussian(std::uint64_t seed, std::uint64_t sample, std::uint32_t step,
                std::uint32_t mode, std::uint32_t stream = 0);

/// Uniform variate in (0, 1) addressed by its coordinates.
double uniform(std::uint64_t seed, std::uint64_t sample, std::uint32_t step,
               std::uint32_t mode, std::uint32_t stream = 0);

struct NoiseSpec {
  Eigen::VectorXd q_eigenvalues;  ///< nu_m >= 0
  double trace() const { return q_eigenvalues.sum(); }
};

/// nu_m proportional to m^{-r}, scaled so that Tr Q = total.
NoiseSpec power_law_noise(int N, double r = 2.0, double total = 1.0);

/// Uniform grid 0 = t_0 < ... < t_K = T.
std::vector<double> uniform_grid(double T, int K);

struct WienerPath {
  std::vector<double> t;
  /// K x N; entry (k, m) = sqrt(nu_m) (omega_m(t_{k+1}) - omega_m(t_k)).
  Eigen::MatrixXd increments;

  int steps() const { return static_cast<int>(increments.rows()); }
  /// W(t_k) by summing increments before k.
  Eigen::VectorXd value_at(int k) const;
};

WienerPath sample_wiener(const std::vector<double>& grid,
                         const NoiseSpec& noise, std::uint64_t seed,
                         std::uint64_t sample_index, std::uint32_t stream = 0);

/// Left-point sum sum_k Phi(k, m) dW(k, m) for a diagonal integrand given
/// as K x N multipliers.
Eigen::VectorXd ito_integral(const Eigen::MatrixXd& integrand,
                             const WienerPath& path);

/// Squared Hilbert-Schmidt norm sum_m Phi_m^2 nu_m of a diagonal multiplier.
double hs_norm_sq(const Eigen::VectorXd& multiplier, const NoiseSpec& noise);

struct MCEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

/// Pairwise sum in a fixed tree order.
double pairwise_sum(const double* v, std::size_t n);

/// Evaluates f(i) for i in [0, n) on `workers` threads. Output order is the
/// sample order regardless of scheduling.
std::vector<double> mc_collect(const std::function<double(std::uint64_t)>& f,
                               std::size_t n, int workers = 1);

/// Vector-valued variant: f fills `dim` values per sample; row-major n x dim.
std::vector<double> mc_collect_vec(
    const std::function<void(std::uint64_t, double*)>& f, std::size_t n,
    std::size_t dim, int workers = 1);

/// Mean and standard error of stored samples. Throws NumericalError naming
/// the first non-finite sample.
MCEstimate summarize(const std::vector<double>& values);

MCEstimate mc_expect(const std::function<double(std::uint64_t)>& f,
                     std::size_t n, int workers = 1);

/// BDG constant (p(p-1)/2)^{p/2} (p/(p-1))^{p(p/2-1)}.
double bdg_constant(double p);

/// Adapted diagonal integrand: the value on step k may read path increments
/// before k only. Fills one N-vector.
using AdaptedIntegrand = std::function<void(int k, const WienerPath& path,
                                            Eigen::Ref<Eigen::VectorXd> out)>;

struct BDGReport {
  double p = 2.0;
  double kappa = 1.0;
  MCEstimate lhs;  ///< E || int Phi dW ||^p
  MCEstimate rhs;  ///< E ( int ||Phi||^2_{L0_2} dt )^{p/2}
  double ratio = 0.0;      ///< lhs / (kappa rhs)
  double ratio_se = 0.0;   ///< delta-method standard error of ratio
  bool pass = false;       ///< ratio <= 1 + 3 ratio_se
};

BDGReport bdg_check(double p, const AdaptedIntegrand& integrand,
                    const std::vector<double>& grid, const NoiseSpec& noise,
                    std::size_t n_samples, std::uint64_t seed,
                    int workers = 1);

}  // namespace tfsns::stochastic
