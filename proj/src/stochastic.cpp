#include "tfsns/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "tfsns/errors.hpp"

namespace tfsns::stochastic {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 4> block(std::uint64_t seed, std::uint64_t sample,
                                   std::uint32_t step, std::uint32_t mode,
                                   std::uint32_t stream) {
  if (mode >= (1u << 24) || stream >= (1u << 8)) {
    throw ParameterError("RNG coordinates out of range (mode < 2^24, stream < 256)");
  }
  return philox4x32({step, mode | (stream << 24),
                     static_cast<std::uint32_t>(sample),
                     static_cast<std::uint32_t>(sample >> 32)},
                    {static_cast<std::uint32_t>(seed),
                     static_cast<std::uint32_t>(seed >> 32)});
}

// 53-bit uniform in (0, 1) from two words.
inline double to_open_unit(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t m =
      (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
  return (static_cast<double>(m) + 0.5) * 0x1.0p-53;
}

void run_workers(std::size_t n, int workers,
                 const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const auto w = static_cast<std::size_t>(workers);
  std::vector<std::exception_ptr> errors(w);
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t id = 0; id < w; ++id) {
    pool.emplace_back([&, id] {
      try {
        for (std::size_t i = id; i < n; i += w) body(i);
      } catch (...) {
        errors[id] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

double gaussian(std::uint64_t seed, std::uint64_t sample, std::uint32_t step,
                std::uint32_t mode, std::uint32_t stream) {
  const auto r = block(seed, sample, step, mode, stream);
  const double u1 = to_open_unit(r[0], r[1]);
  const double u2 = to_open_unit(r[2], r[3]);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double uniform(std::uint64_t seed, std::uint64_t sample, std::uint32_t step,
               std::uint32_t mode, std::uint32_t stream) {
  const auto r = block(seed, sample, step, mode, stream);
  return to_open_unit(r[0], r[1]);
}

NoiseSpec power_law_noise(int N, double r, double total) {
  if (N < 1) throw ParameterError("noise needs N >= 1");
  if (!(total >= 0.0)) throw ParameterError("noise trace must be >= 0");
  // the untruncated spectrum must stay trace class
  if (!(r > 1.0)) throw ParameterError("noise decay exponent must be > 1");
  NoiseSpec ns;
  ns.q_eigenvalues.resize(N);
  for (int m = 0; m < N; ++m) ns.q_eigenvalues[m] = std::pow(m + 1.0, -r);
  const double s = ns.q_eigenvalues.sum();
  ns.q_eigenvalues *= total / s;
  return ns;
}

std::vector<double> uniform_grid(double T, int K) {
  if (!(T > 0.0) || K < 1) throw ParameterError("grid needs T > 0, K >= 1");
  std::vector<double> t(K + 1);
  for (int k = 0; k <= K; ++k) t[k] = T * k / K;
  t[K] = T;
  return t;
}

Eigen::VectorXd WienerPath::value_at(int k) const {
  if (k == 0) return Eigen::VectorXd::Zero(increments.cols());
  return increments.topRows(k).colwise().sum().transpose();
}

WienerPath sample_wiener(const std::vector<double>& grid,
                         const NoiseSpec& noise, std::uint64_t seed,
                         std::uint64_t sample_index, std::uint32_t stream) {
  if (grid.size() < 2) throw ParameterError("grid needs at least two points");
  const int K = static_cast<int>(grid.size()) - 1;
  const int N = static_cast<int>(noise.q_eigenvalues.size());
  WienerPath w;
  w.t = grid;
  w.increments.resize(K, N);
  for (int m = 0; m < N; ++m) {
    const double nu = noise.q_eigenvalues[m];
    if (nu < 0.0) throw ParameterError("negative covariance eigenvalue");
    for (int k = 0; k < K; ++k) {
      const double dt = grid[k + 1] - grid[k];
      if (!(dt > 0.0)) throw ParameterError("grid must be strictly increasing");
      w.increments(k, m) =
          nu == 0.0 ? 0.0
                    : std::sqrt(nu * dt) *
                          gaussian(seed, sample_index, static_cast<std::uint32_t>(k),
                                   static_cast<std::uint32_t>(m), stream);
    }
  }
  return w;
}

Eigen::VectorXd ito_integral(const Eigen::MatrixXd& integrand,
                             const WienerPath& path) {
  if (integrand.rows() != path.increments.rows() ||
      integrand.cols() != path.increments.cols()) {
    std::ostringstream os;
    os << "integrand is " << integrand.rows() << "x" << integrand.cols()
       << ", path increments are " << path.increments.rows() << "x"
       << path.increments.cols();
    throw ParameterError(os.str());
  }
  return integrand.cwiseProduct(path.increments).colwise().sum().transpose();
}

double hs_norm_sq(const Eigen::VectorXd& multiplier, const NoiseSpec& noise) {
  return (multiplier.array().square() * noise.q_eigenvalues.array()).sum();
}

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

std::vector<double> mc_collect(const std::function<double(std::uint64_t)>& f,
                               std::size_t n, int workers) {
  std::vector<double> out(n);
  run_workers(n, workers, [&](std::size_t i) { out[i] = f(i); });
  return out;
}

std::vector<double> mc_collect_vec(
    const std::function<void(std::uint64_t, double*)>& f, std::size_t n,
    std::size_t dim, int workers) {
  std::vector<double> out(n * dim);
  run_workers(n, workers, [&](std::size_t i) { f(i, out.data() + i * dim); });
  return out;
}

MCEstimate summarize(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) throw ParameterError("Monte Carlo needs n_samples >= 2");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericalError("non-finite Monte Carlo sample at index " +
                           std::to_string(i));
    }
  }
  MCEstimate e;
  e.n = n;
  e.mean = pairwise_sum(values.data(), n) / static_cast<double>(n);
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) {
    dev[i] = (values[i] - e.mean) * (values[i] - e.mean);
  }
  const double var = pairwise_sum(dev.data(), n) / static_cast<double>(n - 1);
  e.stderr_ = std::sqrt(var / static_cast<double>(n));
  return e;
}

MCEstimate mc_expect(const std::function<double(std::uint64_t)>& f,
                     std::size_t n, int workers) {
  if (n < 2) throw ParameterError("Monte Carlo needs n_samples >= 2");
  return summarize(mc_collect(f, n, workers));
}

double bdg_constant(double p) {
  if (!(p >= 2.0)) throw ParameterError("BDG constant needs p >= 2");
  return std::pow(p * (p - 1.0) / 2.0, p / 2.0) *
         std::pow(p / (p - 1.0), p * (p / 2.0 - 1.0));
}

BDGReport bdg_check(double p, const AdaptedIntegrand& integrand,
                    const std::vector<double>& grid, const NoiseSpec& noise,
                    std::size_t n_samples, std::uint64_t seed, int workers) {
  BDGReport rep;
  rep.p = p;
  rep.kappa = bdg_constant(p);
  const int N = static_cast<int>(noise.q_eigenvalues.size());
  const int K = static_cast<int>(grid.size()) - 1;
  const auto vals = mc_collect_vec(
      [&](std::uint64_t i, double* out) {
        const WienerPath w = sample_wiener(grid, noise, seed, i);
        Eigen::VectorXd phi(N);
        Eigen::VectorXd I = Eigen::VectorXd::Zero(N);
        double q = 0.0;
        for (int k = 0; k < K; ++k) {
          phi.setZero();
          integrand(k, w, phi);
          I += phi.cwiseProduct(w.increments.row(k).transpose());
          q += hs_norm_sq(phi, noise) * (grid[k + 1] - grid[k]);
        }
        out[0] = std::pow(I.norm(), p);
        out[1] = std::pow(q, p / 2.0);
      },
      n_samples, 2, workers);
  std::vector<double> x(n_samples), y(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    x[i] = vals[2 * i];
    y[i] = vals[2 * i + 1];
  }
  rep.lhs = summarize(x);
  rep.rhs = summarize(y);
  if (rep.rhs.mean == 0.0) {
    rep.ratio = 0.0;
    rep.ratio_se = 0.0;
    rep.pass = rep.lhs.mean == 0.0;
    return rep;
  }
  std::vector<double> cross(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    cross[i] = (x[i] - rep.lhs.mean) * (y[i] - rep.rhs.mean);
  }
  const double n = static_cast<double>(n_samples);
  const double cov_means = pairwise_sum(cross.data(), n_samples) / (n - 1) / n;
  const double X = rep.lhs.mean, Y = rep.rhs.mean;
  const double vx = rep.lhs.stderr_ * rep.lhs.stderr_;
  const double vy = rep.rhs.stderr_ * rep.rhs.stderr_;
  const double var_r =
      (vx / (Y * Y) + X * X * vy / (Y * Y * Y * Y) - 2.0 * X * cov_means / (Y * Y * Y)) /
      (rep.kappa * rep.kappa);
  rep.ratio = X / (rep.kappa * Y);
  rep.ratio_se = std::sqrt(std::max(var_r, 0.0));
  rep.pass = rep.ratio <= 1.0 + 3.0 * rep.ratio_se;
  return rep;
}

}  // namespace tfsns::stochastic
