#pragma once

// Experiment configuration: flat `section.key = value` text with `#`
// comments, scalars, booleans, bare-word strings and `[x, y, ...]` lists.
// Every key has a schema entry; unknown or repeated keys are errors that name
// the key and line.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tfsns/control.hpp"
#include "tfsns/dynamics.hpp"
#include "tfsns/errors.hpp"

namespace tfsns::cli {

class ConfigError : public ParameterError {
 public:
  ConfigError(const std::string& key, int line, const std::string& msg);
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_ = 0;
};

struct ExperimentConfig {
  dynamics::ModelParams model;
  std::vector<double> z0;  ///< leading coefficients, zero-padded to N

  dynamics::NonlinearitySpec nonlinearity;
  dynamics::ConvolutionRule rule = dynamics::ConvolutionRule::exact_kernel;

  double noise_decay = 2.0;
  double noise_trace = 1.0;
  dynamics::NoiseCoeffKind noise_coeff = dynamics::NoiseCoeffKind::additive;
  std::vector<double> sigma;  ///< broadcast when of length 1

  std::vector<double> control_c;
  std::vector<double> control_target;
  std::vector<double> lambda_list;
  bool kernel_weight = true;
  bool normalize_gamma = false;
  int n_quad = 128;
  double error_power = 2.0;

  std::uint64_t seed = 0;
  std::size_t n_samples = 1;
  int workers = 1;
  bool deterministic = false;

  double tol = 1e-10;
  int max_iter = 50;
  dynamics::PicardInit init = dynamics::PicardInit::homogeneous;

  std::vector<double> ml_a;
  std::vector<double> ml_b;
  bool ml_b_equals_a = true;
  bool ml_anchors = true;
  double ml_x_min = 0.01;
  double ml_x_max = 50.0;
  int ml_n_x = 40;
  double ml_tol = 1e-8;

  std::vector<double> bounds_beta;
  double bounds_t_min = 1e-3;
  double bounds_t_max = 1.0;
  int bounds_n_t = 20;
  double bounds_slope_tol = 0.05;

  std::vector<double> bdg_p;
  int bdg_K = 32;

  /// Canonical `key = value` lines (sorted; every schema key that can change
  /// results, i.e. all but run.workers).
  std::vector<std::string> canonical;
};

ExperimentConfig parse_config(std::string_view text);

/// Canonical text: the canonical lines joined with newlines.
std::string canonical_text(const ExperimentConfig& cfg);

/// FNV-1a 64 of the canonical text.
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Full list of schema keys with their default value text.
std::vector<std::pair<std::string, std::string>> schema_defaults();

}  // namespace tfsns::cli
