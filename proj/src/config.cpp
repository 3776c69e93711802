#include "tfsns/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace tfsns::cli {

namespace {

enum class Kind { real, integer, uint64, boolean, word, real_list };

struct Key {
  const char* name;
  Kind kind;
  const char* def;
};

// Sorted by name; canonical output follows this order.
const Key kSchema[] = {
    {"bdg.K", Kind::integer, "32"},
    {"bdg.p", Kind::real_list, "[2, 4]"},
    {"bounds.beta", Kind::real_list, "[0.5]"},
    {"bounds.n_t", Kind::integer, "20"},
    {"bounds.slope_tol", Kind::real, "0.05"},
    {"bounds.t_max", Kind::real, "1"},
    {"bounds.t_min", Kind::real, "0.001"},
    {"control.c", Kind::real_list, "[1]"},
    {"control.error_power", Kind::real, "2"},
    {"control.kernel_weight", Kind::boolean, "true"},
    {"control.lambda_list", Kind::real_list, "[1, 0.1, 0.01]"},
    {"control.n_quad", Kind::integer, "128"},
    {"control.normalize_gamma", Kind::boolean, "false"},
    {"control.target", Kind::real_list, "[0]"},
    {"mlfun.a", Kind::real_list, "[0.3, 0.5, 0.7, 0.9]"},
    {"mlfun.anchors", Kind::boolean, "true"},
    {"mlfun.b", Kind::real_list, "[1]"},
    {"mlfun.b_equals_a", Kind::boolean, "true"},
    {"mlfun.n_x", Kind::integer, "40"},
    {"mlfun.tol", Kind::real, "1e-08"},
    {"mlfun.x_max", Kind::real, "50"},
    {"mlfun.x_min", Kind::real, "0.01"},
    {"model.K", Kind::integer, "256"},
    {"model.N", Kind::integer, "16"},
    {"model.T", Kind::real, "1"},
    {"model.alpha", Kind::real, "1.8"},
    {"model.basis", Kind::word, "dirichlet_sine_1d"},
    {"model.beta", Kind::real, "0.2"},
    {"model.eta", Kind::real, "0.9"},
    {"model.nu", Kind::real, "1"},
    {"model.p", Kind::real, "4"},
    {"model.z0", Kind::real_list, "[0.1]"},
    {"noise.coeff", Kind::word, "additive"},
    {"noise.decay", Kind::real, "2"},
    {"noise.sigma", Kind::real_list, "[0]"},
    {"noise.trace", Kind::real, "1"},
    {"nonlinearity.R", Kind::real, "inf"},
    {"nonlinearity.kind", Kind::word, "zero"},
    {"nonlinearity.rule", Kind::word, "exact_kernel"},
    {"run.deterministic", Kind::boolean, "false"},
    {"run.n_samples", Kind::integer, "1"},
    {"run.seed", Kind::uint64, "0"},
    {"run.workers", Kind::integer, "1"},
    {"solver.init", Kind::word, "homogeneous"},
    {"solver.max_iter", Kind::integer, "50"},
    {"solver.tol", Kind::real, "1e-10"},
};

const Key* find_key(std::string_view name) {
  for (const auto& k : kSchema) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Raw {
  std::string text;
  int line = 0;  // 0: default
};

double parse_real(const std::string& key, int line, const std::string& s) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (!s.empty() && *b == '+') ++b;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e || s.empty()) {
    throw ConfigError(key, line, "expected a real number, got '" + s + "'");
  }
  if (!std::isfinite(v)) throw ConfigError(key, line, "value must be finite");
  return v;
}

long long parse_int(const std::string& key, int line, const std::string& s) {
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(key, line, "expected an integer, got '" + s + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, int line, const std::string& s) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(key, line, "expected an unsigned 64-bit integer, got '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, int line, const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError(key, line, "expected true or false, got '" + s + "'");
}

std::vector<double> parse_list(const std::string& key, int line,
                               const std::string& s) {
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
    throw ConfigError(key, line, "expected a list [x, y, ...], got '" + s + "'");
  }
  std::vector<double> out;
  const std::string body = trim(std::string_view(s).substr(1, s.size() - 2));
  if (body.empty()) return out;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    const auto comma = body.find(',', pos);
    const std::string item =
        trim(std::string_view(body).substr(pos, comma == std::string::npos
                                                    ? std::string::npos
                                                    : comma - pos));
    out.push_back(parse_real(key, line, item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s + "]";
}

}  // namespace

ConfigError::ConfigError(const std::string& key, int line,
                         const std::string& msg)
    : ParameterError(key + (line > 0 ? " (line " + std::to_string(line) + ")"
                                     : std::string(" (default)")) +
                     ": " + msg),
      key_(key),
      line_(line) {}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::vector<std::pair<std::string, std::string>> schema_defaults() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : kSchema) out.emplace_back(k.name, k.def);
  return out;
}

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, Raw> raw;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string line(text.substr(pos, nl == std::string_view::npos
                                          ? std::string_view::npos
                                          : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(trim(line), line_no, "expected 'key = value'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string val = trim(std::string_view(line).substr(eq + 1));
    if (!find_key(key)) throw ConfigError(key, line_no, "unknown key");
    if (raw.count(key)) {
      throw ConfigError(key, line_no,
                        "duplicate key (first set on line " +
                            std::to_string(raw[key].line) + ")");
    }
    if (val.empty()) throw ConfigError(key, line_no, "missing value");
    raw[key] = {val, line_no};
  }
  for (const auto& k : kSchema) {
    if (!raw.count(k.name)) raw[k.name] = {k.def, 0};
  }

  ExperimentConfig c;
  auto real = [&](const char* k) { return parse_real(k, raw[k].line, raw[k].text); };
  auto integer = [&](const char* k) { return parse_int(k, raw[k].line, raw[k].text); };
  auto boolean = [&](const char* k) { return parse_bool(k, raw[k].line, raw[k].text); };
  auto list = [&](const char* k) { return parse_list(k, raw[k].line, raw[k].text); };
  auto word = [&](const char* k) { return raw[k].text; };
  auto require = [&](const char* k, bool ok, const std::string& bound) {
    if (!ok) {
      throw ConfigError(k, raw[k].line,
                        "value " + raw[k].text + " violates " + bound);
    }
  };
  auto positive_int = [&](const char* k, long long lo) {
    const long long v = integer(k);
    require(k, v >= lo && v <= std::numeric_limits<int>::max(),
            ">= " + std::to_string(lo));
    return static_cast<int>(v);
  };

  auto& m = c.model;
  m.eta = real("model.eta");
  require("model.eta", m.eta > 0.0 && m.eta <= 1.0, "eta in (0,1) (1 admitted as the classical limit)");
  m.alpha = real("model.alpha");
  require("model.alpha", m.alpha > 1.0 && m.alpha <= 2.0, "alpha in (1,2]");
  m.beta = real("model.beta");
  require("model.beta", m.beta >= 0.0 && m.beta < m.alpha, "0 <= beta < alpha");
  m.p = real("model.p");
  require("model.p", m.p >= 2.0, "p >= 2");
  m.nu = real("model.nu");
  require("model.nu", m.nu > 0.0, "nu > 0");
  m.T = real("model.T");
  require("model.T", m.T > 0.0, "T > 0");
  m.N = positive_int("model.N", 1);
  m.K = positive_int("model.K", 1);
  try {
    m.basis = spectral::parse_basis_kind(word("model.basis"));
  } catch (const ParameterError& e) {
    throw ConfigError("model.basis", raw["model.basis"].line, e.what());
  }
  c.z0 = list("model.z0");
  require("model.z0", static_cast<int>(c.z0.size()) <= m.N, "length <= model.N");

  try {
    c.nonlinearity.kind = dynamics::parse_nonlinearity_kind(word("nonlinearity.kind"));
  } catch (const ParameterError& e) {
    throw ConfigError("nonlinearity.kind", raw["nonlinearity.kind"].line, e.what());
  }
  {
    const auto& r = raw["nonlinearity.R"];
    c.nonlinearity.R = r.text == "inf"
                           ? std::numeric_limits<double>::infinity()
                           : parse_real("nonlinearity.R", r.line, r.text);
    require("nonlinearity.R", c.nonlinearity.R > 0.0, "R > 0");
  }
  {
    const std::string r = word("nonlinearity.rule");
    require("nonlinearity.rule", r == "exact_kernel" || r == "frozen_kernel",
            "one of exact_kernel, frozen_kernel");
    c.rule = r == "exact_kernel" ? dynamics::ConvolutionRule::exact_kernel
                                 : dynamics::ConvolutionRule::frozen_kernel;
  }

  c.noise_decay = real("noise.decay");
  require("noise.decay", c.noise_decay > 1.0, "decay > 1 (trace class)");
  c.noise_trace = real("noise.trace");
  require("noise.trace", c.noise_trace >= 0.0, "trace >= 0");
  try {
    c.noise_coeff = dynamics::parse_noise_coeff_kind(word("noise.coeff"));
  } catch (const ParameterError& e) {
    throw ConfigError("noise.coeff", raw["noise.coeff"].line, e.what());
  }
  c.sigma = list("noise.sigma");
  require("noise.sigma",
          c.sigma.size() == 1 || static_cast<int>(c.sigma.size()) == m.N,
          "length 1 or model.N");

  c.control_c = list("control.c");
  require("control.c",
          c.control_c.size() == 1 || static_cast<int>(c.control_c.size()) == m.N,
          "length 1 or model.N");
  c.control_target = list("control.target");
  require("control.target", static_cast<int>(c.control_target.size()) <= m.N,
          "length <= model.N");
  c.lambda_list = list("control.lambda_list");
  bool sorted = !c.lambda_list.empty();
  for (std::size_t i = 0; i < c.lambda_list.size(); ++i) {
    sorted = sorted && c.lambda_list[i] > 0.0 &&
             (i == 0 || c.lambda_list[i] < c.lambda_list[i - 1]);
  }
  require("control.lambda_list", sorted, "positive values sorted strictly descending");
  c.kernel_weight = boolean("control.kernel_weight");
  c.normalize_gamma = boolean("control.normalize_gamma");
  c.n_quad = positive_int("control.n_quad", 8);
  c.error_power = real("control.error_power");
  require("control.error_power", c.error_power > 0.0, "> 0");

  c.seed = parse_u64("run.seed", raw["run.seed"].line, raw["run.seed"].text);
  c.n_samples = static_cast<std::size_t>(positive_int("run.n_samples", 1));
  c.workers = positive_int("run.workers", 1);
  c.deterministic = boolean("run.deterministic");

  c.tol = real("solver.tol");
  require("solver.tol", c.tol > 0.0, "tol > 0");
  c.max_iter = positive_int("solver.max_iter", 1);
  {
    const std::string s = word("solver.init");
    require("solver.init", s == "homogeneous" || s == "forward",
            "one of homogeneous, forward");
    c.init = s == "forward" ? dynamics::PicardInit::forward
                            : dynamics::PicardInit::homogeneous;
  }

  c.ml_a = list("mlfun.a");
  for (double a : c.ml_a) require("mlfun.a", a > 0.0 && a <= 1.0, "every a in (0,1]");
  c.ml_b = list("mlfun.b");
  for (double b : c.ml_b) require("mlfun.b", b > 0.0, "every b > 0");
  c.ml_b_equals_a = boolean("mlfun.b_equals_a");
  c.ml_anchors = boolean("mlfun.anchors");
  c.ml_x_min = real("mlfun.x_min");
  c.ml_x_max = real("mlfun.x_max");
  require("mlfun.x_min", c.ml_x_min > 0.0, "x_min > 0");
  require("mlfun.x_max", c.ml_x_max >= c.ml_x_min, "x_max >= x_min");
  c.ml_n_x = positive_int("mlfun.n_x", 1);
  c.ml_tol = real("mlfun.tol");
  require("mlfun.tol", c.ml_tol > 0.0, "tol > 0");

  c.bounds_beta = list("bounds.beta");
  for (double b : c.bounds_beta) {
    require("bounds.beta", b >= 0.0 && b <= m.alpha, "every beta in [0, alpha]");
  }
  c.bounds_t_min = real("bounds.t_min");
  c.bounds_t_max = real("bounds.t_max");
  require("bounds.t_min", c.bounds_t_min > 0.0, "t_min > 0");
  require("bounds.t_max", c.bounds_t_max > c.bounds_t_min, "t_max > t_min");
  c.bounds_n_t = positive_int("bounds.n_t", 10);
  c.bounds_slope_tol = real("bounds.slope_tol");
  require("bounds.slope_tol", c.bounds_slope_tol > 0.0, "> 0");

  c.bdg_p = list("bdg.p");
  for (double p : c.bdg_p) require("bdg.p", p >= 2.0, "every p >= 2");
  c.bdg_K = positive_int("bdg.K", 1);

  for (const auto& k : kSchema) {
    // Worker count never changes results, so it stays out of the hash.
    if (std::string_view(k.name) == "run.workers") continue;
    const auto& r = raw[k.name];
    std::string v;
    switch (k.kind) {
      case Kind::real: v = format_double(parse_real(k.name, r.line, r.text)); break;
      case Kind::real_list: v = format_list(parse_list(k.name, r.line, r.text)); break;
      default: v = r.text; break;
    }
    c.canonical.push_back(std::string(k.name) + " = " + v);
  }
  return c;
}

std::string canonical_text(const ExperimentConfig& cfg) {
  std::string s;
  for (const auto& l : cfg.canonical) {
    s += l;
    s += '\n';
  }
  return s;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : canonical_text(cfg)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace tfsns::cli
