#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tfsns/config.hpp"
#include "tfsns/experiments.hpp"

using namespace tfsns;
using namespace tfsns::cli;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

const char* kSweep =
    "model.eta = 0.8\nmodel.alpha = 1.6\nmodel.beta = 0\nmodel.N = 1\n"
    "model.K = 128\nmodel.z0 = [0]\nnoise.trace = 0\n"
    "control.target = [1]\ncontrol.normalize_gamma = true\n"
    "control.lambda_list = [1, 0.1]\nrun.deterministic = true\n";

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(
      "# comment\n"
      "model.eta = 0.7   # trailing\n"
      "\n"
      "model.z0 = [0.1, -2e-1]\n"
      "nonlinearity.kind = burgers_1d\n"
      "nonlinearity.R = 3\n"
      "control.kernel_weight = false\n"
      "run.seed = 18446744073709551615\n");
  CHECK(c.model.eta == 0.7);
  REQUIRE(c.z0.size() == 2);
  CHECK(c.z0[1] == -0.2);
  CHECK(c.nonlinearity.kind == dynamics::NonlinearityKind::burgers_1d);
  CHECK(c.nonlinearity.R == 3.0);
  CHECK_FALSE(c.kernel_weight);
  CHECK(c.seed == 18446744073709551615ull);
  CHECK(c.model.N == 16);
  CHECK(std::isinf(parse_config("").nonlinearity.R));
}

TEST_CASE("config errors name the key and line") {
  auto msg = error_of("model.N = 8\nmodel.eta = 1.5\n");
  CHECK(msg.find("model.eta") != std::string::npos);
  CHECK(msg.find("line 2") != std::string::npos);

  msg = error_of("model.N = 8\n\nmodel.N = 9\n");
  CHECK(msg.find("model.N") != std::string::npos);
  CHECK(msg.find("duplicate") != std::string::npos);
  CHECK(msg.find("line 3") != std::string::npos);

  msg = error_of("model.colour = red\n");
  CHECK(msg.find("model.colour") != std::string::npos);
  CHECK(msg.find("unknown key") != std::string::npos);

  CHECK(error_of("model.K = 12.5\n").find("model.K") != std::string::npos);
  CHECK(error_of("model.z0 = 0.1, 0.2\n").find("model.z0") != std::string::npos);
  CHECK(error_of("control.kernel_weight = maybe\n").find("control.kernel_weight") != std::string::npos);
  CHECK(error_of("nonlinearity.kind = kdv\n").find("nonlinearity.kind") != std::string::npos);
  CHECK(error_of("model.N\n").find("line 1") != std::string::npos);
  CHECK(error_of("model.nu = nan\n").find("model.nu") != std::string::npos);
}

TEST_CASE("config hash") {
  const auto a = parse_config("model.eta = 0.7\nmodel.N = 4\n");
  const auto b = parse_config("model.N = 4\n# reordered\nmodel.eta = 0.70\n");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(canonical_text(a) == canonical_text(b));

  const auto w = parse_config("model.eta = 0.7\nmodel.N = 4\nrun.workers = 3\n");
  CHECK(config_hash(a) == config_hash(w));
  CHECK(w.workers == 3);

  const auto s = parse_config("model.eta = 0.7\nmodel.N = 4\nrun.seed = 1\n");
  CHECK(config_hash(a) != config_hash(s));

  auto c = a;
  set_seed(c, 1);
  CHECK(config_hash(c) == config_hash(s));
  CHECK(schema_defaults().size() == a.canonical.size() + 1);
}

TEST_CASE("header round trip") {
  const auto cfg = parse_config(kSweep);
  const auto out = run_subcommand("control-sweep", cfg, false);
  REQUIRE(out.tables.size() == 1);
  const auto csv = render_table(out.tables[0], "control-sweep", cfg, out.pass);
  const auto back = config_from_header(csv);
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(render_table(out.tables[0], "control-sweep", back, out.pass) == csv);

  const auto& rows = out.tables[0].rows;
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][1] == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(rows[1][1] == doctest::Approx(1.0 / 121.0).epsilon(1e-6));
  CHECK(rows[1][4] == doctest::Approx(rows[1][1]).epsilon(1e-6));

  // Reruns are byte-identical.
  const auto again = run_subcommand("control-sweep", parse_config(kSweep), false);
  CHECK(render_table(again.tables[0], "control-sweep", cfg, again.pass) == csv);
}

TEST_CASE("mlfun subcommand") {
  const auto cfg = parse_config("mlfun.a = [0.5]\nmlfun.n_x = 4\n");
  const auto out = run_subcommand("mlfun", cfg, false);
  CHECK(out.pass);
  const auto& t = out.tables[0];
  REQUIRE(t.rows.size() == 3 + 2 * 4);
  CHECK(t.rows[0][0] == 1.0);
  CHECK(t.rows[0][3] == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  for (const auto& r : t.rows) CHECK(r[5] <= 1e-8);

  CHECK_THROWS_AS(run_subcommand("mlfun", parse_config("mlfun.a = [0.5]\nmlfun.b = [2]\n"), false),
                  ConfigError);
  CHECK_THROWS_AS(run_subcommand("frobnicate", cfg, false), ParameterError);
}

TEST_CASE("validate subcommand and refusal") {
  const auto ok = parse_config("model.eta = 0.9\nmodel.alpha = 1.8\nmodel.beta = 0.2\nmodel.p = 4\n");
  CHECK(run_subcommand("validate", ok, false).pass);

  const auto bad = parse_config(
      "model.eta = 0.5\nmodel.alpha = 1.5\nmodel.beta = 0\nmodel.p = 2\n"
      "model.N = 4\nmodel.K = 16\nnoise.trace = 0\n");
  const auto v = run_subcommand("validate", bad, false);
  CHECK_FALSE(v.pass);
  CHECK_THROWS_AS(run_subcommand("solve", bad, false), ParameterError);
  CHECK_NOTHROW(run_subcommand("solve", bad, true));
}

TEST_CASE("output files") {
  const auto dir = std::filesystem::temp_directory_path() / "tfsns_test_cli_out";
  std::filesystem::remove_all(dir);
  const auto cfg = parse_config(kSweep);
  const auto out = run_subcommand("control-sweep", cfg, false);
  const auto paths = write_outputs(out, "control-sweep", cfg, dir);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].filename() == "control_sweep.csv");
  const auto text = slurp(paths[0]);
  CHECK(text == render_table(out.tables[0], "control-sweep", cfg, out.pass));
  CHECK(text.find("# config_hash: ") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(paths[0].string() + ".tmp"));

  write_atomic(dir / "x.txt", "one");
  write_atomic(dir / "x.txt", "two");
  CHECK(slurp(dir / "x.txt") == "two");

  ResultTable broken{"broken", {"v"}, {{std::nan("")}}};
  RunOutput bad;
  bad.tables = {out.tables[0], broken};
  const auto dir2 = dir / "partial";
  CHECK_THROWS(write_outputs(bad, "control-sweep", cfg, dir2));
  CHECK_FALSE(std::filesystem::exists(dir2 / "control_sweep.csv"));
  std::filesystem::remove_all(dir);
}
