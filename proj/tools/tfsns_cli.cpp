#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "tfsns/experiments.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read config file " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral-Galerkin lab for time-fractional stochastic Navier-Stokes models"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int workers = 0;
  bool override_validation = false;

  const std::map<std::string, std::string> help = {
      {"validate", "report the model exponent conditions"},
      {"mlfun", "Mittag-Leffler values against the Mainardi oracle"},
      {"bounds", "decay probe of the solution operators"},
      {"bdg", "moment inequality for stochastic integrals"},
      {"solve", "mild solutions by Picard iteration"},
      {"control-sweep", "terminal error of the feedback control over lambda"},
  };
  for (const auto& name : tfsns::cli::subcommands()) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--seed", seed, "overrides run.seed");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--workers", workers, "overrides run.workers");
    sub->add_flag("--override-validation", override_validation,
                  "run even if a model condition fails");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string name = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommands().front();

  try {
    auto cfg = tfsns::cli::parse_config(read_file(config_path));
    if (sub->count("--seed")) tfsns::cli::set_seed(cfg, seed);
    if (workers > 0) cfg.workers = workers;
    const auto out = tfsns::cli::run_subcommand(name, cfg, override_validation);
    for (const auto& line : out.report) std::cout << line << "\n";
    for (const auto& p : tfsns::cli::write_outputs(out, name, cfg, out_dir)) {
      std::cout << "wrote " << p.string() << "\n";
    }
    std::cout << "checks: " << (out.pass ? "pass" : "fail") << "\n";
    return out.pass ? 0 : 1;
  } catch (const tfsns::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
