#pragma once

// Subcommand runners shared by the CLI, the acceptance suite and the Python
// module. Each run produces one or more result tables plus a pass flag.

#include <filesystem>
#include <string>
#include <vector>

#include "tfsns/config.hpp"

namespace tfsns::cli {

struct ResultTable {
  std::string name;  ///< file stem
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct RunOutput {
  std::vector<ResultTable> tables;
  std::vector<std::string> report;  ///< human-readable summary lines
  bool pass = false;
};

const std::vector<std::string>& subcommands();

RunOutput run_subcommand(const std::string& subcommand,
                         const ExperimentConfig& cfg,
                         bool override_validation);

/// CSV text with the `#` metadata header.
std::string render_table(const ResultTable& table, const std::string& subcommand,
                         const ExperimentConfig& cfg, bool pass);

/// Rebuilds the configuration from the `# config:` lines of a rendered table.
ExperimentConfig config_from_header(const std::string& csv);

/// Writes via a temporary file and rename, so readers never see partial files.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Writes every table as <out>/<table name>.csv and returns the paths.
std::vector<std::filesystem::path> write_outputs(
    const RunOutput& out, const std::string& subcommand,
    const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Overrides run.seed and keeps the canonical lines consistent.
void set_seed(ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace tfsns::cli
