#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sscb/harness.hpp"
#include "sscb/simdata.hpp"

namespace sscb::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kIoError = 3,
  kInfeasible = 4,
  kMissingCalibration = 5,
  kSchemaMismatch = 6,
};

// One JSON file: {"run_dir", "data_dir", "dataset": {...}, "experiment": {...}, "workers"}.
// data_dir defaults to run_dir/data; the artifact cache lives in run_dir/cache.
struct CliConfig {
  std::filesystem::path run_dir = ".";
  std::optional<std::filesystem::path> data_dir;
  DatasetManifest dataset;
  ExperimentConfig experiment;
  std::size_t workers = 0;  // 0 defers to SSCB_WORKERS

  std::filesystem::path resolved_data_dir() const { return data_dir ? *data_dir : run_dir / "data"; }
};

/// Parses a config document. Throws ConfigError with line/column on malformed
/// JSON and on unknown keys.
CliConfig parse_config(const std::string& text);
CliConfig load_config(const std::filesystem::path& path);

/// "start:stop:step".
std::vector<double> parse_levels(const std::string& spec);

/// Entry point shared by the executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sscb::cli
