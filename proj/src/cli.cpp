#include "sscb/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>

#include "sscb/errors.hpp"
#include "sscb/parallel.hpp"

namespace sscb::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct MissingCalibration : Error {
  using Error::Error;
};

struct StrictInfeasible : Error {
  using Error::Error;
};

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create '" + path.parent_path().string() + "': " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

struct Common {
  std::string config_path;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
};

CliConfig resolve(const Common& c) {
  CliConfig cfg = load_config(c.config_path);
  if (c.seed) cfg.experiment.seed = *c.seed;
  cfg.workers = resolve_workers(c.workers ? *c.workers : cfg.workers);
  cfg.experiment.workers = cfg.workers;
  cfg.experiment.cache_dir = cfg.run_dir / "cache";
  return cfg;
}

int cmd_simulate(const Common& common, const std::optional<std::string>& out_dir, bool force,
                 std::ostream& out) {
  CliConfig cfg = resolve(common);
  const fs::path dir = out_dir ? fs::path(*out_dir) : cfg.resolved_data_dir();
  std::error_code ec;
  if (fs::exists(dir, ec) && !fs::is_empty(dir, ec)) {
    if (!force) {
      throw IoError("output directory '" + dir.string() + "' is not empty; pass --force to overwrite");
    }
    fs::remove(Dataset::manifest_path(dir), ec);
    fs::remove_all(dir / to_string(Split::Calibration), ec);
    fs::remove_all(dir / to_string(Split::Test), ec);
  }
  const Dataset ds = Dataset::generate(cfg.dataset, dir, cfg.workers);
  const DatasetManifest& m = ds.manifest();
  out << "simulated " << m.n_calibration << " calibration + " << m.n_test << " test samples, n="
      << m.grid_n << ", sigma=" << m.noise_sigma << ", seed=" << m.seed_root << '\n';
  out << "dataset: " << dir.string() << '\n';
  return kOk;
}

int cmd_calibrate(const Common& common, const std::optional<std::string>& mode,
                  const std::optional<double>& delta, const std::optional<std::string>& levels,
                  bool strict, std::ostream& out, std::ostream& err) {
  CliConfig cfg = resolve(common);
  if (mode) cfg.experiment.calibration_mode = calibration_mode_from_string(*mode);
  if (delta) cfg.experiment.delta = *delta;
  if (levels) cfg.experiment.levels = parse_levels(*levels);
  cfg.experiment.validate();

  const Dataset ds = Dataset::open(cfg.resolved_data_dir());
  out << "seed=" << cfg.experiment.seed << " mode=" << to_string(cfg.experiment.calibration_mode)
      << " bootstrap=" << to_string(cfg.experiment.bootstrap_mode)
      << " workers=" << cfg.workers << '\n';
  const auto t0 = std::chrono::steady_clock::now();
  const CalibrationRun run = run_calibration(cfg.experiment, ds);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::size_t infeasible = 0;
  for (const auto& l : run.levels) {
    if (!l.result) {
      ++infeasible;
      err << "warning: level " << fmt(l.level, "%.10g") << " infeasible: " << l.error << '\n';
    }
  }
  const bool oracle = cfg.experiment.calibration_mode == CalibrationMode::OracleGroundTruth;
  const fs::path csv = cfg.run_dir / (oracle ? "calibration_oracle.csv" : "calibration.csv");
  std::ostringstream body;
  write_calibration_csv(body, run.feasible());
  write_text(csv, body.str());
  out << "wrote " << csv.string() << " (" << run.levels.size() - infeasible << " levels, "
      << run.cache_hits << "/" << run.records.size() << " cached, " << fmt(secs, "%.1f") << " s)\n";
  if (strict && infeasible > 0) {
    throw StrictInfeasible(std::to_string(infeasible) + " level(s) infeasible under --strict");
  }
  return kOk;
}

int cmd_coverage(const Common& common, const std::optional<std::string>& calibration_path,
                 const std::optional<std::string>& out_path, std::ostream& out,
                 std::ostream& err) {
  CliConfig cfg = resolve(common);
  const fs::path cal = calibration_path ? fs::path(*calibration_path) : cfg.run_dir / "calibration.csv";
  std::ifstream in(cal);
  if (!in) throw MissingCalibration("no calibration file at '" + cal.string() + "'; run calibrate first");
  std::vector<CalibrationResult> calibration;
  try {
    calibration = read_calibration_csv(in);
  } catch (const FormatError& e) {
    throw MissingCalibration("unreadable calibration file '" + cal.string() + "': " + e.what());
  }
  if (calibration.empty()) throw MissingCalibration("calibration file '" + cal.string() + "' has no rows");

  const Dataset ds = Dataset::open(cfg.resolved_data_dir());
  out << "seed=" << cfg.experiment.seed << " bootstrap=" << to_string(cfg.experiment.bootstrap_mode)
      << " workers=" << cfg.workers << '\n';
  const CoverageReport report = run_coverage(cfg.experiment, ds, calibration);
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  const fs::path csv = out_path ? fs::path(*out_path) : cfg.run_dir / "coverage.csv";
  std::ostringstream body;
  write_coverage_csv(body, report);
  write_text(csv, body.str());
  out << "wrote " << csv.string() << " (" << report.rows.size() << " levels)\n";
  return kOk;
}

int cmd_report(const std::string& path, double threshold, std::ostream& out, std::ostream& err) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  CoverageReport report;
  try {
    report = read_coverage_csv(in);
  } catch (const FormatError& e) {
    err << "error: " << path << ": " << e.what() << '\n';
    return kSchemaMismatch;
  }
  if (report.rows.empty()) {
    err << "error: " << path << ": no coverage rows\n";
    return kSchemaMismatch;
  }
  for (const auto& r : report.rows) {
    for (double c : {r.coverage_conformal, r.coverage_equivariant_raw, r.coverage_parametric_raw}) {
      if (!(c >= 0.0 && c <= 1.0)) {
        err << "error: " << path << ": coverage outside [0, 1]\n";
        return kSchemaMismatch;
      }
    }
  }

  // Gaps against the finest spacing present.
  double step = 1.0;
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const double d = report.rows[i].nominal_level - report.rows[i - 1].nominal_level;
    if (d > 1e-9) step = std::min(step, d);
  }
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const double lo = report.rows[i - 1].nominal_level;
    const double hi = report.rows[i].nominal_level;
    for (double l = lo + step; l < hi - 0.5 * step; l += step) {
      err << "warning: level " << fmt(std::round(l * 1e10) / 1e10, "%.10g") << " missing\n";
    }
  }

  out << "level   lambda*   conformal  equi_raw  param_raw   |dev|\n";
  double max_dev = 0.0;
  for (const auto& r : report.rows) {
    const double dev = std::abs(r.coverage_conformal - r.nominal_level);
    max_dev = std::max(max_dev, dev);
    out << fmt(r.nominal_level, "%5.2f") << "  " << fmt(r.lambda_star, "%8.4f") << "  "
        << fmt(r.coverage_conformal, "%9.3f") << "  " << fmt(r.coverage_equivariant_raw, "%8.3f")
        << "  " << fmt(r.coverage_parametric_raw, "%9.3f") << "  " << fmt(dev, "%6.3f") << '\n';
  }
  out << "max |coverage_conformal - nominal| = " << fmt(max_dev) << " ("
      << (max_dev <= threshold ? "within" : "exceeds") << " threshold " << fmt(threshold, "%.2f")
      << ")\n";
  return kOk;
}

}  // namespace

CliConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON at " + line_column(text, e.byte) + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> allowed = {"run_dir", "data_dir", "dataset", "experiment", "workers"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in config");
  }
  CliConfig cfg;
  try {
    if (j.contains("run_dir")) cfg.run_dir = j["run_dir"].get<std::string>();
    if (j.contains("data_dir")) cfg.data_dir = fs::path(j["data_dir"].get<std::string>());
    if (j.contains("dataset")) {
      json merged = cfg.dataset;
      merged.merge_patch(j["dataset"]);
      cfg.dataset = merged.get<DatasetManifest>();
    }
    if (j.contains("experiment")) cfg.experiment = j["experiment"].get<ExperimentConfig>();
    if (j.contains("workers")) cfg.workers = j["workers"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const FormatError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.dataset.validate();
  cfg.experiment.validate();
  return cfg;
}

CliConfig load_config(const fs::path& path) {
  CliConfig cfg = parse_config(read_text(path));
  if (cfg.run_dir.is_relative()) cfg.run_dir = path.parent_path() / cfg.run_dir;
  if (cfg.data_dir && cfg.data_dir->is_relative()) cfg.data_dir = path.parent_path() / *cfg.data_dir;
  return cfg;
}

std::vector<double> parse_levels(const std::string& spec) {
  double v[3];
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? spec.find(':', start) : spec.size();
    if (end == std::string::npos) throw ConfigError("levels must look like start:stop:step");
    const std::string part = spec.substr(start, end - start);
    try {
      std::size_t used = 0;
      v[i] = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + part + "' in levels");
    }
    start = end + 1;
  }
  return level_range(v[0], v[1], v[2]);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-supervised conformal mass-mapping pipeline", "sscb"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config file")->required();
    sub->add_option("--workers", common.workers, "worker threads (default: SSCB_WORKERS or 1)");
    sub->add_option("--seed", common.seed, "experiment seed");
  };

  std::optional<std::string> sim_out;
  bool force = false;
  auto* simulate = app.add_subcommand("simulate", "generate the calibration and test splits");
  add_common(simulate);
  simulate->add_option("--out", sim_out, "dataset directory");
  simulate->add_flag("--force", force, "overwrite a non-empty directory");

  std::optional<std::string> mode;
  std::optional<double> delta;
  std::optional<std::string> levels;
  bool strict = false;
  auto* calibrate = app.add_subcommand("calibrate", "calibrate lambda per confidence level");
  add_common(calibrate);
  calibrate->add_option("--mode", mode, "sure or oracle");
  calibrate->add_option("--delta", delta, "RCPS failure probability");
  calibrate->add_option("--levels", levels, "start:stop:step");
  calibrate->add_flag("--strict", strict, "fail if any level is infeasible");

  std::optional<std::string> cal_path;
  std::optional<std::string> cov_out;
  auto* coverage = app.add_subcommand("coverage", "evaluate coverage on the test split");
  add_common(coverage);
  coverage->add_option("--calibration", cal_path, "calibration CSV (default run_dir/calibration.csv)");
  coverage->add_option("--out", cov_out, "coverage CSV (default run_dir/coverage.csv)");

  std::string report_path;
  double threshold = 0.10;
  auto* report = app.add_subcommand("report", "summarize a coverage CSV");
  report->add_option("coverage_csv", report_path, "coverage CSV")->required();
  report->add_option("--threshold", threshold, "deviation threshold")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(common, sim_out, force, out);
    if (calibrate->parsed()) return cmd_calibrate(common, mode, delta, levels, strict, out, err);
    if (coverage->parsed()) return cmd_coverage(common, cal_path, cov_out, out, err);
    return cmd_report(report_path, threshold, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const StrictInfeasible& e) {
    err << "error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const MissingCalibration& e) {
    err << "error: " << e.what() << '\n';
    return kMissingCalibration;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const FormatError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace sscb::cli
