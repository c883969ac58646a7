#include "sscb/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>

#include "sscb/errors.hpp"
#include "sscb/parallel.hpp"

namespace sscb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t split_tag(Split split) {
  return split == Split::Calibration ? stream::kCalibrationSplit : stream::kTestSplit;
}

std::uint64_t bootstrap_seed(const ExperimentConfig& cfg, Split split, std::size_t j) {
  // Shared by both bootstrap engines so their noise draws line up.
  return derive_seed(cfg.seed, {split_tag(split), j, stream::kNoise});
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::optional<json> load_cache(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    return std::nullopt;  // a torn write is treated as a miss
  }
}

void store_cache(const fs::path& path, const json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write cache file '" + tmp.string() + "'");
    out << j.dump();
    if (!out) throw IoError("failed writing cache file '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move cache file into place: " + ec.message());
}

std::optional<fs::path> cache_file(const ExperimentConfig& cfg, const DatasetManifest& manifest,
                                   Split split, std::size_t j) {
  if (!cfg.cache_dir) return std::nullopt;
  char name[32];
  std::snprintf(name, sizeof(name), "%05zu.json", j);
  return *cfg.cache_dir / cfg.artifact_digest(manifest, split) / name;
}

struct Pipeline {
  std::shared_ptr<const MassMappingOperator> op;
  KaiserSquires reconstructor;
  GaussianNoiseModel noise;
  TransformSamplerConfig sampler;

  Pipeline(const ExperimentConfig& cfg, const DatasetManifest& manifest)
      : op(std::make_shared<const MassMappingOperator>(manifest.grid_n)),
        reconstructor(op, KaiserSquiresConfig{cfg.sigma_smooth}),
        noise(manifest.noise_sigma),
        sampler(cfg.transforms) {
    sampler.n = manifest.grid_n;
  }

  BootstrapSummary bootstrap(const ExperimentConfig& cfg, const Measurement& y, BootstrapMode mode,
                             std::uint64_t seed) const {
    BootstrapConfig bc;
    bc.n_samples = cfg.n_bootstrap;
    bc.mode = mode;
    bc.seed = seed;
    bc.score_kind = cfg.score_kind;
    return run_bootstrap(y, reconstructor, *op, noise, sampler, bc);
  }
};

const CalibrationResult* find_level(std::span<const CalibrationResult> calibration, double level) {
  for (const auto& c : calibration) {
    if (std::abs((1.0 - c.alpha) - level) < 1e-9) return &c;
  }
  return nullptr;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("line " + std::to_string(line_no) + ": '" + s + "' is not a number");
  }
}

std::size_t parse_count(const std::string& s, std::size_t line_no) {
  const double v = parse_number(s, line_no);
  if (!(v >= 0.0) || v != std::floor(v)) {
    throw FormatError("line " + std::to_string(line_no) + ": '" + s + "' is not a count");
  }
  return static_cast<std::size_t>(v);
}

std::vector<std::vector<std::string>> read_csv_rows(std::istream& in, const std::string& header,
                                                    std::size_t columns) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw FormatError("unexpected CSV header '" + line + "'");
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != columns) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(columns) + " columns, got " + std::to_string(cells.size()));
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

std::string to_string(CalibrationMode mode) {
  return mode == CalibrationMode::SelfSupervisedSure ? "self_supervised_sure"
                                                     : "oracle_ground_truth";
}

CalibrationMode calibration_mode_from_string(const std::string& s) {
  if (s == "self_supervised_sure" || s == "sure") return CalibrationMode::SelfSupervisedSure;
  if (s == "oracle_ground_truth" || s == "oracle") return CalibrationMode::OracleGroundTruth;
  throw ConfigError("unknown calibration mode '" + s + "'");
}

std::vector<double> level_range(double start, double stop, double step) {
  if (!(step > 0.0) || !(start > 0.0) || !(stop < 1.0) || start > stop) {
    throw ConfigError("levels need 0 < start <= stop < 1 and step > 0");
  }
  std::vector<double> levels;
  for (std::size_t i = 0;; ++i) {
    const double v = std::round((start + static_cast<double>(i) * step) * 1e10) / 1e10;
    if (v > stop + 1e-9) break;
    levels.push_back(v);
  }
  return levels;
}

void ExperimentConfig::validate() const {
  if (n_bootstrap == 0) throw ConfigError("n_bootstrap must be positive");
  sure.validate();
  transforms.validate();
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (levels.empty()) throw ConfigError("at least one confidence level is required");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0)) throw ConfigError("levels must lie in (0, 1)");
    if (i > 0 && !(levels[i] > levels[i - 1])) {
      throw ConfigError("levels must be strictly increasing");
    }
  }
  if (!(sigma_smooth >= 0.0) || !std::isfinite(sigma_smooth)) {
    throw ConfigError("sigma_smooth must be finite and non-negative");
  }
  log_lambda_grid(lambda_grid.min, lambda_grid.max, lambda_grid.points);
}

std::string ExperimentConfig::artifact_digest(const DatasetManifest& manifest, Split split) const {
  json j;
  j["manifest"] = manifest;
  j["split"] = to_string(split);
  j["seed"] = seed;
  j["n_bootstrap"] = n_bootstrap;
  j["score_kind"] = to_string(score_kind);
  j["sigma_smooth"] = sigma_smooth;
  j["transforms"] = transforms;
  if (split == Split::Calibration) {
    j["bootstrap_mode"] = to_string(bootstrap_mode);
    j["calibration_mode"] = to_string(calibration_mode);
    if (calibration_mode == CalibrationMode::SelfSupervisedSure) {
      j["sure"] = {{"n_probes", sure.n_probes},
                   {"jacobian_mode", to_string(sure.jacobian_mode)},
                   {"fd_step", sure.fd_step}};
    }
  }
  return (split == Split::Calibration ? "cal-" : "test-") + fnv1a_hex(j.dump());
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"bootstrap_mode", to_string(c.bootstrap_mode)},
           {"n_bootstrap", c.n_bootstrap},
           {"score_kind", to_string(c.score_kind)},
           {"sure",
            {{"n_probes", c.sure.n_probes},
             {"jacobian_mode", to_string(c.sure.jacobian_mode)},
             {"fd_step", c.sure.fd_step}}},
           {"delta", c.delta},
           {"levels", c.levels},
           {"calibration_mode", to_string(c.calibration_mode)},
           {"seed", c.seed},
           {"sigma_smooth", c.sigma_smooth},
           {"transforms", c.transforms},
           {"lambda_grid",
            {{"min", c.lambda_grid.min}, {"max", c.lambda_grid.max}, {"points", c.lambda_grid.points}}}};
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

void from_json(const json& j, ExperimentConfig& c) {
  reject_unknown(j,
                 {"bootstrap_mode", "n_bootstrap", "score_kind", "sure", "delta", "levels",
                  "calibration_mode", "seed", "sigma_smooth", "transforms", "lambda_grid"},
                 "experiment");
  try {
    if (j.contains("bootstrap_mode")) {
      c.bootstrap_mode = bootstrap_mode_from_string(j["bootstrap_mode"].get<std::string>());
    }
    c.n_bootstrap = j.value("n_bootstrap", c.n_bootstrap);
    if (j.contains("score_kind")) c.score_kind = score_kind_from_string(j["score_kind"].get<std::string>());
    if (j.contains("sure")) {
      const json& s = j["sure"];
      reject_unknown(s, {"n_probes", "jacobian_mode", "fd_step"}, "sure");
      c.sure.n_probes = s.value("n_probes", c.sure.n_probes);
      if (s.contains("jacobian_mode")) {
        c.sure.jacobian_mode = jacobian_mode_from_string(s["jacobian_mode"].get<std::string>());
      }
      c.sure.fd_step = s.value("fd_step", c.sure.fd_step);
    }
    c.delta = j.value("delta", c.delta);
    if (j.contains("levels")) {
      const json& l = j["levels"];
      if (l.is_array()) {
        c.levels = l.get<std::vector<double>>();
      } else {
        reject_unknown(l, {"start", "stop", "step"}, "levels");
        c.levels = level_range(l.at("start").get<double>(), l.at("stop").get<double>(),
                               l.at("step").get<double>());
      }
    }
    if (j.contains("calibration_mode")) {
      c.calibration_mode = calibration_mode_from_string(j["calibration_mode"].get<std::string>());
    }
    c.seed = j.value("seed", c.seed);
    c.sigma_smooth = j.value("sigma_smooth", c.sigma_smooth);
    if (j.contains("transforms")) {
      const std::size_t n = c.transforms.n;
      c.transforms = j["transforms"].get<TransformSamplerConfig>();
      c.transforms.n = n;
    }
    if (j.contains("lambda_grid")) {
      const json& g = j["lambda_grid"];
      reject_unknown(g, {"min", "max", "points"}, "lambda_grid");
      c.lambda_grid.min = g.value("min", c.lambda_grid.min);
      c.lambda_grid.max = g.value("max", c.lambda_grid.max);
      c.lambda_grid.points = g.value("points", c.lambda_grid.points);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
}

std::vector<CalibrationResult> CalibrationRun::feasible() const {
  std::vector<CalibrationResult> out;
  for (const auto& l : levels) {
    if (l.result) out.push_back(*l.result);
  }
  return out;
}

std::vector<LevelCalibration> calibrate_levels(const ExperimentConfig& cfg,
                                               std::span<const CalibrationRecord> records) {
  std::vector<double> estimates;
  estimates.reserve(records.size());
  for (const auto& r : records) estimates.push_back(r.score_estimate);
  const std::vector<double> grid =
      log_lambda_grid(cfg.lambda_grid.min, cfg.lambda_grid.max, cfg.lambda_grid.points);

  std::vector<LevelCalibration> out(cfg.levels.size());
  parallel_for(cfg.levels.size(), cfg.workers, [&](std::size_t l) {
    const double level = cfg.levels[l];
    out[l].level = level;
    std::vector<double> quantiles;
    quantiles.reserve(records.size());
    for (const auto& r : records) quantiles.push_back(bootstrap_quantile(r.bootstrap_scores, 1.0 - level));
    RcpsConfig rc;
    rc.alpha = 1.0 - level;
    rc.delta = cfg.delta;
    rc.lambda_grid = grid;
    try {
      out[l].result = calibrate_lambda(estimates, quantiles, rc);
    } catch (const CalibrationInfeasibleError& e) {
      out[l].error = e.what();
    }
  });
  return out;
}

CalibrationRun run_calibration(const ExperimentConfig& cfg, const Dataset& dataset) {
  cfg.validate();
  const DatasetManifest& manifest = dataset.manifest();
  const Pipeline pipeline(cfg, manifest);
  const std::size_t n = dataset.size(Split::Calibration);

  CalibrationRun run;
  run.records.resize(n);
  std::atomic<std::size_t> hits{0};
  if (auto probe = cache_file(cfg, manifest, Split::Calibration, 0)) {
    std::error_code ec;
    fs::create_directories(probe->parent_path(), ec);
    if (ec) throw IoError("cannot create cache directory: " + ec.message());
  }

  parallel_for(n, cfg.workers, [&](std::size_t j) {
    const auto path = cache_file(cfg, manifest, Split::Calibration, j);
    if (path) {
      if (auto cached = load_cache(*path)) {
        run.records[j].bootstrap_scores = cached->at("bootstrap_scores").get<std::vector<double>>();
        run.records[j].score_estimate = cached->at("score_estimate").get<double>();
        ++hits;
        return;
      }
    }
    const Measurement y = dataset.observation(Split::Calibration, j).to_components();
    BootstrapSummary summary =
        pipeline.bootstrap(cfg, y, cfg.bootstrap_mode, bootstrap_seed(cfg, Split::Calibration, j));
    CalibrationRecord& record = run.records[j];
    if (cfg.calibration_mode == CalibrationMode::SelfSupervisedSure) {
      Rng rng = make_rng(cfg.seed, {stream::kCalibrationSplit, j, stream::kSure});
      record.score_estimate = sure(cfg.score_kind, y, pipeline.reconstructor, *pipeline.op,
                                   pipeline.noise, cfg.sure, rng);
    } else {
      const RealField truth = dataset.ground_truth(Split::Calibration, j);
      record.score_estimate = score(cfg.score_kind, truth, summary.estimate, *pipeline.op);
    }
    record.bootstrap_scores = std::move(summary.scores);
    if (path) {
      store_cache(*path, json{{"bootstrap_scores", record.bootstrap_scores},
                              {"score_estimate", record.score_estimate}});
    }
  });
  run.cache_hits = hits;
  run.levels = calibrate_levels(cfg, run.records);
  return run;
}

std::vector<TestRecord> compute_test_records(const ExperimentConfig& cfg, const Dataset& dataset) {
  cfg.validate();
  const DatasetManifest& manifest = dataset.manifest();
  const Pipeline pipeline(cfg, manifest);
  const std::size_t n = dataset.size(Split::Test);
  std::vector<TestRecord> records(n);
  if (auto probe = cache_file(cfg, manifest, Split::Test, 0)) {
    std::error_code ec;
    fs::create_directories(probe->parent_path(), ec);
    if (ec) throw IoError("cannot create cache directory: " + ec.message());
  }

  parallel_for(n, cfg.workers, [&](std::size_t j) {
    const auto path = cache_file(cfg, manifest, Split::Test, j);
    if (path) {
      if (auto cached = load_cache(*path)) {
        records[j].equivariant_scores = cached->at("equivariant_scores").get<std::vector<double>>();
        records[j].parametric_scores = cached->at("parametric_scores").get<std::vector<double>>();
        records[j].true_score = cached->at("true_score").get<double>();
        return;
      }
    }
    const Measurement y = dataset.observation(Split::Test, j).to_components();
    const std::uint64_t seed = bootstrap_seed(cfg, Split::Test, j);
    BootstrapSummary equi = pipeline.bootstrap(cfg, y, BootstrapMode::Equivariant, seed);
    BootstrapSummary para = pipeline.bootstrap(cfg, y, BootstrapMode::Parametric, seed);
    const RealField truth = dataset.ground_truth(Split::Test, j);
    TestRecord& record = records[j];
    record.true_score = score(cfg.score_kind, truth, equi.estimate, *pipeline.op);
    record.equivariant_scores = std::move(equi.scores);
    record.parametric_scores = std::move(para.scores);
    if (path) {
      store_cache(*path, json{{"equivariant_scores", record.equivariant_scores},
                              {"parametric_scores", record.parametric_scores},
                              {"true_score", record.true_score}});
    }
  });
  return records;
}

CoverageReport coverage_from_records(const ExperimentConfig& cfg,
                                     std::span<const TestRecord> records,
                                     std::span<const CalibrationResult> calibration) {
  CoverageReport report;
  std::vector<double> truth;
  truth.reserve(records.size());
  for (const auto& r : records) truth.push_back(r.true_score);

  for (double level : cfg.levels) {
    const CalibrationResult* cal = find_level(calibration, level);
    if (cal == nullptr) {
      report.warnings.push_back("no calibration for level " + format_double(level, 10) +
                                "; level skipped");
      continue;
    }
    const double alpha = 1.0 - level;
    std::vector<double> q_equi, q_para;
    q_equi.reserve(records.size());
    q_para.reserve(records.size());
    for (const auto& r : records) {
      q_equi.push_back(bootstrap_quantile(r.equivariant_scores, alpha));
      q_para.push_back(bootstrap_quantile(r.parametric_scores, alpha));
    }
    const auto& q_conf = cfg.bootstrap_mode == BootstrapMode::Equivariant ? q_equi : q_para;
    CoverageRow row;
    row.nominal_level = level;
    row.lambda_star = cal->lambda_star;
    row.coverage_conformal = evaluate_coverage(truth, q_conf, cal->lambda_star);
    row.coverage_equivariant_raw = evaluate_coverage(truth, q_equi, 1.0);
    row.coverage_parametric_raw = evaluate_coverage(truth, q_para, 1.0);
    row.ucb = cal->ucb;
    row.n_cal = cal->n_calibration;
    row.n_test = records.size();
    report.rows.push_back(row);
  }
  return report;
}

CoverageReport run_coverage(const ExperimentConfig& cfg, const Dataset& dataset,
                            std::span<const CalibrationResult> calibration) {
  const std::vector<TestRecord> records = compute_test_records(cfg, dataset);
  return coverage_from_records(cfg, records, calibration);
}

void write_calibration_csv(std::ostream& out, std::span<const CalibrationResult> rows) {
  out << kCalibrationCsvHeader << '\n';
  for (const auto& r : rows) {
    out << format_double(r.alpha, 10) << ',' << format_double(r.delta, 10) << ','
        << format_double(r.lambda_star, 17) << ',' << format_double(r.empirical_risk, 17) << ','
        << format_double(r.ucb, 17) << ',' << r.n_calibration << '\n';
  }
}

std::vector<CalibrationResult> read_calibration_csv(std::istream& in) {
  std::vector<CalibrationResult> out;
  std::size_t line_no = 1;
  for (const auto& cells : read_csv_rows(in, kCalibrationCsvHeader, 6)) {
    ++line_no;
    CalibrationResult r;
    r.alpha = parse_number(cells[0], line_no);
    r.delta = parse_number(cells[1], line_no);
    r.lambda_star = parse_number(cells[2], line_no);
    r.empirical_risk = parse_number(cells[3], line_no);
    r.ucb = parse_number(cells[4], line_no);
    r.n_calibration = parse_count(cells[5], line_no);
    out.push_back(r);
  }
  return out;
}

void write_coverage_csv(std::ostream& out, const CoverageReport& report) {
  out << kCoverageCsvHeader << '\n';
  for (const auto& r : report.rows) {
    out << format_double(r.nominal_level, 10) << ',' << format_double(r.lambda_star, 17) << ','
        << format_fixed(r.coverage_conformal) << ',' << format_fixed(r.coverage_equivariant_raw)
        << ',' << format_fixed(r.coverage_parametric_raw) << ',' << format_double(r.ucb, 17) << ','
        << r.n_cal << ',' << r.n_test << '\n';
  }
}

CoverageReport read_coverage_csv(std::istream& in) {
  CoverageReport report;
  std::size_t line_no = 1;
  for (const auto& cells : read_csv_rows(in, kCoverageCsvHeader, 8)) {
    ++line_no;
    CoverageRow r;
    r.nominal_level = parse_number(cells[0], line_no);
    r.lambda_star = parse_number(cells[1], line_no);
    r.coverage_conformal = parse_number(cells[2], line_no);
    r.coverage_equivariant_raw = parse_number(cells[3], line_no);
    r.coverage_parametric_raw = parse_number(cells[4], line_no);
    r.ucb = parse_number(cells[5], line_no);
    r.n_cal = parse_count(cells[6], line_no);
    r.n_test = parse_count(cells[7], line_no);
    report.rows.push_back(r);
  }
  return report;
}

}  // namespace sscb
