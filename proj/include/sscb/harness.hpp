#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sscb/bootstrap.hpp"
#include "sscb/rcps.hpp"
#include "sscb/reconstruct.hpp"
#include "sscb/scores.hpp"
#include "sscb/simdata.hpp"
#include "sscb/transforms.hpp"

namespace sscb {

enum class CalibrationMode { SelfSupervisedSure, OracleGroundTruth };

std::string to_string(CalibrationMode mode);
CalibrationMode calibration_mode_from_string(const std::string& s);

/// Nominal coverage levels start, start + step, ..., stop (inclusive), rounded
/// to 1e-10 so that 1 - level is reproducible.
std::vector<double> level_range(double start, double stop, double step);

struct LambdaGridConfig {
  double min = 1e-2;
  double max = 1e2;
  std::size_t points = 10000;
};

struct ExperimentConfig {
  BootstrapMode bootstrap_mode = BootstrapMode::Equivariant;
  std::size_t n_bootstrap = 100;
  ScoreKind score_kind = ScoreKind::MeasurementSpace;
  SureConfig sure;
  double delta = 0.1;
  std::vector<double> levels = level_range(0.05, 0.95, 0.05);
  CalibrationMode calibration_mode = CalibrationMode::SelfSupervisedSure;
  std::uint64_t seed = 1234;
  double sigma_smooth = kDefaultSmoothingPixels;
  TransformSamplerConfig transforms;  // transforms.n is taken from the dataset
  LambdaGridConfig lambda_grid;
  std::size_t workers = 1;
  std::optional<std::filesystem::path> cache_dir;  // per-observation artifact cache

  void validate() const;
  /// Stable hash of everything that changes per-observation artifacts
  /// (not levels, delta or the lambda grid).
  std::string artifact_digest(const DatasetManifest& manifest, Split split) const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Rejects unknown keys. Missing keys keep their defaults.
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// Per-calibration-observation artifacts: the bootstrap score sample and the
/// score estimate (SURE, or the true score in oracle mode).
struct CalibrationRecord {
  std::vector<double> bootstrap_scores;
  double score_estimate = 0.0;
};

struct LevelCalibration {
  double level = 0.0;
  std::optional<CalibrationResult> result;
  std::string error;  // set when the level was infeasible
};

struct CalibrationRun {
  std::vector<CalibrationRecord> records;
  std::vector<LevelCalibration> levels;
  std::size_t cache_hits = 0;

  std::vector<CalibrationResult> feasible() const;
};

/// Bootstrap + score estimate per calibration observation (computed once and
/// reused across levels), then one RCPS calibration per level. In
/// self-supervised mode no ground truth is read.
CalibrationRun run_calibration(const ExperimentConfig& cfg, const Dataset& dataset);

/// Calibrates every level from existing records.
std::vector<LevelCalibration> calibrate_levels(const ExperimentConfig& cfg,
                                               std::span<const CalibrationRecord> records);

struct TestRecord {
  std::vector<double> equivariant_scores;
  std::vector<double> parametric_scores;
  double true_score = 0.0;
};

struct CoverageRow {
  double nominal_level = 0.0;
  double lambda_star = 0.0;
  double coverage_conformal = 0.0;
  double coverage_equivariant_raw = 0.0;
  double coverage_parametric_raw = 0.0;
  double ucb = 0.0;
  std::size_t n_cal = 0;
  std::size_t n_test = 0;
};

struct CoverageReport {
  std::vector<CoverageRow> rows;
  std::vector<std::string> warnings;
};

/// Coverage of the calibrated sets on the test split, alongside the raw
/// (lambda = 1) equivariant and parametric bootstrap sets.
CoverageReport run_coverage(const ExperimentConfig& cfg, const Dataset& dataset,
                            std::span<const CalibrationResult> calibration);

CoverageReport coverage_from_records(const ExperimentConfig& cfg,
                                     std::span<const TestRecord> records,
                                     std::span<const CalibrationResult> calibration);

std::vector<TestRecord> compute_test_records(const ExperimentConfig& cfg, const Dataset& dataset);

inline constexpr const char* kCalibrationCsvHeader = "alpha,delta,lambda_star,empirical_risk,ucb,n_cal";
inline constexpr const char* kCoverageCsvHeader =
    "nominal_level,lambda_star,coverage_conformal,coverage_equivariant_raw,"
    "coverage_parametric_raw,ucb,n_cal,n_test";

void write_calibration_csv(std::ostream& out, std::span<const CalibrationResult> rows);
std::vector<CalibrationResult> read_calibration_csv(std::istream& in);
void write_coverage_csv(std::ostream& out, const CoverageReport& report);
/// Throws FormatError on any schema mismatch.
CoverageReport read_coverage_csv(std::istream& in);

}  // namespace sscb
