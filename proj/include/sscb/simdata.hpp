#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <variant>

#include "sscb/field.hpp"
#include "sscb/operators.hpp"
#include "sscb/rng.hpp"

namespace sscb {

struct GrfConfig {
  std::size_t n = 64;
  double beta = 2.0;  // spectral index
  double k0 = 1.0;    // pivot offset in P(r) ~ (r + k0)^-beta
  std::uint64_t seed = 0;

  void validate() const;
};

/// Isotropic Gaussian random field with P(r) ~ (r + k0)^-beta over centered
/// radial frequency r, normalized to zero mean and unit variance.
RealField simulate_convergence(const GrfConfig& cfg, Rng& rng);
RealField simulate_convergence(const GrfConfig& cfg);

/// gamma = A kappa + noise.
ComplexField make_observation(const RealField& kappa, const MassMappingOperator& op,
                              const GaussianNoiseModel& noise, Rng& rng);

// Binary field files: "SSCBFLD1", u32 LE rows, u32 LE cols, u8 dtype
// (0 = float64, 1 = complex128 as interleaved re, im), row-major LE payload.
inline constexpr char kFieldMagic[8] = {'S', 'S', 'C', 'B', 'F', 'L', 'D', '1'};

void write_field(const std::filesystem::path& path, const RealField& field);
void write_field(const std::filesystem::path& path, const ComplexField& field);
std::variant<RealField, ComplexField> read_field(const std::filesystem::path& path);
RealField read_real_field(const std::filesystem::path& path);
ComplexField read_complex_field(const std::filesystem::path& path);

enum class Split { Calibration, Test };
std::string to_string(Split split);

inline constexpr int kFormatVersion = 1;

struct DatasetManifest {
  std::size_t grid_n = 64;
  double noise_sigma = 0.5;
  double grf_beta = 2.0;
  double grf_k0 = 1.0;
  std::uint64_t seed_root = 0;
  std::size_t n_calibration = 200;
  std::size_t n_test = 200;
  int format_version = kFormatVersion;

  void validate() const;
  GrfConfig grf() const { return {grid_n, grf_beta, grf_k0, seed_root}; }
  bool operator==(const DatasetManifest&) const = default;
};

void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

struct Sample {
  RealField kappa;
  ComplexField gamma;
};

/// Regenerates sample j of a split from the manifest seeds alone.
Sample generate_sample(const DatasetManifest& manifest, Split split, std::size_t j);

/// On-disk dataset. Observations and ground truth are separate accessors;
/// every ground-truth read is counted so callers can audit that a code path
/// never looked at it.
class Dataset {
 public:
  /// Writes every sample, then the manifest.
  static Dataset generate(const DatasetManifest& manifest, const std::filesystem::path& dir,
                          std::size_t workers = 1);
  static Dataset open(const std::filesystem::path& dir);

  const DatasetManifest& manifest() const { return manifest_; }
  const std::filesystem::path& directory() const { return dir_; }
  std::size_t size(Split split) const;

  ComplexField observation(Split split, std::size_t j) const;
  RealField ground_truth(Split split, std::size_t j) const;

  std::size_t ground_truth_reads() const { return ground_truth_reads_->load(); }
  void reset_ground_truth_reads() const { ground_truth_reads_->store(0); }

  /// True iff every stored field matches its regeneration bit for bit.
  bool verify_regeneration(std::size_t workers = 1) const;

  static std::filesystem::path manifest_path(const std::filesystem::path& dir);
  std::filesystem::path kappa_path(Split split, std::size_t j) const;
  std::filesystem::path gamma_path(Split split, std::size_t j) const;

 private:
  Dataset(DatasetManifest manifest, std::filesystem::path dir);
  void check_index(Split split, std::size_t j) const;

  DatasetManifest manifest_;
  std::filesystem::path dir_;
  std::shared_ptr<std::atomic<std::size_t>> ground_truth_reads_;
};

}  // namespace sscb
