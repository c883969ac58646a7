#include "sscb/simdata.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <set>

#include "sscb/errors.hpp"
#include "sscb/fft.hpp"
#include "sscb/parallel.hpp"

namespace sscb {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kHeaderBytes = 8 + 4 + 4 + 1;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFU));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFU));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int b = 3; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return std::bit_cast<double>(v);
}

std::string encode_header(Shape shape, std::uint8_t dtype) {
  if (shape.rows == 0 || shape.cols == 0 || shape.rows > 0xFFFFFFFFU || shape.cols > 0xFFFFFFFFU) {
    throw FormatError("field dimensions do not fit the file format");
  }
  std::string out(kFieldMagic, sizeof(kFieldMagic));
  put_u32(out, static_cast<std::uint32_t>(shape.rows));
  put_u32(out, static_cast<std::uint32_t>(shape.cols));
  out.push_back(static_cast<char>(dtype));
  return out;
}

void write_bytes(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint64_t split_tag(Split split) {
  return split == Split::Calibration ? stream::kCalibrationSplit : stream::kTestSplit;
}

}  // namespace

void GrfConfig::validate() const {
  if (n < 2 || n % 2 != 0) throw InvalidGridError("GRF grid size must be even and >= 2");
  if (!std::isfinite(beta) || !(beta > 0.0)) throw ConfigError("GRF beta must be positive");
  if (!std::isfinite(k0) || k0 < 0.0) throw ConfigError("GRF k0 must be finite and >= 0");
}

RealField simulate_convergence(const GrfConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t n = cfg.n;
  std::normal_distribution<double> normal(0.0, 1.0);
  RealField white(n, n);
  for (std::size_t i = 0; i < n * n; ++i) white[i] = normal(rng);

  std::vector<Complex> spectrum = fft::forward(white);
  for (std::size_t r = 0; r < n; ++r) {
    const double ky = dft_frequency(r, n);
    for (std::size_t c = 0; c < n; ++c) {
      const double kx = dft_frequency(c, n);
      const double base = std::sqrt(kx * kx + ky * ky) + cfg.k0;
      spectrum[r * n + c] *= base > 0.0 ? std::pow(base, -0.5 * cfg.beta) : 0.0;
    }
  }
  RealField field = fft::inverse_real(spectrum, {n, n});

  const double mean = field.mean();
  double var = 0.0;
  for (double& v : field.values()) {
    v -= mean;
    var += v * v;
  }
  var /= static_cast<double>(field.size());
  if (!(var > 0.0)) throw Error("simulated field has zero variance");
  field *= 1.0 / std::sqrt(var);
  return field;
}

RealField simulate_convergence(const GrfConfig& cfg) {
  Rng rng = make_rng(cfg.seed, {stream::kTruth});
  return simulate_convergence(cfg, rng);
}

ComplexField make_observation(const RealField& kappa, const MassMappingOperator& op,
                              const GaussianNoiseModel& noise, Rng& rng) {
  return add_noise(op.forward(kappa), noise, rng);
}

void write_field(const fs::path& path, const RealField& field) {
  std::string bytes = encode_header(field.shape(), 0);
  bytes.reserve(kHeaderBytes + 8 * field.size());
  for (double v : field.values()) put_f64(bytes, v);
  write_bytes(path, bytes);
}

void write_field(const fs::path& path, const ComplexField& field) {
  std::string bytes = encode_header(field.shape(), 1);
  bytes.reserve(kHeaderBytes + 16 * field.size());
  for (const Complex& v : field.values()) {
    put_f64(bytes, v.real());
    put_f64(bytes, v.imag());
  }
  write_bytes(path, bytes);
}

std::variant<RealField, ComplexField> read_field(const fs::path& path) {
  const std::vector<unsigned char> bytes = read_bytes(path);
  const std::string where = " in '" + path.string() + "'";
  if (bytes.size() < kHeaderBytes) throw FormatError("truncated header" + where);
  if (std::memcmp(bytes.data(), kFieldMagic, sizeof(kFieldMagic)) != 0) {
    throw FormatError("bad magic" + where);
  }
  const std::uint64_t rows = get_u32(bytes.data() + 8);
  const std::uint64_t cols = get_u32(bytes.data() + 12);
  const std::uint8_t dtype = bytes[16];
  if (rows == 0 || cols == 0) throw FormatError("empty dimensions" + where);
  if (dtype > 1) throw FormatError("unknown dtype " + std::to_string(dtype) + where);
  if (rows * cols > kMaxElements) throw FormatError("dimension overflow" + where);
  const std::uint64_t elem = dtype == 0 ? 8 : 16;
  const std::uint64_t expected = kHeaderBytes + rows * cols * elem;
  if (bytes.size() != expected) {
    throw FormatError("payload is " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(expected) + where);
  }
  const unsigned char* p = bytes.data() + kHeaderBytes;
  if (dtype == 0) {
    std::vector<double> values(rows * cols);
    for (auto& v : values) {
      v = get_f64(p);
      p += 8;
    }
    return RealField(rows, cols, std::move(values));
  }
  std::vector<Complex> values(rows * cols);
  for (auto& v : values) {
    v = Complex(get_f64(p), get_f64(p + 8));
    p += 16;
  }
  return ComplexField(rows, cols, std::move(values));
}

RealField read_real_field(const fs::path& path) {
  auto field = read_field(path);
  if (auto* real = std::get_if<RealField>(&field)) return std::move(*real);
  throw FormatError("expected a real field in '" + path.string() + "'");
}

ComplexField read_complex_field(const fs::path& path) {
  auto field = read_field(path);
  if (auto* cplx = std::get_if<ComplexField>(&field)) return std::move(*cplx);
  throw FormatError("expected a complex field in '" + path.string() + "'");
}

std::string to_string(Split split) { return split == Split::Calibration ? "calibration" : "test"; }

void DatasetManifest::validate() const {
  grf().validate();
  GaussianNoiseModel{noise_sigma};
  if (n_calibration == 0 || n_test == 0) throw ConfigError("dataset splits must be non-empty");
  if (format_version != kFormatVersion) {
    throw ConfigError("unsupported dataset format_version " + std::to_string(format_version));
  }
}

void to_json(nlohmann::json& j, const DatasetManifest& m) {
  j = nlohmann::json{{"grid_n", m.grid_n},
                     {"noise_sigma", m.noise_sigma},
                     {"grf", {{"beta", m.grf_beta}, {"k0", m.grf_k0}}},
                     {"seed_root", m.seed_root},
                     {"n_calibration", m.n_calibration},
                     {"n_test", m.n_test},
                     {"format_version", m.format_version}};
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
  static const std::set<std::string> kKeys = {"grid_n", "noise_sigma", "grf",   "seed_root",
                                              "n_calibration", "n_test", "format_version"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!kKeys.count(it.key())) throw ConfigError("unknown manifest key '" + it.key() + "'");
  }
  m.grid_n = j.at("grid_n").get<std::size_t>();
  m.noise_sigma = j.at("noise_sigma").get<double>();
  m.grf_beta = j.at("grf").at("beta").get<double>();
  m.grf_k0 = j.at("grf").at("k0").get<double>();
  m.seed_root = j.at("seed_root").get<std::uint64_t>();
  m.n_calibration = j.at("n_calibration").get<std::size_t>();
  m.n_test = j.at("n_test").get<std::size_t>();
  m.format_version = j.at("format_version").get<int>();
}

Sample generate_sample(const DatasetManifest& manifest, Split split, std::size_t j) {
  const MassMappingOperator op(manifest.grid_n);
  const GaussianNoiseModel noise(manifest.noise_sigma);
  Rng truth_rng = make_rng(manifest.seed_root, {split_tag(split), j, stream::kTruth});
  Rng noise_rng = make_rng(manifest.seed_root, {split_tag(split), j, stream::kObservationNoise});
  Sample s;
  s.kappa = simulate_convergence(manifest.grf(), truth_rng);
  s.gamma = make_observation(s.kappa, op, noise, noise_rng);
  return s;
}

Dataset::Dataset(DatasetManifest manifest, fs::path dir)
    : manifest_(std::move(manifest)),
      dir_(std::move(dir)),
      ground_truth_reads_(std::make_shared<std::atomic<std::size_t>>(0)) {}

fs::path Dataset::manifest_path(const fs::path& dir) { return dir / "manifest.json"; }

namespace {
std::string sample_name(const char* kind, std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%05zu.sscb", kind, j);
  return buf;
}
}  // namespace

fs::path Dataset::kappa_path(Split split, std::size_t j) const {
  return dir_ / to_string(split) / sample_name("kappa", j);
}

fs::path Dataset::gamma_path(Split split, std::size_t j) const {
  return dir_ / to_string(split) / sample_name("gamma", j);
}

Dataset Dataset::generate(const DatasetManifest& manifest, const fs::path& dir,
                          std::size_t workers) {
  manifest.validate();
  Dataset ds(manifest, dir);
  std::error_code ec;
  for (Split split : {Split::Calibration, Split::Test}) {
    fs::create_directories(dir / to_string(split), ec);
    if (ec) throw IoError("cannot create '" + (dir / to_string(split)).string() + "': " + ec.message());
    parallel_for(ds.size(split), workers, [&](std::size_t j) {
      const Sample s = generate_sample(manifest, split, j);
      write_field(ds.kappa_path(split, j), s.kappa);
      write_field(ds.gamma_path(split, j), s.gamma);
    });
  }
  std::ofstream out(manifest_path(dir));
  if (!out) throw IoError("cannot write manifest in '" + dir.string() + "'");
  out << nlohmann::json(manifest).dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest in '" + dir.string() + "'");
  return ds;
}

Dataset Dataset::open(const fs::path& dir) {
  std::ifstream in(manifest_path(dir));
  if (!in) throw IoError("no dataset manifest in '" + dir.string() + "'");
  DatasetManifest manifest;
  try {
    manifest = nlohmann::json::parse(in).get<DatasetManifest>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("invalid manifest in '" + dir.string() + "': " + e.what());
  }
  manifest.validate();
  return Dataset(manifest, dir);
}

std::size_t Dataset::size(Split split) const {
  return split == Split::Calibration ? manifest_.n_calibration : manifest_.n_test;
}

void Dataset::check_index(Split split, std::size_t j) const {
  if (j >= size(split)) {
    throw ConfigError("sample " + std::to_string(j) + " out of range for " + to_string(split));
  }
}

ComplexField Dataset::observation(Split split, std::size_t j) const {
  check_index(split, j);
  ComplexField gamma = read_complex_field(gamma_path(split, j));
  if (gamma.rows() != manifest_.grid_n || gamma.cols() != manifest_.grid_n) {
    throw FormatError("observation shape does not match manifest grid");
  }
  return gamma;
}

RealField Dataset::ground_truth(Split split, std::size_t j) const {
  check_index(split, j);
  ++*ground_truth_reads_;
  RealField kappa = read_real_field(kappa_path(split, j));
  if (kappa.rows() != manifest_.grid_n || kappa.cols() != manifest_.grid_n) {
    throw FormatError("ground truth shape does not match manifest grid");
  }
  return kappa;
}

bool Dataset::verify_regeneration(std::size_t workers) const {
  std::atomic<bool> ok{true};
  for (Split split : {Split::Calibration, Split::Test}) {
    parallel_for(size(split), workers, [&](std::size_t j) {
      const Sample s = generate_sample(manifest_, split, j);
      if (!(read_real_field(kappa_path(split, j)) == s.kappa) ||
          !(read_complex_field(gamma_path(split, j)) == s.gamma)) {
        ok = false;
      }
    });
  }
  return ok;
}

}  // namespace sscb
