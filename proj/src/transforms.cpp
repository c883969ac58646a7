#include "sscb/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <string>
#include <vector>

#include "sscb/errors.hpp"
#include "sscb/fft.hpp"

namespace sscb {

namespace {

// Fixed-budget draws: every call consumes exactly one engine output.
double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t count) { return rng() % count; }

// Box-Muller on two engine outputs, returns both normals.
std::pair<double, double> normal_pair(Rng& rng) {
  const double u1 = uniform_open(rng);
  const double u2 = uniform_open(rng);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

std::size_t wrap(long i, std::size_t n) {
  const long sn = static_cast<long>(n);
  return static_cast<std::size_t>(((i % sn) + sn) % sn);
}

RealField flip_columns(const RealField& x) {
  const std::size_t n = x.cols();
  RealField out(x.rows(), n);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < n; ++c) out(r, c) = x(r, n - 1 - c);
  return out;
}

RealField flip_rows(const RealField& x) {
  const std::size_t n = x.rows();
  RealField out(n, x.cols());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = x(n - 1 - r, c);
  return out;
}

// Counter-clockwise quarter turns: out(r, c) = in(c, n - 1 - r) per turn.
RealField rotate(const RealField& x, int quarters) {
  const std::size_t n = x.rows();
  RealField out = x;
  for (int q = 0; q < ((quarters % 4) + 4) % 4; ++q) {
    RealField next(n, n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) next(r, c) = out(c, n - 1 - r);
    out = std::move(next);
  }
  return out;
}

RealField cyclic_shift(const RealField& x, int dx, int dy) {
  if (dx == 0 && dy == 0) return x;
  RealField out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const std::size_t src_r = wrap(static_cast<long>(r) - dy, x.rows());
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out(r, c) = x(src_r, wrap(static_cast<long>(c) - dx, x.cols()));
    }
  }
  return out;
}

// Shelving multiplier over centered integer frequencies. Returns an empty
// vector when no bin is attenuated.
std::vector<double> shelving_multiplier(const TransformSpec& t, std::size_t n) {
  const double tol_low = 1e-9 * std::max(1.0, t.low_threshold);
  const double tol_high = 1e-9 * std::max(1.0, t.high_threshold);
  std::vector<double> g(n * n, 1.0);
  bool any = false;
  for (std::size_t r = 0; r < n; ++r) {
    const double ky = dft_frequency(r, n);
    for (std::size_t c = 0; c < n; ++c) {
      const double kx = dft_frequency(c, n);
      const double radius = std::sqrt(kx * kx + ky * ky);
      if (radius < t.low_threshold - tol_low || radius > t.high_threshold + tol_high) {
        g[r * n + c] = t.attenuation;
        any = true;
      }
    }
  }
  if (!any) g.clear();
  return g;
}

RealField apply_multiplier(const RealField& x, const std::vector<double>& g, bool divide) {
  std::vector<Complex> spectrum = fft::forward(x);
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    spectrum[i] = divide ? spectrum[i] / g[i] : spectrum[i] * g[i];
  }
  return fft::inverse_real(spectrum, x.shape());
}

void require_square(const RealField& x) {
  if (x.rows() != x.cols() || x.rows() == 0) {
    throw DimensionMismatchError("transforms need a non-empty square field, got " +
                                 std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
}

}  // namespace

double max_radial_frequency(std::size_t n) { return std::sqrt(2.0) * static_cast<double>(n / 2); }

void TransformSpec::validate() const {
  if (rot_quarter < 0 || rot_quarter > 3) throw ConfigError("rot_quarter must be in 0..3");
  if (shift_dx < -2 || shift_dx > 2 || shift_dy < -2 || shift_dy > 2) {
    throw ConfigError("cyclic shifts must be in [-2, 2]");
  }
  if (!(low_threshold >= 0.0) || !(high_threshold >= 0.0) || !std::isfinite(low_threshold) ||
      !std::isfinite(high_threshold)) {
    throw ConfigError("shelving thresholds must be finite and non-negative");
  }
  if (low_threshold > high_threshold) throw ConfigError("low threshold exceeds high threshold");
  if (!(attenuation > 0.0 && attenuation <= 1.0)) {
    throw ConfigError("attenuation must be in (0, 1] for the transform to be invertible");
  }
}

bool TransformSpec::is_geometric_only(std::size_t n) const {
  return attenuation == 1.0 || shelving_multiplier(*this, n).empty();
}

TransformSpec identity_transform(std::size_t n) {
  TransformSpec t;
  t.low_threshold = 0.0;
  t.high_threshold = max_radial_frequency(n);
  return t;
}

void TransformSamplerConfig::validate() const {
  if (n == 0) throw ConfigError("sampler grid size must be positive");
  if (low_mean < 0.0 || high_mean < 0.0 || low_std < 0.0 || high_std < 0.0) {
    throw ConfigError("threshold means and standard deviations must be non-negative");
  }
  if (!(attenuation > 0.0 && attenuation <= 1.0)) throw ConfigError("attenuation must be in (0, 1]");
}

TransformSpec sample_transform(const TransformSamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  // Draw everything unconditionally so the stream position after a sample
  // does not depend on which families are enabled.
  const bool flip_h = uniform_index(rng, 2) == 1;
  const bool flip_v = uniform_index(rng, 2) == 1;
  const int rot = static_cast<int>(uniform_index(rng, 4));
  const int dx = static_cast<int>(uniform_index(rng, 5)) - 2;
  const int dy = static_cast<int>(uniform_index(rng, 5)) - 2;
  const auto [z_low, z_high] = normal_pair(rng);

  const double scale = static_cast<double>(cfg.n) / kReferenceGridSize;
  const double r_max = max_radial_frequency(cfg.n);
  double low = std::clamp((cfg.low_mean + cfg.low_std * z_low) * scale, 0.0, r_max);
  double high = std::clamp((cfg.high_mean + cfg.high_std * z_high) * scale, 0.0, r_max);
  if (low > high) std::swap(low, high);

  TransformSpec t = identity_transform(cfg.n);
  t.attenuation = cfg.attenuation;
  if (cfg.geometric) {
    t.flip_h = flip_h;
    t.flip_v = flip_v;
    t.rot_quarter = rot;
    t.shift_dx = dx;
    t.shift_dy = dy;
  }
  if (cfg.shelving) {
    t.low_threshold = low;
    t.high_threshold = high;
  }
  return t;
}

RealField apply_transform(const TransformSpec& t, const RealField& x) {
  t.validate();
  require_square(x);
  RealField out = x;
  if (t.flip_h) out = flip_columns(out);
  if (t.flip_v) out = flip_rows(out);
  if (t.rot_quarter != 0) out = rotate(out, t.rot_quarter);
  out = cyclic_shift(out, t.shift_dx, t.shift_dy);
  if (auto g = shelving_multiplier(t, x.rows()); !g.empty()) out = apply_multiplier(out, g, false);
  return out;
}

RealField invert_transform(const TransformSpec& t, const RealField& x) {
  t.validate();
  require_square(x);
  RealField out = x;
  if (auto g = shelving_multiplier(t, x.rows()); !g.empty()) out = apply_multiplier(out, g, true);
  out = cyclic_shift(out, -t.shift_dx, -t.shift_dy);
  if (t.rot_quarter != 0) out = rotate(out, 4 - t.rot_quarter);
  if (t.flip_v) out = flip_rows(out);
  if (t.flip_h) out = flip_columns(out);
  return out;
}

void to_json(nlohmann::json& j, const TransformSpec& t) {
  j = nlohmann::json{{"flip_h", t.flip_h},
                     {"flip_v", t.flip_v},
                     {"rot_quarter", t.rot_quarter},
                     {"shift", {t.shift_dx, t.shift_dy}},
                     {"low_threshold", t.low_threshold},
                     {"high_threshold", t.high_threshold},
                     {"attenuation", t.attenuation}};
}

void from_json(const nlohmann::json& j, TransformSpec& t) {
  t.flip_h = j.at("flip_h").get<bool>();
  t.flip_v = j.at("flip_v").get<bool>();
  t.rot_quarter = j.at("rot_quarter").get<int>();
  t.shift_dx = j.at("shift").at(0).get<int>();
  t.shift_dy = j.at("shift").at(1).get<int>();
  t.low_threshold = j.at("low_threshold").get<double>();
  t.high_threshold = j.at("high_threshold").get<double>();
  t.attenuation = j.at("attenuation").get<double>();
  t.validate();
}

void to_json(nlohmann::json& j, const TransformSamplerConfig& c) {
  j = nlohmann::json{{"low_mean", c.low_mean},       {"low_std", c.low_std},
                     {"high_mean", c.high_mean},     {"high_std", c.high_std},
                     {"attenuation", c.attenuation}, {"geometric", c.geometric},
                     {"shelving", c.shelving}};
}

void from_json(const nlohmann::json& j, TransformSamplerConfig& c) {
  static const char* kKeys[] = {"low_mean",    "low_std",   "high_mean", "high_std",
                                "attenuation", "geometric", "shelving"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(std::begin(kKeys), std::end(kKeys),
                     [&](const char* k) { return it.key() == k; }) == std::end(kKeys)) {
      throw ConfigError("unknown transform key '" + it.key() + "'");
    }
  }
  c.low_mean = j.value("low_mean", c.low_mean);
  c.low_std = j.value("low_std", c.low_std);
  c.high_mean = j.value("high_mean", c.high_mean);
  c.high_std = j.value("high_std", c.high_std);
  c.attenuation = j.value("attenuation", c.attenuation);
  c.geometric = j.value("geometric", c.geometric);
  c.shelving = j.value("shelving", c.shelving);
  c.validate();
}

}  // namespace sscb
