#pragma once

#include <nlohmann/json_fwd.hpp>

#include "sscb/field.hpp"
#include "sscb/rng.hpp"

namespace sscb {

/// One element of the bootstrap transformation group. Applied in the order
/// flips -> rotation -> cyclic shift -> shelving filter.
struct TransformSpec {
  bool flip_h = false;  // mirror columns
  bool flip_v = false;  // mirror rows
  int rot_quarter = 0;  // counter-clockwise quarter turns, 0..3
  int shift_dx = 0;     // cyclic column shift, -2..2
  int shift_dy = 0;     // cyclic row shift, -2..2
  double low_threshold = 0.0;   // radial frequency below which bins are attenuated
  double high_threshold = 0.0;  // radial frequency above which bins are attenuated
  double attenuation = 0.05;

  /// Throws ConfigError when the spec is not invertible or out of range.
  void validate() const;
  bool is_geometric_only(std::size_t n) const;

  bool operator==(const TransformSpec&) const = default;
};

/// The transform that leaves any n x n field unchanged.
TransformSpec identity_transform(std::size_t n);

/// Largest centered radial frequency on an n x n grid, sqrt(2) * n / 2.
double max_radial_frequency(std::size_t n);

inline constexpr double kReferenceGridSize = 300.0;

/// Threshold distributions are given at a 300-pixel reference grid and
/// rescaled linearly by n / 300.
struct TransformSamplerConfig {
  std::size_t n = 64;
  double low_mean = 200.0;
  double low_std = 50.0;
  double high_mean = 350.0;
  double high_std = 50.0;
  double attenuation = 0.05;
  bool geometric = true;
  bool shelving = true;

  void validate() const;
};

/// Consumes a fixed number of draws from rng regardless of which families are enabled.
TransformSpec sample_transform(const TransformSamplerConfig& cfg, Rng& rng);

RealField apply_transform(const TransformSpec& t, const RealField& x);
RealField invert_transform(const TransformSpec& t, const RealField& x);

void to_json(nlohmann::json& j, const TransformSpec& t);
void from_json(const nlohmann::json& j, TransformSpec& t);
void to_json(nlohmann::json& j, const TransformSamplerConfig& c);
void from_json(const nlohmann::json& j, TransformSamplerConfig& c);

}  // namespace sscb
