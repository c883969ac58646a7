#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "sscb/errors.hpp"
#include "sscb/operators.hpp"
#include "sscb/transforms.hpp"
#include "support.hpp"

using namespace sscb;
using namespace sscb::testing;

TEST_CASE("identity spec leaves fields unchanged") {
  Rng rng(21);
  const RealField x = random_field(16, 16, rng);
  const TransformSpec id = identity_transform(16);
  CHECK(id.low_threshold == 0.0);
  CHECK(id.high_threshold == doctest::Approx(std::sqrt(2.0) * 8.0));
  CHECK(max_abs_diff(apply_transform(id, x).values(), x.values()) < 1e-12);
  CHECK(max_abs_diff(invert_transform(id, x).values(), x.values()) < 1e-12);
}

TEST_CASE("half turn equals both flips") {
  Rng rng(22);
  const RealField x = random_field(8, 8, rng);
  TransformSpec rot = identity_transform(8);
  rot.rot_quarter = 2;
  TransformSpec flips = identity_transform(8);
  flips.flip_h = flips.flip_v = true;
  CHECK(max_abs_diff(apply_transform(rot, x).values(), apply_transform(flips, x).values()) < 1e-12);
}

TEST_CASE("geometric conventions") {
  RealField x(4, 4);
  for (std::size_t i = 0; i < 16; ++i) x[i] = static_cast<double>(i);
  TransformSpec t = identity_transform(4);
  t.rot_quarter = 1;
  const RealField r = apply_transform(t, x);
  for (std::size_t row = 0; row < 4; ++row)
    for (std::size_t col = 0; col < 4; ++col) CHECK(r(row, col) == doctest::Approx(x(col, 3 - row)));

  t = identity_transform(4);
  t.shift_dx = 1;
  t.shift_dy = -2;
  const RealField s = apply_transform(t, x);
  for (std::size_t row = 0; row < 4; ++row)
    for (std::size_t col = 0; col < 4; ++col)
      CHECK(s(row, col) == doctest::Approx(x((row + 2) % 4, (col + 3) % 4)));

  TransformSpec back = identity_transform(4);
  back.shift_dx = -1;
  back.shift_dy = 2;
  CHECK(max_abs_diff(apply_transform(back, s).values(), x.values()) < 1e-12);
  CHECK(max_abs_diff(invert_transform(t, x).values(), apply_transform(back, x).values()) < 1e-12);
}

TEST_CASE("constant field inside the low shelf is attenuated") {
  TransformSpec t = identity_transform(16);
  t.low_threshold = 0.5;
  const RealField c(16, 16, 2.0);
  const RealField out = apply_transform(t, c);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(0.1));
}

TEST_CASE("random specs round trip") {
  TransformSamplerConfig cfg;
  cfg.n = 64;
  Rng rng(23);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const TransformSpec t = sample_transform(cfg, rng);
    CHECK(t.low_threshold <= t.high_threshold);
    CHECK(t.low_threshold >= 0.0);
    CHECK(t.high_threshold <= max_radial_frequency(64) + 1e-12);
    const RealField x = random_field(64, 64, rng);
    worst = std::max(worst, max_abs_diff(invert_transform(t, apply_transform(t, x)).values(), x.values()));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("geometric transforms are isometries and commute with the zero-mean projector") {
  const std::size_t n = 8;
  const MassMappingOperator op(n);
  TransformSamplerConfig cfg;
  cfg.n = n;
  cfg.shelving = false;
  Rng rng(24);
  for (int i = 0; i < 50; ++i) {
    const TransformSpec t = sample_transform(cfg, rng);
    CHECK(t.is_geometric_only(n));
    const RealField x = random_field(n, n, rng);
    const RealField tx = apply_transform(t, x);
    CHECK(rel_err(squared_norm(tx.values()), squared_norm(x.values())) < 1e-12);
    const RealField lhs = op.adjoint(op.apply(tx));
    const RealField rhs = apply_transform(t, op.adjoint(op.apply(x)));
    CHECK(max_abs_diff(lhs.values(), rhs.values()) < 1e-12);
  }
}

TEST_CASE("threshold distribution") {
  TransformSamplerConfig defaults;
  CHECK(defaults.low_mean == 200.0);
  CHECK(defaults.high_mean == 350.0);
  CHECK(defaults.low_std == 50.0);
  CHECK(defaults.high_std == 50.0);
  CHECK(defaults.attenuation == 0.05);

  // Means well inside [0, sqrt(2) n / 2] so neither clamping nor swapping bites;
  // at n = 600 everything doubles relative to the 300-pixel reference.
  TransformSamplerConfig cfg;
  cfg.n = 600;
  cfg.low_mean = 60.0;
  cfg.low_std = 5.0;
  cfg.high_mean = 150.0;
  cfg.high_std = 10.0;
  Rng rng(25);
  const int draws = 20000;
  double s[2] = {0, 0}, s2[2] = {0, 0};
  for (int i = 0; i < draws; ++i) {
    const TransformSpec t = sample_transform(cfg, rng);
    s[0] += t.low_threshold;
    s2[0] += t.low_threshold * t.low_threshold;
    s[1] += t.high_threshold;
    s2[1] += t.high_threshold * t.high_threshold;
  }
  const double expected_mean[2] = {120.0, 300.0};
  const double expected_sd[2] = {10.0, 20.0};
  for (int k = 0; k < 2; ++k) {
    const double mean = s[k] / draws;
    const double sd = std::sqrt(s2[k] / draws - mean * mean);
    CHECK(std::abs(mean - expected_mean[k]) < 4.0 * expected_sd[k] / std::sqrt(draws));
    CHECK(sd == doctest::Approx(expected_sd[k]).epsilon(0.03));
  }

  // Defaults at the reference grid: the high shelf is clamped to the corner
  // frequency unless the draw lands in the low tail.
  TransformSamplerConfig ref;
  ref.n = 300;
  std::size_t at_corner = 0;
  for (int i = 0; i < 2000; ++i) {
    const TransformSpec t = sample_transform(ref, rng);
    CHECK(t.low_threshold <= t.high_threshold);
    at_corner += t.high_threshold == max_radial_frequency(300);
  }
  CHECK(at_corner > 1500);
}

TEST_CASE("sampler draw budget is fixed") {
  TransformSamplerConfig full;
  full.n = 32;
  TransformSamplerConfig none = full;
  none.geometric = false;
  none.shelving = false;
  Rng a(26), b(26);
  sample_transform(full, a);
  const TransformSpec t = sample_transform(none, b);
  CHECK(t == identity_transform(32));
  CHECK(a() == b());
}

TEST_CASE("spec validation and JSON") {
  TransformSpec t = identity_transform(8);
  t.attenuation = 0.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = identity_transform(8);
  t.low_threshold = 3.0;
  t.high_threshold = 2.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = identity_transform(8);
  t.rot_quarter = 4;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = identity_transform(8);
  t.shift_dx = 3;
  CHECK_THROWS_AS(t.validate(), ConfigError);

  TransformSamplerConfig cfg;
  cfg.n = 64;
  Rng rng(27);
  const TransformSpec s = sample_transform(cfg, rng);
  const nlohmann::json j = s;
  CHECK(j.at("shift").size() == 2);
  CHECK(j.get<TransformSpec>() == s);

  CHECK_THROWS_AS(apply_transform(identity_transform(8), RealField(8, 4)), DimensionMismatchError);
}
