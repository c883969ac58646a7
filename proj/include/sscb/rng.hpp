#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sscb {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Deterministic substream seed from a root seed and a path of integer tags.
/// Distinct tag paths give statistically independent streams; the mapping
/// never depends on scheduling or worker count.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(root);
  for (std::uint64_t t : tags) h = mix64(h ^ mix64(t + 0x632BE59BD9B4E019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> tags) {
  return Rng(derive_seed(root, tags));
}

// Stream tags used across the pipeline.
namespace stream {
inline constexpr std::uint64_t kNoise = 1;
inline constexpr std::uint64_t kTransform = 2;
inline constexpr std::uint64_t kProbe = 3;
inline constexpr std::uint64_t kTruth = 4;
inline constexpr std::uint64_t kObservationNoise = 5;
inline constexpr std::uint64_t kCalibrationSplit = 10;
inline constexpr std::uint64_t kTestSplit = 11;
inline constexpr std::uint64_t kEquivariant = 20;
inline constexpr std::uint64_t kParametric = 21;
inline constexpr std::uint64_t kSure = 22;
}  // namespace stream

}  // namespace sscb
