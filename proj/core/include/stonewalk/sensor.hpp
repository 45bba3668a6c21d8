#pragma once

#include <array>
#include <cstdint>

#include "stonewalk/rng.hpp"
#include "stonewalk/terrain.hpp"

namespace stonewalk {

struct BasePose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

// 15x15 robot-centric elevation map, 0.1 m pitch, axis-aligned with base yaw.
// Heights are absolute terrain heights over the world ground plane. The safe
// flags mirror the sampled cells' safe mask; they feed the foothold-extension
// noise channel and are not part of the policy observation.
struct ElevationMap {
  static constexpr int kSide = 15;
  static constexpr int kHalf = 7;
  static constexpr int kCells = kSide * kSide;
  static constexpr double kPitch = 0.1;

  BasePose frame;
  std::array<double, kCells> samples{};
  std::array<std::uint8_t, kCells> safe{};

  // i along base forward (+x), j along base left (+y); both in [-7, 7].
  static int index(int i, int j) { return (i + kHalf) * kSide + (j + kHalf); }
  double at(int i, int j) const { return samples[index(i, j)]; }
};

struct MapNoiseConfig {
  double vertical_offset_range = 0.03;  // per-episode height offset bound
  double vertical_noise_range = 0.03;   // per-sample per-step noise bound
  double rp_bias_range = 0.03;          // roll/pitch ramp amplitudes h_x, h_y
  double yaw_noise_range = 0.2;         // per-episode yaw misalignment bound
  double foothold_extension_prob = 0.6; // per-step channel trigger
  double map_repeat_prob = 0.2;         // per-step stale-map probability

  void validate() const;  // throws ConfigError

  static MapNoiseConfig zero() { return MapNoiseConfig{0, 0, 0, 0, 0, 0}; }
};

// Per-episode noise draws plus the previous noised map for the repeat channel.
struct SensorState {
  double episode_vertical_offset = 0.0;
  double episode_yaw_noise = 0.0;
  double rp_bias_x = 0.0;  // h_x
  double rp_bias_y = 0.0;  // h_y
  bool has_prev = false;
  ElevationMap prev_map;

  // Resamples episode-scoped noise; draws occur only for nonzero ranges so a
  // zero config consumes no randomness.
  void reset(const MapNoiseConfig& cfg, Rng& rng);
};

// Exact per-sample query of the field at base + R(yaw)·(i,j)·pitch.
ElevationMap sample_map(const HeightField& field, const BasePose& pose);

// Noise pipeline, mechanized as: yaw-resample from the field (exact
// re-query), then vertical offset + per-sample noise, then the roll/pitch
// ramp, then foothold extension, then map repeat. With a zero config this is
// a bit-exact identity. Draws occur only for active channels, in that order.
ElevationMap apply_noise(const HeightField& field, const ElevationMap& map, SensorState& state,
                         const MapNoiseConfig& cfg, Rng& rng);

}  // namespace stonewalk
