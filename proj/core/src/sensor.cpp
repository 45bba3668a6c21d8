#include "stonewalk/sensor.hpp"

#include <cmath>

#include "stonewalk/common.hpp"

namespace stonewalk {

void MapNoiseConfig::validate() const {
  if (vertical_offset_range < 0.0 || vertical_noise_range < 0.0 || rp_bias_range < 0.0 ||
      yaw_noise_range < 0.0) {
    throw ConfigError("map noise ranges must be non-negative");
  }
  if (foothold_extension_prob < 0.0 || foothold_extension_prob > 1.0 || map_repeat_prob < 0.0 ||
      map_repeat_prob > 1.0) {
    throw ConfigError("map noise probabilities must lie in [0, 1]");
  }
}

void SensorState::reset(const MapNoiseConfig& cfg, Rng& rng) {
  episode_vertical_offset =
      cfg.vertical_offset_range > 0.0
          ? rng.uniform(-cfg.vertical_offset_range, cfg.vertical_offset_range)
          : 0.0;
  episode_yaw_noise = cfg.yaw_noise_range > 0.0
                          ? rng.uniform(-cfg.yaw_noise_range, cfg.yaw_noise_range)
                          : 0.0;
  rp_bias_x = cfg.rp_bias_range > 0.0 ? rng.uniform(-cfg.rp_bias_range, cfg.rp_bias_range) : 0.0;
  rp_bias_y = cfg.rp_bias_range > 0.0 ? rng.uniform(-cfg.rp_bias_range, cfg.rp_bias_range) : 0.0;
  has_prev = false;
}

ElevationMap sample_map(const HeightField& field, const BasePose& pose) {
  ElevationMap map;
  map.frame = pose;
  const double cy = std::cos(pose.yaw);
  const double sy = std::sin(pose.yaw);
  for (int i = -ElevationMap::kHalf; i <= ElevationMap::kHalf; ++i) {
    for (int j = -ElevationMap::kHalf; j <= ElevationMap::kHalf; ++j) {
      const double lx = i * ElevationMap::kPitch;
      const double ly = j * ElevationMap::kPitch;
      const double wx = pose.x + cy * lx - sy * ly;
      const double wy = pose.y + sy * lx + cy * ly;
      const int k = ElevationMap::index(i, j);
      map.samples[k] = field.height_at(wx, wy);
      map.safe[k] = field.safe_at(wx, wy) ? 1 : 0;
    }
  }
  return map;
}

ElevationMap apply_noise(const HeightField& field, const ElevationMap& map, SensorState& state,
                         const MapNoiseConfig& cfg, Rng& rng) {
  // Yaw misalignment: exact re-query at the perturbed heading. A zero draw
  // reproduces the input samples bit-for-bit.
  BasePose noisy_frame = map.frame;
  noisy_frame.yaw = map.frame.yaw + state.episode_yaw_noise;
  ElevationMap out = sample_map(field, noisy_frame);
  out.frame = map.frame;

  // Vertical channel: episode offset plus per-sample noise.
  if (state.episode_vertical_offset != 0.0) {
    for (double& s : out.samples) s += state.episode_vertical_offset;
  }
  if (cfg.vertical_noise_range > 0.0) {
    for (double& s : out.samples) {
      s += rng.uniform(-cfg.vertical_noise_range, cfg.vertical_noise_range);
    }
  }

  // Roll/pitch misalignment: planar ramp from -h to +h across each axis.
  if (state.rp_bias_x != 0.0 || state.rp_bias_y != 0.0) {
    for (int i = -ElevationMap::kHalf; i <= ElevationMap::kHalf; ++i) {
      for (int j = -ElevationMap::kHalf; j <= ElevationMap::kHalf; ++j) {
        out.samples[ElevationMap::index(i, j)] +=
            state.rp_bias_x * i / ElevationMap::kHalf + state.rp_bias_y * j / ElevationMap::kHalf;
      }
    }
  }

  // Foothold extension: when the per-step channel fires, each gap sample
  // 4-adjacent to a safe sample is independently promoted to its highest
  // safe neighbor. Eligibility is evaluated on a snapshot of the mask.
  if (cfg.foothold_extension_prob > 0.0 && rng.chance(cfg.foothold_extension_prob)) {
    const ElevationMap snapshot = out;
    for (int i = -ElevationMap::kHalf; i <= ElevationMap::kHalf; ++i) {
      for (int j = -ElevationMap::kHalf; j <= ElevationMap::kHalf; ++j) {
        const int k = ElevationMap::index(i, j);
        if (snapshot.safe[k]) continue;
        bool eligible = false;
        double best = 0.0;
        const int di[4] = {-1, 1, 0, 0};
        const int dj[4] = {0, 0, -1, 1};
        for (int d = 0; d < 4; ++d) {
          const int ni = i + di[d];
          const int nj = j + dj[d];
          if (ni < -ElevationMap::kHalf || ni > ElevationMap::kHalf ||
              nj < -ElevationMap::kHalf || nj > ElevationMap::kHalf) {
            continue;
          }
          const int nk = ElevationMap::index(ni, nj);
          if (snapshot.safe[nk]) {
            best = eligible ? std::max(best, snapshot.samples[nk]) : snapshot.samples[nk];
            eligible = true;
          }
        }
        if (eligible && rng.chance(cfg.foothold_extension_prob)) {
          out.samples[k] = best;
          out.safe[k] = 1;
        }
      }
    }
  }

  // Map repeat: return the previous step's (already noised) map unchanged.
  if (cfg.map_repeat_prob > 0.0 && rng.chance(cfg.map_repeat_prob) && state.has_prev) {
    return state.prev_map;
  }
  state.prev_map = out;
  state.has_prev = true;
  return out;
}

}  // namespace stonewalk
