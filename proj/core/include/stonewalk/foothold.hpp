#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "stonewalk/terrain.hpp"

namespace stonewalk {

// Sole sample points in the foot frame, default a boundary-inclusive 4x4
// grid over a 0.20 m x 0.10 m rectangle (n = 16).
struct FootPrint {
  std::vector<std::array<double, 2>> sample_offsets;

  int count() const { return static_cast<int>(sample_offsets.size()); }

  static FootPrint default_grid();

  static constexpr double kLength = 0.20;
  static constexpr double kWidth = 0.10;
  static constexpr int kGridSide = 4;
};

struct FootState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  bool contact = false;   // the per-foot indicator gating the penalty
  double air_time = 0.0;  // seconds since lift-off; reset at touchdown
};

enum class FootholdMode { kContinuous, kBinaryPct };

struct FootholdConfig {
  double epsilon = -0.1;           // depth tolerance below nominal ground
  FootholdMode mode = FootholdMode::kContinuous;
  int binary_pct = 50;             // p in the binary variant, percent of n
  double support_threshold = 0.5;  // misstep boundary on support_fraction

  void validate() const;  // throws ConfigError
};

// Number of sole samples whose terrain height falls below epsilon.
// Out-of-bounds samples read as gap and therefore count as bad.
int bad_sample_count(const FootState& foot, const FootPrint& print, const HeightField& field,
                     double epsilon);

// Continuous mode: -(sum of bad samples over contacting feet).
// Binary mode: -1 per contacting foot whose bad count reaches p% of n.
double foothold_reward(const std::array<FootState, 2>& feet, const FootPrint& print,
                       const HeightField& field, const FootholdConfig& cfg);

// 1 - bad/n; the env terminates hard-mode episodes below support_threshold.
double support_fraction(const FootState& foot, const FootPrint& print, const HeightField& field,
                        double epsilon);

struct TouchdownEvent {
  int bad_count = 0;
  int sample_count = 0;
};

struct FootholdErrorResult {
  double error = 0.0;
  bool empty = false;  // warning flag: no touchdowns logged
};

// Mean fraction of sole samples landing off safe footholds (E_foot).
FootholdErrorResult foothold_error(const std::vector<TouchdownEvent>& touchdowns);

}  // namespace stonewalk
