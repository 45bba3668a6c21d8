#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stonewalk/rng.hpp"

namespace stonewalk {

enum class TerrainKind {
  kStonesEverywhere,
  kSteppingStones,
  kBalancingBeams,
  kSteppingBeams,
  kGaps,
};

const char* to_string(TerrainKind kind);
TerrainKind terrain_kind_from_string(const std::string& name);

// Depth of gap cells relative to nominal ground.
inline constexpr double kGapDepth = -1.0;
// Per-stone surface height variation band.
inline constexpr double kSurfaceNoise = 0.05;
// Default raster pitch: half the elevation-map pitch, so the smallest
// 0.2 m stones are resolved by 4 cells per side.
inline constexpr double kDefaultCellSize = 0.05;
inline constexpr double kStripWidth = 2.0;
inline constexpr double kStripLength = 8.0;
inline constexpr double kStonesFieldSize = 8.0;

struct TerrainSpec {
  TerrainKind kind = TerrainKind::kSteppingStones;
  int level = 0;  // curriculum difficulty l in [0, 8]
  std::uint64_t seed = 0;
  double cell_size = kDefaultCellSize;
  double extent_x = kStripLength;
  double extent_y = kStripWidth;

  void validate() const;  // throws ConfigError on violation
};

// Default extents for a kind (8x8 field or 2x8 strip).
TerrainSpec default_spec(TerrainKind kind, int level, std::uint64_t seed);

struct CurriculumParams {
  double stone_size = 0.0;
  double stone_gap_x = 0.0;      // longitudinal spacing / max stone distance
  double stone_gap_y = 0.0;      // lateral line distance (beams only)
  double platform_length = 1.0;  // start/end (or center) platform side
};

// Stone size / spacing laws per difficulty level l in [0, 8].
// SteppingBeams and Gaps reuse the SteppingStones law.
CurriculumParams curriculum_params(TerrainKind kind, int level);

struct HeightQuery {
  double height = kGapDepth;
  bool out_of_bounds = false;
};

// Rasterized heights over [0, extent_x) x [0, extent_y), row-major with rows
// along x. safe[i] marks load-bearing cells; gap cells sit at kGapDepth.
struct HeightField {
  int rows = 0;  // cells along x
  int cols = 0;  // cells along y
  double cell_size = kDefaultCellSize;
  std::vector<float> heights;    // rows * cols
  std::vector<std::uint8_t> safe;

  double extent_x() const { return rows * cell_size; }
  double extent_y() const { return cols * cell_size; }
  int index(int r, int c) const { return r * cols + c; }
  bool in_bounds(double x, double y) const;

  // Nearest-cell lookup; out-of-bounds reads as gap.
  HeightQuery query(double x, double y) const;
  double height_at(double x, double y) const { return query(x, y).height; }
  bool safe_at(double x, double y) const;
};

// Task terrain plus its gap-filled flat twin. Safe cells are bit-identical
// between the two; gap cells are filled to nominal ground (0) in `flat`.
struct TerrainPair {
  HeightField task;
  HeightField flat;
  TerrainSpec spec;
};

// Deterministic in spec (including seed). Stone placement is computed in
// continuous coordinates before rasterization, so cell_size never perturbs
// the random draws.
TerrainPair generate(const TerrainSpec& spec);

// Leading edge of the far platform: crossing it on a strip counts as a full
// traverse. For StonesEverywhere this is the edge margin used for success.
double far_platform_edge(const TerrainSpec& spec);

}  // namespace stonewalk
