#include "stonewalk/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "stonewalk/common.hpp"

namespace stonewalk {
namespace {

// Axis-aligned stamp in continuous coordinates, half-open in both axes so
// abutting stones never double-claim a raster cell.
struct Stamp {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
  double height = 0.0;
};

// First cell index whose center lies at or beyond coordinate v.
int first_center_at(double v, double cell) {
  return static_cast<int>(std::ceil(v / cell - 0.5 - 1e-9));
}

void rasterize(const std::vector<Stamp>& stamps, HeightField& field) {
  const double cell = field.cell_size;
  for (const Stamp& s : stamps) {
    int r0 = std::max(0, first_center_at(s.x0, cell));
    int r1 = std::min(field.rows, first_center_at(s.x1, cell));
    int c0 = std::max(0, first_center_at(s.y0, cell));
    int c1 = std::min(field.cols, first_center_at(s.y1, cell));
    for (int r = r0; r < r1; ++r) {
      for (int c = c0; c < c1; ++c) {
        const int i = field.index(r, c);
        field.heights[i] = static_cast<float>(s.height);
        field.safe[i] = 1;
      }
    }
  }
}

double stone_height(Rng& rng) { return rng.uniform(-kSurfaceNoise, kSurfaceNoise); }

// One stone per sub-square of side `period`, center jittered uniformly within
// the margin so the stone never leaves its sub-square.
Stamp jittered_stone(Rng& rng, double ox, double oy, double period, double size) {
  const double slack = period - size;
  const double cx = ox + size / 2.0 + rng.uniform01() * slack;
  const double cy = oy + size / 2.0 + rng.uniform01() * slack;
  const double h = stone_height(rng);
  return Stamp{cx - size / 2.0, cy - size / 2.0, cx + size / 2.0, cy + size / 2.0, h};
}

void gen_stones_everywhere(const TerrainSpec& spec, const CurriculumParams& p, Rng& rng,
                           std::vector<Stamp>& out) {
  const double period = p.stone_size + p.stone_gap_x;
  const int nx = static_cast<int>(std::floor(spec.extent_x / period + 1e-9));
  const int ny = static_cast<int>(std::floor(spec.extent_y / period + 1e-9));
  const double ox = (spec.extent_x - nx * period) / 2.0;
  const double oy = (spec.extent_y - ny * period) / 2.0;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      out.push_back(jittered_stone(rng, ox + i * period, oy + j * period, period, p.stone_size));
    }
  }
  // Central start platform, flush with nominal ground.
  const double cx = spec.extent_x / 2.0;
  const double cy = spec.extent_y / 2.0;
  const double half = p.platform_length / 2.0;
  out.push_back(Stamp{cx - half, cy - half, cx + half, cy + half, 0.0});
}

void add_strip_platforms(const TerrainSpec& spec, double platform_length,
                         std::vector<Stamp>& out) {
  out.push_back(Stamp{0.0, 0.0, platform_length, spec.extent_y, 0.0});
  out.push_back(Stamp{spec.extent_x - platform_length, 0.0, spec.extent_x, spec.extent_y, 0.0});
}

void gen_stepping_stones(const TerrainSpec& spec, const CurriculumParams& p, Rng& rng,
                         std::vector<Stamp>& out) {
  const double period = p.stone_size + p.stone_gap_x;
  const double run = spec.extent_x - 2.0 * p.platform_length;
  const int n = static_cast<int>(std::floor(run / period + 1e-9));
  const double ox = p.platform_length + (run - n * period) / 2.0;
  const double lanes[2] = {spec.extent_y * 0.25, spec.extent_y * 0.75};
  for (double lane : lanes) {
    const double oy = lane - period / 2.0;
    for (int i = 0; i < n; ++i) {
      out.push_back(jittered_stone(rng, ox + i * period, oy, period, p.stone_size));
    }
  }
  add_strip_platforms(spec, p.platform_length, out);
}

void gen_balancing_beams(const TerrainSpec& spec, const CurriculumParams& p, Rng& rng,
                         std::vector<Stamp>& out) {
  // Deterministic placement; stone_gap_y is the center-to-center line
  // distance, so at the top level (size == gap_y, gap_x == 0) the two lines
  // fuse into one continuous beam.
  const double period = p.stone_size + p.stone_gap_x;
  const double run = spec.extent_x - 2.0 * p.platform_length;
  const int n = static_cast<int>(std::floor((run + p.stone_gap_x) / period + 1e-9));
  const double used = n * p.stone_size + (n - 1) * p.stone_gap_x;
  const double ox = p.platform_length + (run - used) / 2.0;
  const double mid = spec.extent_y / 2.0;
  const double lanes[2] = {mid - p.stone_gap_y / 2.0, mid + p.stone_gap_y / 2.0};
  for (double lane : lanes) {
    for (int i = 0; i < n; ++i) {
      const double x0 = ox + i * period;
      const double h = stone_height(rng);
      out.push_back(Stamp{x0, lane - p.stone_size / 2.0, x0 + p.stone_size,
                          lane + p.stone_size / 2.0, h});
    }
  }
  add_strip_platforms(spec, p.platform_length, out);
}

void gen_stepping_beams(const TerrainSpec& spec, const CurriculumParams& p, Rng& rng,
                        std::vector<Stamp>& out) {
  const double period = p.stone_size + p.stone_gap_x;
  const double run = spec.extent_x - 2.0 * p.platform_length;
  const int n = static_cast<int>(std::floor(run / period + 1e-9));
  const double ox = p.platform_length + (run - n * period) / 2.0;
  for (int i = 0; i < n; ++i) {
    const double slack = period - p.stone_size;
    const double x0 = ox + i * period + rng.uniform01() * slack;
    const double h = stone_height(rng);
    out.push_back(Stamp{x0, 0.0, x0 + p.stone_size, spec.extent_y, h});
  }
  add_strip_platforms(spec, p.platform_length, out);
}

void gen_gaps(const TerrainSpec& spec, const CurriculumParams& p, int level, Rng& rng,
              std::vector<Stamp>& out) {
  const double run_end = spec.extent_x - p.platform_length;
  const double min_segment = 0.3;
  auto add_segment = [&](double x0, double x1) {
    if (x1 > x0) {
      out.push_back(Stamp{x0, 0.0, x1, spec.extent_y, stone_height(rng)});
    }
  };
  double x = p.platform_length;
  while (x < run_end) {
    const double seg = rng.uniform(0.6, 1.2);
    const double seg_end = std::min(x + seg, run_end);
    add_segment(x, seg_end);
    x = seg_end;
    if (x >= run_end) break;
    const double gap = rng.uniform(0.1, 0.1 + 0.05 * level);
    if (x + gap + min_segment > run_end) {
      add_segment(x, run_end);
      break;
    }
    x += gap;
  }
  add_strip_platforms(spec, p.platform_length, out);
}

}  // namespace

const char* to_string(TerrainKind kind) {
  switch (kind) {
    case TerrainKind::kStonesEverywhere: return "stones_everywhere";
    case TerrainKind::kSteppingStones: return "stepping_stones";
    case TerrainKind::kBalancingBeams: return "balancing_beams";
    case TerrainKind::kSteppingBeams: return "stepping_beams";
    case TerrainKind::kGaps: return "gaps";
  }
  throw ContractError("unknown TerrainKind");
}

TerrainKind terrain_kind_from_string(const std::string& name) {
  if (name == "stones_everywhere") return TerrainKind::kStonesEverywhere;
  if (name == "stepping_stones") return TerrainKind::kSteppingStones;
  if (name == "balancing_beams") return TerrainKind::kBalancingBeams;
  if (name == "stepping_beams") return TerrainKind::kSteppingBeams;
  if (name == "gaps") return TerrainKind::kGaps;
  throw ConfigError("unknown terrain kind: " + name);
}

void TerrainSpec::validate() const {
  if (level < 0 || level > 8) {
    throw ConfigError("terrain level must be in [0, 8], got " + std::to_string(level));
  }
  if (!(cell_size > 0.0)) {
    throw ConfigError("terrain cell_size must be positive");
  }
  auto whole_cells = [&](double extent) {
    const double n = extent / cell_size;
    return extent > 0.0 && std::abs(n - std::round(n)) < 1e-6;
  };
  if (!whole_cells(extent_x) || !whole_cells(extent_y)) {
    throw ConfigError("terrain extents must be positive integer multiples of cell_size");
  }
}

TerrainSpec default_spec(TerrainKind kind, int level, std::uint64_t seed) {
  TerrainSpec spec;
  spec.kind = kind;
  spec.level = level;
  spec.seed = seed;
  if (kind == TerrainKind::kStonesEverywhere) {
    spec.extent_x = kStonesFieldSize;
    spec.extent_y = kStonesFieldSize;
  } else {
    spec.extent_x = kStripLength;
    spec.extent_y = kStripWidth;
  }
  return spec;
}

CurriculumParams curriculum_params(TerrainKind kind, int level) {
  if (level < 0 || level > 8) {
    throw ConfigError("curriculum level must be in [0, 8], got " + std::to_string(level));
  }
  const double l = static_cast<double>(level);
  static constexpr double kSteppingSizes[9] = {0.8, 0.65, 0.5, 0.4, 0.35, 0.3, 0.25, 0.2, 0.2};
  static constexpr double kBeamYDist[9] = {0.2, 0.2, 0.2, 0.25, 0.3, 0.35, 0.35, 0.4, 0.2};
  CurriculumParams p;
  switch (kind) {
    case TerrainKind::kStonesEverywhere:
      p.stone_size = std::max(0.25, 1.5 * (1.0 - 0.1 * l));
      p.stone_gap_x = 0.05 * std::ceil(l / 2.0);
      break;
    case TerrainKind::kSteppingStones:
    case TerrainKind::kSteppingBeams:
    case TerrainKind::kGaps:
      // SteppingBeams and Gaps reuse the SteppingStones size/spacing law.
      p.stone_size = kSteppingSizes[level];
      p.stone_gap_x = 0.1 + 0.05 * l;
      break;
    case TerrainKind::kBalancingBeams:
      p.stone_size = 0.3 - 0.05 * std::floor(l / 3.0);
      p.stone_gap_x = 0.4 - 0.05 * l;
      p.stone_gap_y = kBeamYDist[level];
      break;
  }
  return p;
}

bool HeightField::in_bounds(double x, double y) const {
  return x >= 0.0 && x < extent_x() && y >= 0.0 && y < extent_y();
}

HeightQuery HeightField::query(double x, double y) const {
  if (!in_bounds(x, y)) {
    return HeightQuery{kGapDepth, true};
  }
  const int r = std::min(static_cast<int>(x / cell_size), rows - 1);
  const int c = std::min(static_cast<int>(y / cell_size), cols - 1);
  return HeightQuery{static_cast<double>(heights[index(r, c)]), false};
}

bool HeightField::safe_at(double x, double y) const {
  if (!in_bounds(x, y)) return false;
  const int r = std::min(static_cast<int>(x / cell_size), rows - 1);
  const int c = std::min(static_cast<int>(y / cell_size), cols - 1);
  return safe[index(r, c)] != 0;
}

TerrainPair generate(const TerrainSpec& spec) {
  spec.validate();
  const CurriculumParams params = curriculum_params(spec.kind, spec.level);
  Rng rng(hash_seeds(spec.seed, static_cast<std::uint64_t>(spec.kind) * 16u +
                                    static_cast<std::uint64_t>(spec.level)),
          Rng::stream_id("terrain"));

  std::vector<Stamp> stamps;
  switch (spec.kind) {
    case TerrainKind::kStonesEverywhere: gen_stones_everywhere(spec, params, rng, stamps); break;
    case TerrainKind::kSteppingStones: gen_stepping_stones(spec, params, rng, stamps); break;
    case TerrainKind::kBalancingBeams: gen_balancing_beams(spec, params, rng, stamps); break;
    case TerrainKind::kSteppingBeams: gen_stepping_beams(spec, params, rng, stamps); break;
    case TerrainKind::kGaps: gen_gaps(spec, params, spec.level, rng, stamps); break;
  }

  TerrainPair pair;
  pair.spec = spec;
  HeightField& task = pair.task;
  task.rows = static_cast<int>(std::round(spec.extent_x / spec.cell_size));
  task.cols = static_cast<int>(std::round(spec.extent_y / spec.cell_size));
  task.cell_size = spec.cell_size;
  task.heights.assign(static_cast<std::size_t>(task.rows) * task.cols,
                      static_cast<float>(kGapDepth));
  task.safe.assign(task.heights.size(), 0);
  rasterize(stamps, task);

  pair.flat = task;
  for (std::size_t i = 0; i < pair.flat.heights.size(); ++i) {
    if (!pair.flat.safe[i]) {
      pair.flat.heights[i] = 0.0f;
      pair.flat.safe[i] = 1;
    }
  }
  return pair;
}

double far_platform_edge(const TerrainSpec& spec) {
  return spec.extent_x - curriculum_params(spec.kind, spec.level).platform_length;
}

}  // namespace stonewalk
