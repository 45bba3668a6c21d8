#include "stonewalk/terrain_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "binio.hpp"
#include "stonewalk/common.hpp"

namespace stonewalk {
namespace {
constexpr char kMagic[9] = "SWHGT001";
}

void save_heightfield(std::ostream& os, const TerrainSpec& spec, const HeightField& field) {
  binio::write_magic(os, kMagic);
  binio::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(spec.kind));
  binio::write_pod<std::int32_t>(os, spec.level);
  binio::write_pod<std::uint64_t>(os, spec.seed);
  binio::write_pod<double>(os, spec.cell_size);
  binio::write_pod<std::int32_t>(os, field.rows);
  binio::write_pod<std::int32_t>(os, field.cols);
  binio::write_array(os, field.heights.data(), field.heights.size());
  binio::write_array(os, field.safe.data(), field.safe.size());
  if (!os) {
    throw IoError("failed writing heightfield stream");
  }
}

void save_heightfield(const std::string& path, const TerrainSpec& spec,
                      const HeightField& field) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw IoError("cannot open for writing: " + path);
  }
  save_heightfield(os, spec, field);
}

TerrainFile load_heightfield(std::istream& is) {
  binio::expect_magic(is, kMagic, "heightfield");
  TerrainFile out;
  const auto kind = binio::read_pod<std::uint32_t>(is, "terrain kind");
  if (kind > static_cast<std::uint32_t>(TerrainKind::kGaps)) {
    throw IoError("heightfield has invalid terrain kind " + std::to_string(kind));
  }
  out.spec.kind = static_cast<TerrainKind>(kind);
  out.spec.level = binio::read_pod<std::int32_t>(is, "terrain level");
  out.spec.seed = binio::read_pod<std::uint64_t>(is, "terrain seed");
  out.spec.cell_size = binio::read_pod<double>(is, "cell size");
  out.field.cell_size = out.spec.cell_size;
  out.field.rows = binio::read_pod<std::int32_t>(is, "rows");
  out.field.cols = binio::read_pod<std::int32_t>(is, "cols");
  if (out.field.rows <= 0 || out.field.cols <= 0 || !(out.spec.cell_size > 0.0)) {
    throw IoError("heightfield has invalid dimensions");
  }
  const std::size_t n = static_cast<std::size_t>(out.field.rows) * out.field.cols;
  out.field.heights.resize(n);
  out.field.safe.resize(n);
  binio::read_array(is, out.field.heights.data(), n, "heights");
  binio::read_array(is, out.field.safe.data(), n, "safe mask");
  out.spec.extent_x = out.field.extent_x();
  out.spec.extent_y = out.field.extent_y();
  for (float h : out.field.heights) {
    if (!std::isfinite(h)) {
      throw IoError("heightfield contains non-finite heights");
    }
  }
  return out;
}

TerrainFile load_heightfield(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw IoError("cannot open for reading: " + path);
  }
  return load_heightfield(is);
}

HeightField flat_twin(const HeightField& task) {
  HeightField flat = task;
  for (std::size_t i = 0; i < flat.heights.size(); ++i) {
    if (!flat.safe[i]) {
      flat.heights[i] = 0.0f;
      flat.safe[i] = 1;
    }
  }
  return flat;
}

std::string to_ascii(const HeightField& field) {
  std::ostringstream os;
  for (int r = 0; r < field.rows; ++r) {
    for (int c = 0; c < field.cols; ++c) {
      os << (field.safe[field.index(r, c)] ? '#' : '.');
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace stonewalk
