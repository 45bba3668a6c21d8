#pragma once

#include <iosfwd>
#include <string>

#include "stonewalk/terrain.hpp"

namespace stonewalk {

// .hgt: little-endian binary heightfield with the generating spec attached.
// The flat twin is not stored; it is reproduced exactly by flat_twin().
struct TerrainFile {
  TerrainSpec spec;
  HeightField field;
};

void save_heightfield(std::ostream& os, const TerrainSpec& spec, const HeightField& field);
void save_heightfield(const std::string& path, const TerrainSpec& spec, const HeightField& field);
TerrainFile load_heightfield(std::istream& is);
TerrainFile load_heightfield(const std::string& path);

// Gap-filled twin of a task field (safe cells identical, gaps at ground 0).
HeightField flat_twin(const HeightField& task);

// Human-readable top-down preview: '#' safe, '.' gap, one row per x slice.
std::string to_ascii(const HeightField& field);

}  // namespace stonewalk
