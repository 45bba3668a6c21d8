// Internal little-endian binary I/O helpers shared by the .hgt and
// checkpoint readers/writers. Not installed.
#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "stonewalk/common.hpp"

namespace stonewalk::binio {

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what = "value") {
  static_assert(std::is_trivially_copyable_v<T>);
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) {
    throw IoError(std::string("truncated stream while reading ") + what);
  }
  return value;
}

template <typename T>
void write_array(std::ostream& os, const T* data, std::size_t count) {
  static_assert(std::is_trivially_copyable_v<T>);
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void read_array(std::istream& is, T* data, std::size_t count, const char* what = "array") {
  static_assert(std::is_trivially_copyable_v<T>);
  is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if (!is) {
    throw IoError(std::string("truncated stream while reading ") + what);
  }
}

inline void write_magic(std::ostream& os, const char (&magic)[9]) {
  os.write(magic, 8);
}

inline void expect_magic(std::istream& is, const char (&magic)[9], const char* what) {
  char buf[8];
  is.read(buf, 8);
  if (!is || std::memcmp(buf, magic, 8) != 0) {
    throw IoError(std::string("bad magic for ") + what);
  }
}

}  // namespace stonewalk::binio
