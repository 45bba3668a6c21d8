#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace stonewalk {

// Flat key-value configuration. File format: one `key = value` per line,
// `#` starts a comment, `include <path>` splices another file (relative to
// the including file), later assignments win. Keys are dotted by convention
// ("ppo.lr") but the namespace is flat.
class Config {
 public:
  Config() = default;

  static Config load(const std::filesystem::path& path);
  static Config from_string(const std::string& text);

  // Apply a "key=value" override (CLI --set). Throws ConfigError on syntax.
  void set_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;

  // Getters mark keys consumed; `ensure_all_consumed` then catches typos.
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string require_string(const std::string& key) const;

  // Throws ConfigError listing any key that was never read.
  void ensure_all_consumed() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  void parse_stream(std::istream& in, const std::filesystem::path& origin, int depth);
  const std::string* lookup(const std::string& key) const;

  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> consumed_;
};

}  // namespace stonewalk
