#include "stonewalk/config.hpp"

#include <climits>
#include <fstream>
#include <sstream>

#include "stonewalk/common.hpp"

namespace stonewalk {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw ConfigError("config key '" + key + "' = '" + value + "' is not a valid " + expected);
}

}  // namespace

Config Config::load(const std::filesystem::path& path) {
  Config cfg;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  cfg.parse_stream(in, path, 0);
  return cfg;
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  cfg.parse_stream(in, "<string>", 0);
  return cfg;
}

void Config::parse_stream(std::istream& in, const std::filesystem::path& origin, int depth) {
  if (depth > 8) throw ConfigError("config include depth exceeds 8: " + origin.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.rfind("include ", 0) == 0) {
      const std::filesystem::path target = trim(line.substr(8));
      if (target.empty()) {
        throw ConfigError("empty include at " + origin.string() + ":" +
                          std::to_string(line_no));
      }
      const std::filesystem::path resolved =
          target.is_absolute() ? target : origin.parent_path() / target;
      std::ifstream nested(resolved);
      if (!nested) throw ConfigError("cannot open include: " + resolved.string());
      parse_stream(nested, resolved, depth + 1);
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value' at " + origin.string() + ":" +
                        std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("empty key at " + origin.string() + ":" + std::to_string(line_no));
    }
    entries_[key] = value;
  }
}

void Config::set_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must be key=value, got '" + assignment + "'");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw ConfigError("config key must be non-empty");
  entries_[key] = value;
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

const std::string* Config::lookup(const std::string& key) const {
  consumed_.insert(key);
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const std::string* v = lookup(key);
  return v ? *v : fallback;
}

std::string Config::require_string(const std::string& key) const {
  const std::string* v = lookup(key);
  if (!v) throw ConfigError("missing required config key '" + key + "'");
  return *v;
}

double Config::get_double(const std::string& key, double fallback) const {
  const std::string* v = lookup(key);
  if (!v) return fallback;
  try {
    std::size_t idx = 0;
    const double parsed = std::stod(*v, &idx);
    if (idx != v->size()) bad_value(key, *v, "number");
    return parsed;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, *v, "number");
  }
}

int Config::get_int(const std::string& key, int fallback) const {
  const std::string* v = lookup(key);
  if (!v) return fallback;
  try {
    std::size_t idx = 0;
    const long parsed = std::stol(*v, &idx);
    if (idx != v->size() || parsed < INT_MIN || parsed > INT_MAX) bad_value(key, *v, "integer");
    return static_cast<int>(parsed);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, *v, "integer");
  }
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const std::string* v = lookup(key);
  if (!v) return fallback;
  try {
    std::size_t idx = 0;
    const unsigned long long parsed = std::stoull(*v, &idx);
    if (idx != v->size()) bad_value(key, *v, "unsigned integer");
    return parsed;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, *v, "unsigned integer");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const std::string* v = lookup(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  bad_value(key, *v, "boolean (true/false/1/0)");
}

void Config::ensure_all_consumed() const {
  std::string unknown;
  for (const auto& [key, value] : entries_) {
    if (!consumed_.count(key)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += key;
    }
  }
  if (!unknown.empty()) throw ConfigError("unrecognized config keys: " + unknown);
}

}  // namespace stonewalk
