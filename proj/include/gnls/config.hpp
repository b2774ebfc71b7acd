#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace gnls {

/// Flat key = value configuration file. Lines starting with '#' (or blank)
/// are skipped; keys are dotted lowercase ("atlas.eps_theta = 0.25").
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = trim(line.substr(0, eq));
      std::string val = trim(line.substr(eq + 1));
      if (key.empty()) throw std::runtime_error("config line without key");
      cfg.values_[key] = val;
    }
    return cfg;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      throw std::runtime_error("missing config key: " + key);
    return it->second;
  }
  std::string get_or(const std::string& key, const std::string& dflt) const {
    auto it = values_.find(key);
    return it == values_.end() ? dflt : it->second;
  }
  double get_double(const std::string& key) const { return std::stod(get(key)); }
  double get_double_or(const std::string& key, double dflt) const {
    return has(key) ? std::stod(get(key)) : dflt;
  }
  long get_int(const std::string& key) const { return std::stol(get(key)); }
  long get_int_or(const std::string& key, long dflt) const {
    return has(key) ? std::stol(get(key)) : dflt;
  }
  std::uint64_t get_seed() const {
    return static_cast<std::uint64_t>(std::stoull(get("seed")));
  }

  void set(const std::string& key, const std::string& val) { values_[key] = val; }

  /// FNV-1a hash of the sorted canonical serialization; stamped into every
  /// output file so reports can be tied back to their configuration.
  std::string hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::string& s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
      }
    };
    for (const auto& [k, v] : values_) {
      mix(k);
      mix("=");
      mix(v);
      mix("\n");
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
  }

  const std::map<std::string, std::string>& items() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
  }
  std::map<std::string, std::string> values_;
};

}  // namespace gnls
