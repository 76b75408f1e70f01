#pragma once

// Flat "key = value" configuration with '#' comments and dotted names.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sdec {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Every accepted key with its default.
const std::vector<ConfigKey>& config_keys();

class Config {
 public:
  /// All keys at their defaults.
  Config();

  static Config from_file(const std::string& path);
  static Config parse(std::string_view text, const std::string& origin = "<string>");

  /// Rejects unknown keys.
  void set(const std::string& key, const std::string& value);
  /// Applies "--key=value" arguments.
  void apply_overrides(const std::vector<std::string>& args);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::uint64_t> get_seeds() const;

  /// Sorted "key = value" lines; parses back to an equal Config.
  std::string resolved() const;

  bool operator==(const Config&) const = default;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace sdec
