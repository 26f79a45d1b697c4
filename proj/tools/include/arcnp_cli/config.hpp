#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace arcnp::cli {

/// Bad configuration. `line` is 0 for command-line overrides and for
/// problems found after parsing.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, std::size_t line, const std::string& what);
  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

/// A key=value entry and where it came from.
struct Setting {
  std::string value;
  std::size_t line = 0;
};

using Settings = std::map<std::string, Setting>;

/// Flat `key = value` text; '#' starts a comment. A JSON manifest written
/// by a previous run is also accepted; its "config" object is used.
Settings parse_settings(const std::string& text);
Settings load_settings(const std::filesystem::path& path);

/// Parses `--key value` pairs (also `--key=value`).
Settings parse_overrides(const std::vector<std::string>& args);

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "eq-kl",          "sawtooth-loglik", "mixture-prop1", "smooth-samples",
      "predprey",       "auxar",           "ordering-spread"};
  return names;
}

/// Resolved experiment configuration: every key relevant to the
/// experiment with its effective value (defaults filled in).
class ExperimentConfig {
 public:
  /// Validates keys and values. Throws ConfigError.
  static ExperimentConfig resolve(const Settings& settings);

  const std::string& experiment() const { return experiment_; }
  std::uint64_t seed() const { return get_u64("seed"); }
  bool is_default(const std::string& key) const;

  std::string get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::vector<double> get_list(const std::string& key) const;

  /// Key/value echo in key order.
  const std::map<std::string, std::string>& values() const { return values_; }
  std::string to_text() const;

 private:
  std::string experiment_;
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> defaulted_;
};

}  // namespace arcnp::cli
