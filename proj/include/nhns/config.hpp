#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace nhns {

/**
 * Flat key/value configuration. Layers are applied in order: built-in
 * defaults, a `key = value` file, the NHNS_SEED environment variable, and
 * explicit overrides (command-line flags). Unknown keys are rejected.
 */
class Config {
 public:
  Config();

  static const std::map<std::string, std::string>& defaults();
  static bool known(std::string_view key);

  /// Lines are `key = value`; blank lines and lines starting with '#' are skipped.
  void merge_text(std::string_view text, std::string_view origin = "config");
  void merge_file(const std::filesystem::path& path);
  /// Reads NHNS_SEED when set.
  void merge_env();
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;

  /// Resolved configuration, one `key = value` per line in key order.
  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace nhns
