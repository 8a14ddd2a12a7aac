#pragma once
// Minimal key/value config reader covering the flat pipeline config and the
// sectioned suite files: `key = value` lines, optional [section] headers,
// '#' comments, and double-quoted string values. Not a full TOML parser; the
// subset is documented in the README.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace surgbench {

class KeyValueConfig {
 public:
  static KeyValueConfig load(const std::string& path);
  static KeyValueConfig parse(const std::string& text);

  // Keys inside sections are addressed as "section.key".
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;  // throws with key name

  std::optional<std::int64_t> get_int(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;

  std::vector<std::string> sections() const;
  bool has_section(const std::string& name) const;
  std::vector<std::string> keys_in(const std::string& section) const;

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> section_order_;
};

}  // namespace surgbench
