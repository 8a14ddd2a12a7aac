#include "surgbench/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "surgbench/strings.hpp"

namespace surgbench {

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  for (const auto& raw_line : split(text, '\n')) {
    ++line_no;
    std::string line = trim(raw_line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::runtime_error("config:" + std::to_string(line_no) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (std::find(cfg.section_order_.begin(), cfg.section_order_.end(), section) ==
          cfg.section_order_.end()) {
        cfg.section_order_.push_back(section);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config:" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    // Strip an inline comment only outside quotes.
    if (!value.empty() && value.front() != '"') {
      const auto hash = value.find('#');
      if (hash != std::string::npos) value = trim(value.substr(0, hash));
    }
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    const std::string full_key = section.empty() ? key : section + "." + key;
    cfg.values_[full_key] = value;
  }
  return cfg;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key, const std::string& fallback) const {
  const auto v = get(key);
  return v ? *v : fallback;
}

std::string KeyValueConfig::require(const std::string& key) const {
  const auto v = get(key);
  if (!v) throw std::runtime_error("config: missing required key \"" + key + "\"");
  return *v;
}

std::optional<std::int64_t> KeyValueConfig::get_int(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  try {
    return std::stoll(*v);
  } catch (...) {
    throw std::runtime_error("config: key \"" + key + "\" is not an integer: " + *v);
  }
}

std::optional<double> KeyValueConfig::get_double(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  try {
    return std::stod(*v);
  } catch (...) {
    throw std::runtime_error("config: key \"" + key + "\" is not a number: " + *v);
  }
}

std::optional<bool> KeyValueConfig::get_bool(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  const std::string f = fold_case(*v);
  if (f == "true" || f == "1" || f == "yes" || f == "on") return true;
  if (f == "false" || f == "0" || f == "no" || f == "off") return false;
  throw std::runtime_error("config: key \"" + key + "\" is not a boolean: " + *v);
}

std::vector<std::string> KeyValueConfig::sections() const { return section_order_; }

bool KeyValueConfig::has_section(const std::string& name) const {
  return std::find(section_order_.begin(), section_order_.end(), name) != section_order_.end();
}

std::vector<std::string> KeyValueConfig::keys_in(const std::string& section) const {
  std::vector<std::string> out;
  const std::string prefix = section + ".";
  for (const auto& [k, v] : values_) {
    if (k.rfind(prefix, 0) == 0 && k.find('.', prefix.size()) == std::string::npos) {
      out.push_back(k.substr(prefix.size()));
    }
  }
  return out;
}

}  // namespace surgbench
