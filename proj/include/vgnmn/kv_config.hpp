#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

namespace vgnmn {

/// Flat `key = value` settings. Blank lines and lines starting with '#'
/// are ignored; later duplicates override earlier ones.
class KvConfig {
 public:
  static KvConfig parse(std::string_view text);
  static KvConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Throws ConfigError naming the first key outside `known`.
  void require_known(const std::set<std::string>& known) const;

  /// Sorted `key=value` lines.
  std::string to_text() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace vgnmn
