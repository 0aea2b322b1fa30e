#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace supernerf {

/// Flat `key = value` text configuration. '#' starts a comment.
/// Keys are kept sorted so the canonical text (and its hash) is stable.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  [[nodiscard]] bool has(const std::string& key) const { return values_.contains(key); }
  [[nodiscard]] std::optional<std::string> get(const std::string& key) const;

  [[nodiscard]] int get_int(const std::string& key, int fallback) const;
  [[nodiscard]] double get_double(const std::string& key, double fallback) const;
  [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
  [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;

  /// Throws ConfigError naming the first key that is not in `allowed`.
  void require_known(const std::initializer_list<std::string_view>& allowed) const;

  [[nodiscard]] std::string canonical_text() const;
  [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace supernerf
