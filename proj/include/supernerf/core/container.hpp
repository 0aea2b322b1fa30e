#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace supernerf {

/// Versioned, self-describing binary record store used for every checkpoint
/// (fields, SR backbone, latent store, training bundles).
///
/// Layout: magic "SNRFCKPT", u32 format version, u32 record count, records
/// (u16 name length, name, u8 kind, u64 element count, payload), then a u64
/// FNV-1a checksum over everything before it. Little-endian.
class Container {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  using Value = std::variant<std::vector<float>, std::vector<double>, std::vector<std::int64_t>, std::string>;

  void put(const std::string& name, std::span<const float> v) { records_[name] = std::vector<float>(v.begin(), v.end()); }
  void put(const std::string& name, std::span<const double> v) { records_[name] = std::vector<double>(v.begin(), v.end()); }
  void put(const std::string& name, std::span<const std::int64_t> v) {
    records_[name] = std::vector<std::int64_t>(v.begin(), v.end());
  }
  void put_int(const std::string& name, std::int64_t v) { records_[name] = std::vector<std::int64_t>{v}; }
  void put_double(const std::string& name, double v) { records_[name] = std::vector<double>{v}; }
  void put_string(const std::string& name, std::string v) { records_[name] = std::move(v); }

  [[nodiscard]] bool has(const std::string& name) const { return records_.contains(name); }
  [[nodiscard]] const std::vector<float>& floats(const std::string& name) const;
  [[nodiscard]] const std::vector<double>& doubles(const std::string& name) const;
  [[nodiscard]] const std::vector<std::int64_t>& ints(const std::string& name) const;
  [[nodiscard]] std::int64_t get_int(const std::string& name) const;
  [[nodiscard]] double get_double(const std::string& name) const;
  [[nodiscard]] const std::string& get_string(const std::string& name) const;

  [[nodiscard]] std::vector<std::uint8_t> serialize() const;
  static Container deserialize(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");

  void write(const std::filesystem::path& path) const;
  static Container read(const std::filesystem::path& path);

  [[nodiscard]] const std::map<std::string, Value>& records() const { return records_; }

 private:
  template <typename T>
  const T& get(const std::string& name, const char* kind) const;

  std::map<std::string, Value> records_;
};

}  // namespace supernerf
