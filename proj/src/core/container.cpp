#include "supernerf/core/container.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "supernerf/core/error.hpp"
#include "supernerf/core/hash.hpp"

namespace supernerf {
namespace {

constexpr char kMagic[8] = {'S', 'N', 'R', 'F', 'C', 'K', 'P', 'T'};

template <typename T>
void append(std::vector<std::uint8_t>& out, const T& v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::string origin) : bytes_(bytes), origin_(std::move(origin)) {}

  template <typename T>
  T take(const std::string& field) {
    T v;
    need(sizeof(T), field);
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void take_into(void* dst, std::size_t n, const std::string& field) {
    need(n, field);
    if (n) std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  [[nodiscard]] std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n, const std::string& field) const {
    if (pos_ + n > bytes_.size()) throw IoError(origin_ + ": truncated while reading '" + field + "'");
  }

  std::span<const std::uint8_t> bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

template <typename T>
void append_array(std::vector<std::uint8_t>& out, const std::vector<T>& v) {
  append<std::uint64_t>(out, v.size());
  const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
  out.insert(out.end(), p, p + v.size() * sizeof(T));
}

template <typename T>
std::vector<T> read_array(Reader& r, const std::string& name) {
  const auto n = r.take<std::uint64_t>(name + ".count");
  if (n > (std::uint64_t{1} << 34)) throw IoError("record '" + name + "' has implausible length");
  std::vector<T> v(n);
  r.take_into(v.data(), n * sizeof(T), name);
  return v;
}

}  // namespace

template <typename T>
const T& Container::get(const std::string& name, const char* kind) const {
  auto it = records_.find(name);
  if (it == records_.end()) throw IoError("checkpoint is missing record '" + name + "'");
  const T* v = std::get_if<T>(&it->second);
  if (!v) throw IoError("checkpoint record '" + name + "' is not of kind " + kind);
  return *v;
}

const std::vector<float>& Container::floats(const std::string& name) const {
  return get<std::vector<float>>(name, "f32");
}
const std::vector<double>& Container::doubles(const std::string& name) const {
  return get<std::vector<double>>(name, "f64");
}
const std::vector<std::int64_t>& Container::ints(const std::string& name) const {
  return get<std::vector<std::int64_t>>(name, "i64");
}
const std::string& Container::get_string(const std::string& name) const { return get<std::string>(name, "string"); }

std::int64_t Container::get_int(const std::string& name) const {
  const auto& v = ints(name);
  if (v.size() != 1) throw IoError("checkpoint record '" + name + "' is not a scalar");
  return v[0];
}

double Container::get_double(const std::string& name) const {
  const auto& v = doubles(name);
  if (v.size() != 1) throw IoError("checkpoint record '" + name + "' is not a scalar");
  return v[0];
}

std::vector<std::uint8_t> Container::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  append<std::uint32_t>(out, kFormatVersion);
  append<std::uint32_t>(out, static_cast<std::uint32_t>(records_.size()));
  for (const auto& [name, value] : records_) {
    append<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    append<std::uint8_t>(out, static_cast<std::uint8_t>(value.index()));
    std::visit(
        [&](const auto& v) {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, std::string>) {
            append<std::uint64_t>(out, v.size());
            out.insert(out.end(), v.begin(), v.end());
          } else {
            append_array(out, v);
          }
        },
        value);
  }
  const std::uint64_t sum = fnv1a64(std::string_view(reinterpret_cast<const char*>(out.data()), out.size()));
  append(out, sum);
  return out;
}

Container Container::deserialize(std::span<const std::uint8_t> bytes, const std::string& origin) {
  Reader r(bytes, origin);
  char magic[8];
  r.take_into(magic, 8, "magic");
  if (std::memcmp(magic, kMagic, 8) != 0) throw IoError(origin + ": bad magic, not a checkpoint");
  const auto version = r.take<std::uint32_t>("version");
  if (version != kFormatVersion) {
    throw IoError(origin + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.take<std::uint32_t>("record_count");
  Container c;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.take<std::uint16_t>("name_length");
    std::string name(len, '\0');
    r.take_into(name.data(), len, "name");
    const auto kind = r.take<std::uint8_t>(name + ".kind");
    switch (kind) {
      case 0: c.records_[name] = read_array<float>(r, name); break;
      case 1: c.records_[name] = read_array<double>(r, name); break;
      case 2: c.records_[name] = read_array<std::int64_t>(r, name); break;
      case 3: {
        const auto n = r.take<std::uint64_t>(name + ".count");
        if (n > bytes.size()) throw IoError(origin + ": truncated while reading '" + name + "'");
        std::string s(n, '\0');
        r.take_into(s.data(), n, name);
        c.records_[name] = std::move(s);
        break;
      }
      default: throw IoError(origin + ": record '" + name + "' has unknown kind");
    }
  }
  const std::size_t body = r.pos();
  const auto stored = r.take<std::uint64_t>("checksum");
  const std::uint64_t actual = fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), body));
  if (stored != actual) throw IoError(origin + ": checksum mismatch");
  return c;
}

void Container::write(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + tmp);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Container Container::read(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("missing checkpoint file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes, path.string());
}

}  // namespace supernerf
