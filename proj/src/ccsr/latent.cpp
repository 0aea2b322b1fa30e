#include "supernerf/ccsr/latent.hpp"

#include <random>

#include "supernerf/core/error.hpp"
#include "supernerf/core/random.hpp"

namespace supernerf::ccsr {

ImageBuffer LatentCode::expand() const {
  const int d = downsample;
  const int sw = width / d;
  if (values.size() != static_cast<std::size_t>(height / d) * sw * 3) throw ShapeError("latent code storage mismatch");
  ImageBuffer out(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = values[(static_cast<std::size_t>(y / d) * sw + x / d) * 3 + c];
  return out;
}

std::vector<float> LatentCode::reduce(const ImageBuffer& g) const {
  if (g.height != height || g.width != width) throw ShapeError("latent gradient shape mismatch");
  const int d = downsample;
  const int sw = width / d;
  std::vector<double> acc(values.size(), 0.0);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) acc[(static_cast<std::size_t>(y / d) * sw + x / d) * 3 + c] += g.at(y, x, c);
  return std::vector<float>(acc.begin(), acc.end());
}

int latent_axis_factor(int reduction) {
  switch (reduction) {
    case 1: return 1;
    case 4: return 2;
    case 16: return 4;
    default: throw ConfigError("latent downsample must be 1, 4 or 16 (got " + std::to_string(reduction) + ")");
  }
}

LatentCode init_latent(int view_index, int lr_h, int lr_w, int s, std::uint64_t seed, int downsample) {
  if (lr_h < 1 || lr_w < 1 || s < 1) throw ConfigError("init_latent: sizes must be positive");
  if (downsample < 1 || (lr_h * s) % downsample != 0 || (lr_w * s) % downsample != 0) {
    throw ConfigError("init_latent: HR size not divisible by the latent downsample factor");
  }
  LatentCode code;
  code.view_index = view_index;
  code.height = lr_h * s;
  code.width = lr_w * s;
  code.downsample = downsample;
  const auto n = static_cast<std::size_t>(code.height / downsample) * (code.width / downsample) * 3;
  code.values.resize(n);
  auto rng = make_rng(seed, 0x1A7E47, static_cast<std::uint64_t>(view_index));
  std::normal_distribution<double> dist(0.0, 0.1);
  for (auto& v : code.values) v = static_cast<float>(dist(rng));
  return code;
}

void LatentCodeStore::add(LatentCode code) {
  const int key = code.view_index;
  if (!codes_.emplace(key, std::move(code)).second) {
    throw ConfigError("duplicate latent code for view " + std::to_string(key));
  }
}

LatentCode& LatentCodeStore::at(int view_index) {
  auto it = codes_.find(view_index);
  if (it == codes_.end()) throw ConfigError("no latent code for view " + std::to_string(view_index));
  return it->second;
}

const LatentCode& LatentCodeStore::at(int view_index) const {
  auto it = codes_.find(view_index);
  if (it == codes_.end()) throw ConfigError("no latent code for view " + std::to_string(view_index));
  return it->second;
}

void LatentCodeStore::save(Container& c, const std::string& prefix) const {
  std::vector<std::int64_t> views;
  for (const auto& [k, code] : codes_) {
    views.push_back(k);
    const std::string p = prefix + "." + std::to_string(k);
    const std::int64_t meta[4] = {code.height, code.width, code.downsample, code.learnable ? 1 : 0};
    c.put(p + ".meta", std::span<const std::int64_t>(meta));
    c.put(p + ".values", std::span<const float>(code.values));
  }
  c.put(prefix + ".views", std::span<const std::int64_t>(views));
}

LatentCodeStore LatentCodeStore::load(const Container& c, const std::string& prefix) {
  LatentCodeStore store;
  for (std::int64_t k : c.ints(prefix + ".views")) {
    const std::string p = prefix + "." + std::to_string(k);
    const auto& meta = c.ints(p + ".meta");
    if (meta.size() != 4) throw IoError("latent record '" + p + ".meta' malformed");
    LatentCode code;
    code.view_index = static_cast<int>(k);
    code.height = static_cast<int>(meta[0]);
    code.width = static_cast<int>(meta[1]);
    code.downsample = static_cast<int>(meta[2]);
    code.learnable = meta[3] != 0;
    code.values = c.floats(p + ".values");
    if (code.downsample < 1 ||
        code.values.size() != static_cast<std::size_t>(code.height / code.downsample) * (code.width / code.downsample) * 3) {
      throw IoError("latent record '" + p + ".values' has the wrong size");
    }
    store.add(std::move(code));
  }
  return store;
}

}  // namespace supernerf::ccsr
