#include "supernerf/scene/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "supernerf/core/error.hpp"
#include "supernerf/core/png_io.hpp"

namespace supernerf::scene {

const char* to_string(ResolutionTag tag) { return tag == ResolutionTag::LR ? "LR" : "HR"; }

ResolutionTag parse_resolution_tag(const std::string& s) {
  if (s == "LR") return ResolutionTag::LR;
  if (s == "HR") return ResolutionTag::HR;
  throw IoError("unknown resolution tag '" + s + "'");
}

void MultiViewDataset::validate() const {
  if (views.empty()) throw ConfigError("dataset has no views");
  if (scale < 1) throw ConfigError("dataset scale must be positive");
  std::set<int> seen;
  const auto [lh, lw] = lr_size();
  for (const auto& v : views) {
    if (!seen.insert(v.index).second) throw ConfigError("duplicate view index " + std::to_string(v.index));
    v.image.check_shape();
    const int eh = v.tag == ResolutionTag::LR ? lh : lh * scale;
    const int ew = v.tag == ResolutionTag::LR ? lw : lw * scale;
    if (v.image.height != eh || v.image.width != ew) {
      throw ConfigError("view " + std::to_string(v.index) + " tagged " + to_string(v.tag) + " has size " +
                        std::to_string(v.image.height) + "x" + std::to_string(v.image.width) + ", expected " +
                        std::to_string(eh) + "x" + std::to_string(ew));
    }
    if (v.pose.width != v.image.width || v.pose.height != v.image.height) {
      throw ConfigError("view " + std::to_string(v.index) + " pose size does not match its image");
    }
    v.pose.validate();
  }
}

std::pair<int, int> MultiViewDataset::lr_size() const {
  for (const auto& v : views) {
    if (v.tag == ResolutionTag::LR) return {v.image.height, v.image.width};
  }
  for (const auto& v : views) {
    if (v.image.height % scale != 0 || v.image.width % scale != 0) {
      throw ConfigError("HR view " + std::to_string(v.index) + " is not divisible by the scale factor");
    }
    return {v.image.height / scale, v.image.width / scale};
  }
  throw ConfigError("dataset has no views");
}

const View& MultiViewDataset::view(int index) const {
  for (const auto& v : views) {
    if (v.index == index) return v;
  }
  throw ConfigError("no view with index " + std::to_string(index));
}

int MultiViewDataset::count(ResolutionTag tag) const {
  int n = 0;
  for (const auto& v : views) n += v.tag == tag;
  return n;
}

std::vector<int> select_hr_views(int n_views, double fraction_hr) {
  if (!(fraction_hr >= 0.0 && fraction_hr <= 1.0)) throw ConfigError("hybrid HR fraction must lie in [0, 1]");
  const int k = static_cast<int>(std::lround(fraction_hr * n_views));
  std::vector<int> out;
  for (int j = 0; j < k; ++j) {
    // Evenly spread: position floor((j + 0.5) * n / k).
    out.push_back(static_cast<int>(std::floor((j + 0.5) * n_views / k)));
  }
  return out;
}

ImageBuffer lr_image(const View& v, int scale) {
  return v.tag == ResolutionTag::LR ? v.image : box_downsample(v.image, scale);
}

MultiViewDataset degrade(const MultiViewDataset& hr_truth, const std::vector<int>& hr_positions) {
  MultiViewDataset out;
  out.scale = hr_truth.scale;
  const std::set<int> keep(hr_positions.begin(), hr_positions.end());
  for (std::size_t i = 0; i < hr_truth.views.size(); ++i) {
    const View& src = hr_truth.views[i];
    if (src.tag != ResolutionTag::HR) throw ConfigError("degrade expects an all-HR ground-truth dataset");
    View v = src;
    if (!keep.contains(static_cast<int>(i))) {
      v.tag = ResolutionTag::LR;
      v.image = box_downsample(src.image, hr_truth.scale);
      v.pose.width = src.pose.width / hr_truth.scale;
      v.pose.height = src.pose.height / hr_truth.scale;
      v.pose.focal = src.pose.focal / hr_truth.scale;
    }
    out.views.push_back(std::move(v));
  }
  out.validate();
  return out;
}

// poses.txt: header lines start with '#'. Each view line holds
//   index tag r00 r01 r02 px r10 r11 r12 py r20 r21 r22 pz focal near far
// where the 3x4 block is camera-to-world [R^T | position], row-major.
void save_dataset(const MultiViewDataset& ds, const std::filesystem::path& dir, int bit_depth) {
  ds.validate();
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / "poses.txt");
  if (!f) throw IoError("cannot write " + (dir / "poses.txt").string());
  f << "# supernerf dataset v1\n";
  f << "# scale " << ds.scale << "\n";
  f << "# bit_depth " << bit_depth << "\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  for (const auto& v : ds.views) {
    const Eigen::Matrix3d c2w = v.pose.rotation.transpose();
    f << v.index << ' ' << to_string(v.tag);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) f << ' ' << num(c2w(r, c));
      f << ' ' << num(v.pose.position(r));
    }
    f << ' ' << num(v.pose.focal) << ' ' << num(v.pose.near) << ' ' << num(v.pose.far) << '\n';
    write_png(dir / ("view_" + std::to_string(v.index) + ".png"), v.image, bit_depth);
  }
  if (!f) throw IoError("write failed: " + (dir / "poses.txt").string());
}

MultiViewDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream f(dir / "poses.txt");
  if (!f) throw IoError("missing file: " + (dir / "poses.txt").string());
  MultiViewDataset ds;
  ds.scale = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = "poses.txt:" + std::to_string(lineno);
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "scale" && !(hs >> ds.scale)) throw IoError(where + ": corrupt header field 'scale'");
      continue;
    }
    std::istringstream ls(line);
    View v;
    std::string tag;
    if (!(ls >> v.index)) throw IoError(where + ": corrupt field 'index'");
    if (!(ls >> tag)) throw IoError(where + ": missing field 'tag'");
    v.tag = parse_resolution_tag(tag);
    // Values are written with 9 significant digits, which round-trips single
    // precision exactly; parse as float and widen.
    auto read_num = [&](double& out, const char* field) {
      float x;
      if (!(ls >> x)) throw IoError(where + ": corrupt field '" + field + "'");
      out = x;
    };
    Eigen::Matrix3d c2w;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) read_num(c2w(r, c), "rotation");
      read_num(v.pose.position(r), "position");
    }
    v.pose.rotation = c2w.transpose();
    read_num(v.pose.focal, "focal");
    read_num(v.pose.near, "near");
    read_num(v.pose.far, "far");
    std::string extra;
    if (ls >> extra) throw IoError(where + ": trailing data '" + extra + "'");
    v.image = read_png(dir / ("view_" + std::to_string(v.index) + ".png"));
    v.pose.width = v.image.width;
    v.pose.height = v.image.height;
    ds.views.push_back(std::move(v));
  }
  if (ds.scale < 1) throw IoError("poses.txt: missing or corrupt header field 'scale'");
  if (ds.views.empty()) throw IoError("poses.txt: no views");
  // Tag mismatch between poses.txt and the image sizes surfaces here.
  try {
    ds.validate();
  } catch (const ConfigError& e) {
    throw IoError(std::string("dataset tag/size mismatch: ") + e.what());
  }
  return ds;
}

}  // namespace supernerf::scene
