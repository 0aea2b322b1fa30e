#include "supernerf/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "supernerf/core/error.hpp"
#include "supernerf/core/png_io.hpp"
#include "supernerf/training/losses.hpp"

namespace supernerf::eval {
namespace {

using Json = nlohmann::ordered_json;

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

struct Rgb {
  std::uint8_t r, g, b;
};

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(w) * h * 3, 255) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    auto* p = &px_[(static_cast<std::size_t>(y) * w_ + x) * 3];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  void fill(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
      for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
  }

  void line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) { err += dy; x0 += sx; }
      if (e2 <= dx) { err += dx; y0 += sy; }
    }
  }

  void save(const std::filesystem::path& p) const { write_png_rgb8(p, w_, h_, px_); }

 private:
  int w_, h_;
  std::vector<std::uint8_t> px_;
};

constexpr Rgb kAxis{40, 40, 40};
constexpr Rgb kGrid{225, 225, 225};
constexpr Rgb kOurs{31, 119, 180};
constexpr Rgb kBase{255, 127, 14};

void frame(Canvas& cv, int left, int top, int right, int bottom) {
  for (int k = 1; k < 5; ++k) {
    const int y = bottom - (bottom - top) * k / 5;
    cv.line(left, y, right, y, kGrid);
  }
  cv.line(left, bottom, right, bottom, kAxis);
  cv.line(left, top, left, bottom, kAxis);
}

void plot_loss_curve(const std::filesystem::path& log, const std::filesystem::path& out) {
  std::ifstream in(log);
  std::vector<double> sr, total;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    const auto r = training::LossReport::parse_line(line);
    sr.push_back(r.loss_sr);
    total.push_back(r.loss_total);
  }
  if (total.empty()) return;
  const auto s_total = smooth(total, 0.98);
  const auto s_sr = smooth(sr, 0.98);
  const int W = 640, H = 360, left = 40, right = W - 20, top = 20, bottom = H - 30;
  Canvas cv(W, H);
  frame(cv, left, top, right, bottom);
  const double hi = std::max(*std::max_element(s_total.begin(), s_total.end()), 1e-12);
  auto draw = [&](const std::vector<double>& ys, Rgb c) {
    int px = -1, py = -1;
    for (std::size_t k = 0; k < ys.size(); ++k) {
      const int x = left + static_cast<int>((right - left) * (ys.size() == 1 ? 0.0 : double(k) / (ys.size() - 1)));
      const int y = bottom - static_cast<int>((bottom - top) * std::clamp(ys[k] / hi, 0.0, 1.0));
      if (px >= 0) cv.line(px, py, x, y, c);
      px = x;
      py = y;
    }
  };
  draw(s_sr, kBase);
  draw(s_total, kOurs);
  cv.save(out);
}

void plot_buckets(const std::vector<BucketSummary>& buckets, const std::filesystem::path& out) {
  const int W = 480, H = 320, left = 40, right = W - 20, top = 20, bottom = H - 30;
  Canvas cv(W, H);
  frame(cv, left, top, right, bottom);
  double hi = 1e-12;
  for (const auto& b : buckets) hi = std::max({hi, b.supernerf.value_or(0.0), b.baseline.value_or(0.0)});
  const int slot = (right - left) / static_cast<int>(buckets.size());
  for (std::size_t k = 0; k < buckets.size(); ++k) {
    const int x0 = left + slot * static_cast<int>(k) + slot / 6;
    const int bw = slot / 3;
    auto bar = [&](std::optional<double> v, int x, Rgb c) {
      if (!v) return;
      const int h = static_cast<int>((bottom - top) * (*v / hi));
      cv.fill(x, bottom - h, x + bw - 2, bottom - 1, c);
    };
    bar(buckets[k].supernerf, x0, kOurs);
    bar(buckets[k].baseline, x0 + bw, kBase);
  }
  cv.save(out);
}

}  // namespace

int MetricReport::compared_pairs() const {
  return static_cast<int>(std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return p.supernerf && p.baseline; }));
}

std::optional<double> MetricReport::supernerf_mean() const {
  double s = 0.0;
  int n = 0;
  for (const auto& p : pairs) {
    if (!p.supernerf || !p.baseline) continue;
    s += *p.supernerf;
    ++n;
  }
  return n ? std::optional<double>(s / n) : std::nullopt;
}

std::optional<double> MetricReport::baseline_mean() const {
  double s = 0.0;
  int n = 0;
  for (const auto& p : pairs) {
    if (!p.supernerf || !p.baseline) continue;
    s += *p.baseline;
    ++n;
  }
  return n ? std::optional<double>(s / n) : std::nullopt;
}

double MetricReport::fraction_better() const {
  int n = 0, better = 0;
  for (const auto& p : pairs) {
    if (!p.supernerf || !p.baseline) continue;
    ++n;
    if (*p.supernerf < *p.baseline) ++better;
  }
  return n ? static_cast<double>(better) / n : 0.0;
}

std::vector<BucketSummary> MetricReport::buckets() const {
  std::vector<BucketSummary> out;
  for (const char* name : kBucketNames) {
    BucketSummary b{name, 0, std::nullopt, std::nullopt};
    double so = 0.0, sb = 0.0;
    for (const auto& p : pairs) {
      if (!p.supernerf || !p.baseline || p.bucket() != name) continue;
      ++b.pairs;
      so += *p.supernerf;
      sb += *p.baseline;
    }
    if (b.pairs) {
      b.supernerf = so / b.pairs;
      b.baseline = sb / b.pairs;
    }
    out.push_back(b);
  }
  return out;
}

std::string report_json(const MetricReport& r) {
  Json j;
  j["run_id"] = r.run_id;
  j["config_hash"] = r.config_hash;
  Json psnrs = Json::array();
  for (const auto& p : r.heldout_psnr) psnrs.push_back(p.identical ? Json("identical") : Json(p.db));
  j["psnr_heldout"] = psnrs;
  j["psnr_heldout_mean"] = optional_number(mean_db(r.heldout_psnr));
  j["lr_residual_max"] = r.lr_residual;
  Json wc;
  wc["metric"] = "masked_mae";
  wc["compared_pairs"] = r.compared_pairs();
  wc["supernerf_mean"] = optional_number(r.supernerf_mean());
  wc["baseline_mean"] = optional_number(r.baseline_mean());
  wc["fraction_pairs_better"] = r.fraction_better();
  Json buckets = Json::array();
  for (const auto& b : r.buckets()) {
    Json e;
    e["bucket"] = b.name;
    e["pairs"] = b.pairs;
    e["supernerf"] = optional_number(b.supernerf);
    e["baseline"] = optional_number(b.baseline);
    buckets.push_back(e);
  }
  wc["buckets"] = buckets;
  Json pairs = Json::array();
  for (const auto& p : r.pairs) {
    Json e;
    e["view_i"] = p.view_i;
    e["view_j"] = p.view_j;
    e["mean_displacement"] = p.mean_displacement;
    e["bucket"] = p.bucket();
    e["valid_fraction"] = p.valid_fraction;
    e["supernerf"] = p.supernerf ? Json(*p.supernerf) : Json("no-overlap");
    e["baseline"] = p.baseline ? Json(*p.baseline) : Json("no-overlap");
    pairs.push_back(e);
  }
  wc["pairs"] = pairs;
  j["warped_consistency"] = wc;
  Json extras = Json::object();
  for (const auto& [k, v] : r.extras) extras[k] = v;
  j["extras"] = extras;
  return j.dump(2) + "\n";
}

std::string report_table(const MetricReport& r) {
  std::ostringstream o;
  char buf[160];
  o << "run " << r.run_id << "  config " << r.config_hash << "\n";
  const auto m = mean_db(r.heldout_psnr);
  o << "held-out PSNR (dB): " << (m ? std::to_string(*m) : std::string("n/a")) << " over " << r.heldout_psnr.size()
    << " views\n";
  std::snprintf(buf, sizeof buf, "LR residual (max abs): %.3g\n", r.lr_residual);
  o << buf;
  for (const auto& [k, v] : r.extras) o << k << ": " << v << "\n";
  o << "\n";
  std::snprintf(buf, sizeof buf, "%6s %6s %10s %8s %8s %12s %12s\n", "view_i", "view_j", "disp_px", "bucket", "valid",
                "supernerf", "baseline");
  o << buf;
  auto fmt = [](const std::optional<double>& v) {
    if (!v) return std::string("no-overlap");
    char b[32];
    std::snprintf(b, sizeof b, "%.5f", *v);
    return std::string(b);
  };
  for (const auto& p : r.pairs) {
    std::snprintf(buf, sizeof buf, "%6d %6d %10.2f %8s %8.3f %12s %12s\n", p.view_i, p.view_j, p.mean_displacement,
                  p.bucket().c_str(), p.valid_fraction, fmt(p.supernerf).c_str(), fmt(p.baseline).c_str());
    o << buf;
  }
  o << "\n";
  for (const auto& b : r.buckets()) {
    std::snprintf(buf, sizeof buf, "bucket %-7s pairs %3d  supernerf %12s  baseline %12s\n", b.name.c_str(), b.pairs,
                  fmt(b.supernerf).c_str(), fmt(b.baseline).c_str());
    o << buf;
  }
  std::snprintf(buf, sizeof buf, "aggregate supernerf %s  baseline %s  pairs better %.3f\n",
                fmt(r.supernerf_mean()).c_str(), fmt(r.baseline_mean()).c_str(), r.fraction_better());
  o << buf;
  return o.str();
}

std::vector<double> smooth(const std::vector<double>& values, double beta) {
  std::vector<double> out;
  out.reserve(values.size());
  double ema = values.empty() ? 0.0 : values.front();
  for (double v : values) {
    ema = beta * ema + (1.0 - beta) * v;
    out.push_back(ema);
  }
  return out;
}

void emit_report(const MetricReport& report, const std::filesystem::path& out_dir,
                 const std::filesystem::path& loss_log) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "plots", ec);
  if (ec) throw IoError("cannot create report directory " + out_dir.string() + ": " + ec.message());
  auto write_text = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream o(p, std::ios::binary | std::ios::trunc);
    if (!o) throw IoError("cannot write " + p.string());
    o << text;
    if (!o) throw IoError("write failed for " + p.string());
  };
  write_text(out_dir / "metrics.json", report_json(report));
  write_text(out_dir / "metrics.txt", report_table(report));
  plot_buckets(report.buckets(), out_dir / "plots" / "consistency_buckets.png");
  if (!loss_log.empty() && std::filesystem::exists(loss_log)) plot_loss_curve(loss_log, out_dir / "plots" / "loss_curve.png");
}

}  // namespace supernerf::eval
