// Passive per-frame target localization: exhaustive multi-scale NCC template
// matching, plus a configurable ground-truth oracle tracker.
#pragma once

#include <optional>
#include <vector>

#include "detrack/metrics.hpp"
#include "detrack/observer.hpp"
#include "detrack/rng.hpp"

namespace detrack {

struct TrackPrediction {
  std::optional<BBox> bbox;  // none when lost
  double score = 0.0;        // [0,1]
};

// Shade-raster crop of the target at t=0. Never updated afterwards so that
// tracking failures stay attributable to the policy.
struct Template {
  std::vector<double> crop;  // row-major, width x height
  int width = 0;
  int height = 0;
  BBox source;

  bool empty() const { return crop.empty(); }
};

namespace detail {

inline Template crop_shade(const Observation& obs, const BBox& box) {
  Template tmpl;
  tmpl.width = box.width();
  tmpl.height = box.height();
  tmpl.source = box;
  tmpl.crop.reserve(static_cast<size_t>(tmpl.width) * tmpl.height);
  for (int y = box.y1; y < box.y2; ++y)
    for (int x = box.x1; x < box.x2; ++x) tmpl.crop.push_back(obs.shade_at(x, y));
  return tmpl;
}

// Bilinear resize of a template crop.
inline Template resize_template(const Template& src, double scale) {
  Template dst;
  dst.width = std::max(1, static_cast<int>(std::lround(src.width * scale)));
  dst.height = std::max(1, static_cast<int>(std::lround(src.height * scale)));
  dst.source = src.source;
  dst.crop.resize(static_cast<size_t>(dst.width) * dst.height);
  for (int y = 0; y < dst.height; ++y) {
    double sy = dst.height > 1 ? static_cast<double>(y) * (src.height - 1) / (dst.height - 1) : 0.0;
    int y0 = static_cast<int>(sy);
    int y1 = std::min(y0 + 1, src.height - 1);
    double fy = sy - y0;
    for (int x = 0; x < dst.width; ++x) {
      double sx = dst.width > 1 ? static_cast<double>(x) * (src.width - 1) / (dst.width - 1) : 0.0;
      int x0 = static_cast<int>(sx);
      int x1 = std::min(x0 + 1, src.width - 1);
      double fx = sx - x0;
      double v00 = src.crop[static_cast<size_t>(y0) * src.width + x0];
      double v01 = src.crop[static_cast<size_t>(y0) * src.width + x1];
      double v10 = src.crop[static_cast<size_t>(y1) * src.width + x0];
      double v11 = src.crop[static_cast<size_t>(y1) * src.width + x1];
      dst.crop[static_cast<size_t>(y) * dst.width + x] =
          (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
    }
  }
  return dst;
}

// Zero-normalized cross correlation of a template against the window at
// (wx, wy); 0 when either side is constant.
inline double zncc_at(const Observation& obs, const Template& tmpl, int wx, int wy,
                      double tmpl_mean, double tmpl_var) {
  size_t n = tmpl.crop.size();
  double wsum = 0.0;
  for (int y = 0; y < tmpl.height; ++y)
    for (int x = 0; x < tmpl.width; ++x) wsum += obs.shade_at(wx + x, wy + y);
  double wmean = wsum / n;
  double cross = 0.0, wvar = 0.0;
  for (int y = 0; y < tmpl.height; ++y)
    for (int x = 0; x < tmpl.width; ++x) {
      double w = obs.shade_at(wx + x, wy + y) - wmean;
      double t = tmpl.crop[static_cast<size_t>(y) * tmpl.width + x] - tmpl_mean;
      cross += w * t;
      wvar += w * w;
    }
  if (tmpl_var < 1e-12 || wvar < 1e-12) return 0.0;
  return cross / std::sqrt(tmpl_var * wvar);
}

}  // namespace detail

// Exhaustive NCC search over the shade raster at scales {0.5, 1, 2}. Ties are
// broken toward the smallest (y, x, scale).
class NccTracker {
 public:
  static constexpr double kLostScore = 0.3;

  void init(const Observation& obs, const BBox& box) {
    if (!box.valid() || box.x2 > obs.width || box.y2 > obs.height || box.x1 < 0 || box.y1 < 0)
      throw input_error("NccTracker::init: box outside frame");
    template_ = detail::crop_shade(obs, box);
    if (template_.empty()) throw input_error("NccTracker::init: empty template");
  }

  bool initialized() const { return !template_.empty(); }

  TrackPrediction track(const Observation& obs) const {
    if (!initialized()) throw state_error("NccTracker::track: not initialized");
    static constexpr double kScales[3] = {0.5, 1.0, 2.0};

    double best_ncc = -2.0;
    long best_key = 0;
    BBox best_box;
    for (int si = 0; si < 3; ++si) {
      Template scaled = detail::resize_template(template_, kScales[si]);
      if (scaled.width > obs.width || scaled.height > obs.height) continue;
      double tmean = 0.0;
      for (double v : scaled.crop) tmean += v;
      tmean /= scaled.crop.size();
      double tvar = 0.0;
      for (double v : scaled.crop) tvar += (v - tmean) * (v - tmean);

      for (int y = 0; y + scaled.height <= obs.height; ++y) {
        for (int x = 0; x + scaled.width <= obs.width; ++x) {
          double ncc = detail::zncc_at(obs, scaled, x, y, tmean, tvar);
          long key = (static_cast<long>(y) * obs.width + x) * 3 + si;
          if (ncc > best_ncc || (ncc == best_ncc && key < best_key)) {
            best_ncc = ncc;
            best_key = key;
            best_box = BBox{x, y, x + scaled.width, y + scaled.height};
          }
        }
      }
    }
    double score = clamp(best_ncc, 0.0, 1.0);
    TrackPrediction pred;
    pred.score = score;
    if (score >= kLostScore) pred.bbox = best_box;
    return pred;
  }

 private:
  Template template_;
};

// Ground-truth tracker with integer Gaussian jitter and dropout. Draw order
// is fixed (dropout uniform, then dx, dy normals) so seeded re-computation in
// test oracles reproduces it exactly.
inline TrackPrediction oracle_track(const Observation& obs, int target_id, double sigma_px,
                                    double p_lost, uint64_t seed) {
  if (sigma_px < 0.0) throw input_error("oracle_track: sigma_px must be >= 0");
  if (p_lost < 0.0 || p_lost >= 1.0) throw input_error("oracle_track: p_lost must be in [0,1)");
  std::optional<BBox> gt = gt_bbox(obs, target_id);
  Rng rng(seed);
  double drop = rng.uniform();
  int dx = static_cast<int>(std::lround(sigma_px * rng.normal()));
  int dy = static_cast<int>(std::lround(sigma_px * rng.normal()));
  if (!gt || drop < p_lost) return {std::nullopt, 0.0};

  BBox b = *gt;
  b.x1 += dx;
  b.x2 += dx;
  b.y1 += dy;
  b.y2 += dy;
  b.x1 = clamp(b.x1, 0, obs.width - 1);
  b.y1 = clamp(b.y1, 0, obs.height - 1);
  b.x2 = clamp(b.x2, b.x1 + 1, obs.width);
  b.y2 = clamp(b.y2, b.y1 + 1, obs.height);
  return {b, 1.0};
}

}  // namespace detrack
