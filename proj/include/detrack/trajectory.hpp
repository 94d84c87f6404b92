// Target trajectory library: generation, arc-length parameterization,
// descriptive statistics, JSONL persistence.
#pragma once

#include <algorithm>
#include <cassert>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "detrack/geometry.hpp"

namespace detrack {

struct Trajectory {
  std::vector<Vec3> waypoints;  // 2..99 entries, consecutive points distinct
  double target_speed = 2.0;    // m/s
};

inline void validate_trajectory(const Trajectory& traj) {
  if (traj.waypoints.size() < 2 || traj.waypoints.size() > 99)
    throw input_error("trajectory: waypoint count must be in [2, 99]");
  if (traj.target_speed <= 0) throw input_error("trajectory: target_speed must be positive");
  for (size_t i = 0; i + 1 < traj.waypoints.size(); ++i) {
    if (!traj.waypoints[i].finite()) throw input_error("trajectory: non-finite waypoint");
    if ((traj.waypoints[i + 1] - traj.waypoints[i]).norm() == 0.0)
      throw input_error("trajectory: consecutive waypoints must be distinct");
  }
}

// Sum of Euclidean segment lengths.
inline double trajectory_length(const Trajectory& traj) {
  if (traj.waypoints.size() < 2) throw input_error("trajectory_length: need at least 2 waypoints");
  double len = 0.0;
  for (size_t i = 0; i + 1 < traj.waypoints.size(); ++i)
    len += (traj.waypoints[i + 1] - traj.waypoints[i]).norm();
  return len;
}

// Piecewise-linear position at arc length s. Out-of-range s is clamped.
inline Vec3 point_at_arclength(const Trajectory& traj, double s) {
  double total = trajectory_length(traj);
  assert(s >= -kGeomEps && s <= total + kGeomEps && "point_at_arclength: s out of range");
  s = clamp(s, 0.0, total);
  double acc = 0.0;
  for (size_t i = 0; i + 1 < traj.waypoints.size(); ++i) {
    double seg = (traj.waypoints[i + 1] - traj.waypoints[i]).norm();
    if (s <= acc + seg || i + 2 == traj.waypoints.size()) {
      double t = seg > 0 ? (s - acc) / seg : 0.0;
      t = clamp(t, 0.0, 1.0);
      return traj.waypoints[i] + (traj.waypoints[i + 1] - traj.waypoints[i]) * t;
    }
    acc += seg;
  }
  return traj.waypoints.back();
}

// Unit direction of motion at arc length s (direction of the active segment).
inline Vec3 heading_at_arclength(const Trajectory& traj, double s) {
  double total = trajectory_length(traj);
  s = clamp(s, 0.0, total);
  double acc = 0.0;
  for (size_t i = 0; i + 1 < traj.waypoints.size(); ++i) {
    double seg = (traj.waypoints[i + 1] - traj.waypoints[i]).norm();
    if (s < acc + seg || i + 2 == traj.waypoints.size())
      return (traj.waypoints[i + 1] - traj.waypoints[i]).normalized();
    acc += seg;
  }
  return (traj.waypoints.back() - traj.waypoints[traj.waypoints.size() - 2]).normalized();
}

struct LibraryStats {
  size_t count = 0;
  double waypoint_mean = 13.84;
  double waypoint_median = 8;
  double length_mean = 80.09;
  double length_median = 69.33;
  double length_min = 8.27;
  double length_max = 482.74;
  std::vector<double> x_spans;  // per-trajectory planar extent
  std::vector<double> y_spans;
};

namespace detail {
// Lower-middle element for even counts.
inline double median_lower(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}
}  // namespace detail

inline LibraryStats library_stats(const std::vector<Trajectory>& lib) {
  if (lib.empty()) throw input_error("library_stats: empty library");
  LibraryStats s;
  s.count = lib.size();
  std::vector<double> counts, lengths;
  counts.reserve(lib.size());
  lengths.reserve(lib.size());
  for (const auto& traj : lib) {
    counts.push_back(static_cast<double>(traj.waypoints.size()));
    lengths.push_back(trajectory_length(traj));
    double xmin = traj.waypoints[0].x, xmax = xmin, ymin = traj.waypoints[0].y, ymax = ymin;
    for (const auto& w : traj.waypoints) {
      xmin = std::min(xmin, w.x);
      xmax = std::max(xmax, w.x);
      ymin = std::min(ymin, w.y);
      ymax = std::max(ymax, w.y);
    }
    s.x_spans.push_back(xmax - xmin);
    s.y_spans.push_back(ymax - ymin);
  }
  s.waypoint_mean = std::accumulate(counts.begin(), counts.end(), 0.0) / counts.size();
  s.waypoint_median = detail::median_lower(counts);
  s.length_mean = std::accumulate(lengths.begin(), lengths.end(), 0.0) / lengths.size();
  s.length_median = detail::median_lower(lengths);
  s.length_min = *std::min_element(lengths.begin(), lengths.end());
  s.length_max = *std::max_element(lengths.begin(), lengths.end());
  return s;
}

namespace detail {

// Trajectory length: log-normal fitted to the target mean/median (the paper
// stats imply right skew), clipped to the reported [min, max] range.
inline double sample_length(Rng& rng, const LibraryStats& t) {
  double mu = std::log(t.length_median);
  double ratio = t.length_mean / t.length_median;
  double sigma = ratio > 1.0 ? std::sqrt(2.0 * std::log(ratio)) : 0.1;
  double v = std::exp(mu + sigma * rng.normal());
  return clamp(v, t.length_min, t.length_max);
}

// Waypoint count: discretized log-normal hitting the target median exactly
// and the mean approximately, clipped to [2, 99].
inline int sample_waypoint_count(Rng& rng, const LibraryStats& t) {
  double mu = std::log(std::max(2.0, t.waypoint_median));
  double ratio = t.waypoint_mean / t.waypoint_median;
  double sigma = ratio > 1.0 ? std::sqrt(2.0 * std::log(ratio)) : 0.1;
  double v = std::exp(mu + sigma * rng.normal());
  return static_cast<int>(clamp(std::round(v), 2.0, 99.0));
}

// Collision test for a ground target: sphere of the target radius resting on
// the ground plane, checked against obstacles only.
inline bool ground_point_blocked(const Scene& scene, double x, double y, double radius) {
  Vec3 c{x, y, radius};
  double r2 = radius * radius;
  for (const auto& box : scene.obstacles)
    if (box.dist2(c) <= r2) return true;
  return false;
}

inline bool segment_blocked(const Scene& scene, const Vec3& a, const Vec3& b, double radius) {
  double len = (b - a).norm();
  int samples = std::max(1, static_cast<int>(std::ceil(len)));
  for (int k = 1; k <= samples; ++k) {
    Vec3 p = a + (b - a) * (static_cast<double>(k) / samples);
    if (ground_point_blocked(scene, p.x, p.y, radius)) return true;
  }
  return false;
}

}  // namespace detail

struct LibraryGenConfig {
  double target_speed = 2.0;
  double target_radius = 0.5;
  double bounds_margin = 5.0;
  double max_turn_deg = 60.0;
};

// Generate `count` trajectories statistically matched to `targets`.
// Waypoints walk at z = 0 (ground targets) with exact per-trajectory length.
inline std::vector<Trajectory> generate_library(uint64_t seed, size_t count, const Scene& scene,
                                                const LibraryStats& targets = {},
                                                const LibraryGenConfig& cfg = {}) {
  const double margin = cfg.bounds_margin;
  const double lo_x = scene.bounds.min.x + margin, hi_x = scene.bounds.max.x - margin;
  const double lo_y = scene.bounds.min.y + margin, hi_y = scene.bounds.max.y - margin;
  if (lo_x >= hi_x || lo_y >= hi_y)
    throw input_error("generate_library: scene bounds too small for margin");

  std::vector<Trajectory> lib;
  lib.reserve(count);
  for (size_t idx = 0; idx < count; ++idx) {
    Rng rng(derive_seed(seed, 0x17A1u + idx));
    bool done = false;
    constexpr int kRestarts = 200;
    for (int restart = 0; restart < kRestarts && !done; ++restart) {
      int n = detail::sample_waypoint_count(rng, targets);
      double length = detail::sample_length(rng, targets);
      double seg = length / (n - 1);

      Trajectory traj;
      traj.target_speed = cfg.target_speed;
      bool ok = true;
      for (int attempt = 0; attempt < 100; ++attempt) {
        double x = rng.uniform(lo_x, hi_x);
        double y = rng.uniform(lo_y, hi_y);
        if (!detail::ground_point_blocked(scene, x, y, cfg.target_radius)) {
          traj.waypoints.push_back({x, y, 0.0});
          break;
        }
        if (attempt + 1 == 100) ok = false;
      }
      double theta = rng.uniform(-M_PI, M_PI);
      while (ok && static_cast<int>(traj.waypoints.size()) < n) {
        const Vec3& prev = traj.waypoints.back();
        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
          double cand_theta;
          if (attempt == 0 && traj.waypoints.size() == 1) {
            cand_theta = theta;
          } else if (attempt < 50) {
            cand_theta = theta + deg2rad(rng.uniform(-cfg.max_turn_deg, cfg.max_turn_deg));
          } else {
            // steer back toward the scene center when boxed in
            double to_center = std::atan2(-prev.y, -prev.x);
            cand_theta = to_center + deg2rad(rng.uniform(-cfg.max_turn_deg, cfg.max_turn_deg));
          }
          Vec3 cand{prev.x + seg * std::cos(cand_theta), prev.y + seg * std::sin(cand_theta), 0.0};
          if (cand.x < lo_x || cand.x > hi_x || cand.y < lo_y || cand.y > hi_y) continue;
          if (detail::segment_blocked(scene, prev, cand, cfg.target_radius)) continue;
          traj.waypoints.push_back(cand);
          theta = cand_theta;
          placed = true;
        }
        if (!placed) ok = false;
      }
      if (ok) {
        validate_trajectory(traj);
        lib.push_back(std::move(traj));
        done = true;
      }
    }
    if (!done) {
      std::ostringstream msg;
      msg << "generate_library: gave up on trajectory " << idx << " after retries";
      if (!lib.empty()) {
        LibraryStats got = library_stats(lib);
        msg << " (realized so far: count=" << got.count << " mean_len=" << got.length_mean << ")";
      }
      throw generation_error(msg.str());
    }
  }
  return lib;
}

inline void save_library(const std::vector<Trajectory>& lib, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("save_library: cannot open " + path);
  for (size_t i = 0; i < lib.size(); ++i) {
    nlohmann::json waypoints = nlohmann::json::array();
    for (const auto& w : lib[i].waypoints) waypoints.push_back(to_json(w));
    nlohmann::json line{{"id", i}, {"speed", lib[i].target_speed}, {"waypoints", waypoints}};
    out << line.dump() << "\n";
  }
}

inline std::vector<Trajectory> load_library(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw stage_error("load_library: missing file " + path);
  std::vector<Trajectory> lib;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    Trajectory traj;
    traj.target_speed = j.at("speed").get<double>();
    for (const auto& w : j.at("waypoints")) traj.waypoints.push_back(vec3_from_json(w));
    validate_trajectory(traj);
    lib.push_back(std::move(traj));
  }
  return lib;
}

inline nlohmann::json stats_to_json(const LibraryStats& s) {
  return nlohmann::json{{"count", s.count},
                        {"waypoint_mean", s.waypoint_mean},
                        {"waypoint_median", s.waypoint_median},
                        {"length_mean", s.length_mean},
                        {"length_median", s.length_median},
                        {"length_min", s.length_min},
                        {"length_max", s.length_max}};
}

inline std::string stats_to_csv(const LibraryStats& s) {
  std::ostringstream out;
  out.precision(17);
  out << "count,waypoint_mean,waypoint_median,length_mean,length_median,length_min,length_max\n"
      << s.count << "," << s.waypoint_mean << "," << s.waypoint_median << "," << s.length_mean
      << "," << s.length_median << "," << s.length_min << "," << s.length_max << "\n";
  return out.str();
}

}  // namespace detrack
