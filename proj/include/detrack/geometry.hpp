// Static 3D world: ground plane, axis-aligned box obstacles, ray queries,
// sphere collision tests, seeded scene generation.
#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "detrack/core.hpp"
#include "detrack/rng.hpp"

namespace detrack {

// Reserved entity ids. The drone itself is never rendered.
inline constexpr int kGroundId = 0;
inline constexpr int kTargetId = 1;
inline constexpr int kFirstObstacleId = 2;
inline constexpr int kBackgroundId = -1;

// Boundary epsilon for ray intersections; grazing hits count as hits.
inline constexpr double kGeomEps = 1e-9;

struct Aabb {
  Vec3 min;
  Vec3 max;
  int entity_id = kBackgroundId;

  bool valid() const {
    return min.finite() && max.finite() && min.x <= max.x && min.y <= max.y && min.z <= max.z;
  }

  bool contains(const Aabb& inner) const {
    return inner.min.x >= min.x && inner.min.y >= min.y && inner.min.z >= min.z &&
           inner.max.x <= max.x && inner.max.y <= max.y && inner.max.z <= max.z;
  }

  Vec3 center() const { return (min + max) * 0.5; }

  // Squared distance from a point to this box (0 if inside).
  double dist2(const Vec3& p) const {
    double dx = std::max({min.x - p.x, 0.0, p.x - max.x});
    double dy = std::max({min.y - p.y, 0.0, p.y - max.y});
    double dz = std::max({min.z - p.z, 0.0, p.z - max.z});
    return dx * dx + dy * dy + dz * dz;
  }
};

struct Hit {
  double t = 0.0;
  int entity_id = kBackgroundId;
};

// Slab intersection of a ray with a box. Returns the entry parameter, or the
// exit parameter when the origin is inside the box. nullopt on miss.
inline std::optional<double> ray_box(const Vec3& origin, const Vec3& dir, const Aabb& box,
                                     double t_max) {
  double tn = -std::numeric_limits<double>::infinity();
  double tf = std::numeric_limits<double>::infinity();
  const double o[3] = {origin.x, origin.y, origin.z};
  const double d[3] = {dir.x, dir.y, dir.z};
  const double lo[3] = {box.min.x, box.min.y, box.min.z};
  const double hi[3] = {box.max.x, box.max.y, box.max.z};
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-300) {
      if (o[i] < lo[i] || o[i] > hi[i]) return std::nullopt;
      continue;
    }
    double inv = 1.0 / d[i];
    double t1 = (lo[i] - o[i]) * inv;
    double t2 = (hi[i] - o[i]) * inv;
    if (t1 > t2) std::swap(t1, t2);
    tn = std::max(tn, t1);
    tf = std::min(tf, t2);
    if (tn > tf) return std::nullopt;
  }
  double t = tn >= kGeomEps ? tn : tf;
  if (t < kGeomEps || t > t_max) return std::nullopt;
  return t;
}

enum class SceneStyle { Town, Rural, Park, City };

inline const char* to_string(SceneStyle s) {
  switch (s) {
    case SceneStyle::Town: return "Town";
    case SceneStyle::Rural: return "Rural";
    case SceneStyle::Park: return "Park";
    case SceneStyle::City: return "City";
  }
  return "Town";
}

inline SceneStyle scene_style_from_string(const std::string& s) {
  if (s == "Town") return SceneStyle::Town;
  if (s == "Rural") return SceneStyle::Rural;
  if (s == "Park") return SceneStyle::Park;
  if (s == "City") return SceneStyle::City;
  throw input_error("unknown scene style: " + s);
}

// Immutable after construction; safe for concurrent reads.
struct Scene {
  std::vector<Aabb> obstacles;
  Aabb bounds;
  SceneStyle style = SceneStyle::Town;
  uint64_t seed = 0;

  int next_entity_id() const {
    int id = kFirstObstacleId;
    for (const auto& b : obstacles) id = std::max(id, b.entity_id + 1);
    return id;
  }
};

// Nearest intersection among obstacles and the ground plane, 0 < t <= t_max.
inline std::optional<Hit> ray_cast(const Scene& scene, const Vec3& origin, const Vec3& dir,
                                   double t_max) {
  if (!origin.finite() || !dir.finite() || !std::isfinite(t_max))
    throw input_error("ray_cast: non-finite input");
  if (t_max <= 0.0) throw input_error("ray_cast: t_max must be positive");

  std::optional<Hit> best;
  if (std::abs(dir.z) >= 1e-300) {
    double t = -origin.z / dir.z;
    if (t >= kGeomEps && t <= t_max) best = Hit{t, kGroundId};
  }
  for (const auto& box : scene.obstacles) {
    double limit = best ? best->t : t_max;
    if (auto t = ray_box(origin, dir, box, limit)) {
      if (!best || *t < best->t) best = Hit{*t, box.entity_id};
    }
  }
  return best;
}

// True iff a sphere intersects any obstacle or the ground half-space z < 0.
inline bool collides(const Scene& scene, const Vec3& center, double radius) {
  if (radius <= 0.0) throw input_error("collides: radius must be positive");
  if (center.z < radius) return true;
  double r2 = radius * radius;
  for (const auto& box : scene.obstacles)
    if (box.dist2(center) <= r2) return true;
  return false;
}

struct DensityParams {
  int count = 40;
  double min_xy = 3.0;    // horizontal obstacle extent range, meters
  double max_xy = 12.0;
  double min_h = 3.0;     // height range, meters
  double max_h = 15.0;
  double corridor = 1.0;  // guaranteed gap between obstacles, >= drone diameter

  bool valid() const {
    return count >= 0 && min_xy > 0 && max_xy >= min_xy && min_h > 0 && max_h >= min_h &&
           corridor >= 0;
  }
};

inline DensityParams style_density(SceneStyle style) {
  switch (style) {
    case SceneStyle::Town: return {40, 4.0, 12.0, 4.0, 15.0, 1.0};
    case SceneStyle::Rural: return {15, 6.0, 18.0, 3.0, 8.0, 1.0};
    case SceneStyle::Park: return {25, 2.0, 8.0, 3.0, 9.0, 1.0};
    case SceneStyle::City: return {60, 6.0, 16.0, 10.0, 40.0, 1.0};
  }
  return {};
}

// Reproducible for a fixed seed. Obstacles sit on the ground, stay inside
// the bounds, and keep pairwise gaps of at least `corridor` meters.
inline Scene generate_scene(uint64_t seed, SceneStyle style, const DensityParams& density,
                            const Aabb& bounds = {{-120.0, -120.0, 0.0}, {120.0, 120.0, 60.0}, kBackgroundId}) {
  if (!density.valid()) throw input_error("generate_scene: invalid density params");
  if (!bounds.valid()) throw input_error("generate_scene: invalid bounds");

  Scene scene;
  scene.bounds = bounds;
  scene.style = style;
  scene.seed = seed;
  Rng rng(derive_seed(seed, 0xA5CEu));

  constexpr int kRetries = 200;
  for (int i = 0; i < density.count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kRetries && !placed; ++attempt) {
      double sx = rng.uniform(density.min_xy, density.max_xy);
      double sy = rng.uniform(density.min_xy, density.max_xy);
      double sz = rng.uniform(density.min_h, std::min(density.max_h, bounds.max.z));
      double cx = rng.uniform(bounds.min.x + sx / 2, bounds.max.x - sx / 2);
      double cy = rng.uniform(bounds.min.y + sy / 2, bounds.max.y - sy / 2);
      Aabb box{{cx - sx / 2, cy - sy / 2, 0.0},
               {cx + sx / 2, cy + sy / 2, sz},
               kFirstObstacleId + i};
      bool overlaps = false;
      for (const auto& other : scene.obstacles) {
        // boxes all rest on the ground, so only horizontal separation matters
        bool sep = box.max.x + density.corridor <= other.min.x ||
                   other.max.x + density.corridor <= box.min.x ||
                   box.max.y + density.corridor <= other.min.y ||
                   other.max.y + density.corridor <= box.min.y;
        if (!sep) {
          overlaps = true;
          break;
        }
      }
      if (!overlaps) {
        scene.obstacles.push_back(box);
        placed = true;
      }
    }
    if (!placed)
      throw generation_error("generate_scene: could not place obstacle " + std::to_string(i) +
                             " of " + std::to_string(density.count) + " without overlap");
  }
  return scene;
}

inline nlohmann::json to_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

inline Vec3 vec3_from_json(const nlohmann::json& j) {
  return Vec3{j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

inline nlohmann::json scene_to_json(const Scene& scene) {
  nlohmann::json obstacles = nlohmann::json::array();
  for (const auto& b : scene.obstacles)
    obstacles.push_back({{"id", b.entity_id}, {"min", to_json(b.min)}, {"max", to_json(b.max)}});
  return nlohmann::json{{"format", 1},
                        {"seed", scene.seed},
                        {"style", to_string(scene.style)},
                        {"bounds", {{"min", to_json(scene.bounds.min)}, {"max", to_json(scene.bounds.max)}}},
                        {"obstacles", obstacles}};
}

inline Scene scene_from_json(const nlohmann::json& j) {
  if (j.at("format").get<int>() != 1) throw input_error("scene_from_json: unsupported format");
  Scene scene;
  scene.seed = j.at("seed").get<uint64_t>();
  scene.style = scene_style_from_string(j.at("style").get<std::string>());
  scene.bounds.min = vec3_from_json(j.at("bounds").at("min"));
  scene.bounds.max = vec3_from_json(j.at("bounds").at("max"));
  for (const auto& ob : j.at("obstacles"))
    scene.obstacles.push_back(
        Aabb{vec3_from_json(ob.at("min")), vec3_from_json(ob.at("max")), ob.at("id").get<int>()});
  return scene;
}

}  // namespace detrack
