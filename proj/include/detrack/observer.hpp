// Egocentric and prophet observation rendering: per-pixel entity-id rasters,
// depth, distance-attenuated shade, visibility counts, ground-truth boxes.
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <vector>

#include <json.hpp>

#include "detrack/geometry.hpp"

namespace detrack {

struct CameraModel {
  int width = 96;
  int height = 54;       // 16:9, like the paper's 640x360
  double hfov_deg = 90.0;
  double pitch_deg = 0.0;  // egocentric default; prophet cameras override per pose

  void validate() const {
    if (width <= 0 || height <= 0) throw input_error("CameraModel: size must be positive");
    if (hfov_deg <= 0.0 || hfov_deg >= 180.0) throw input_error("CameraModel: hfov out of range");
  }
};

struct CameraPose {
  Vec3 position;
  double yaw = 0.0;    // radians, CCW from +x
  double pitch = 0.0;  // radians, positive up
};

// Pixel bounding box, inclusive-exclusive.
struct BBox {
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  int width() const { return x2 - x1; }
  int height() const { return y2 - y1; }
  long area() const { return static_cast<long>(width()) * height(); }
  bool valid() const { return x1 < x2 && y1 < y2; }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }
};

struct Observation {
  int width = 0;
  int height = 0;
  std::vector<int32_t> entity;  // kBackgroundId where no hit
  std::vector<double> depth;    // meters along the ray; 0 on background
  std::vector<double> shade;    // [0,1], distance-attenuated per-entity tone
  CameraPose pose;

  int32_t entity_at(int x, int y) const { return entity[static_cast<size_t>(y) * width + x]; }
  double shade_at(int x, int y) const { return shade[static_cast<size_t>(y) * width + x]; }
};

// Deterministic appearance tone per entity. The target is the brightest
// entity so trackers get a usable appearance signal without textures.
inline double entity_tone(int entity_id) {
  if (entity_id == kGroundId) return 0.25;
  if (entity_id == kTargetId) return 1.0;
  uint64_t h = mix_seed(static_cast<uint64_t>(entity_id));
  return 0.35 + 0.45 * (static_cast<double>(h >> 11) * 0x1.0p-53);
}

inline double shade_of(int entity_id, double depth) {
  return entity_tone(entity_id) / (1.0 + depth / 50.0);
}

namespace detail {

struct CameraBasis {
  Vec3 fwd, right, up;
  double tan_h, tan_v;
};

inline CameraBasis camera_basis(const CameraPose& pose, const CameraModel& model) {
  double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  double cp = std::cos(pose.pitch), sp = std::sin(pose.pitch);
  CameraBasis b;
  b.fwd = {cp * cy, cp * sy, sp};
  b.right = {sy, -cy, 0.0};
  b.up = {-cy * sp, -sy * sp, cp};
  b.tan_h = std::tan(deg2rad(model.hfov_deg) / 2.0);
  b.tan_v = b.tan_h * model.height / model.width;  // square pixels
  return b;
}

inline Vec3 pixel_ray(const CameraBasis& b, const CameraModel& model, int px, int py) {
  double u = (2.0 * (px + 0.5) / model.width - 1.0) * b.tan_h;
  double v = (1.0 - 2.0 * (py + 0.5) / model.height) * b.tan_v;
  return (b.fwd + b.right * u + b.up * v).normalized();
}

}  // namespace detail

inline constexpr double kRenderFar = 2000.0;

// Per-pixel nearest hit over the static scene plus dynamic entity boxes.
inline Observation render(const Scene& scene, const std::vector<Aabb>& dynamic_entities,
                          const CameraPose& pose, const CameraModel& model) {
  model.validate();
  if (!pose.position.finite() || !std::isfinite(pose.yaw) || !std::isfinite(pose.pitch))
    throw input_error("render: non-finite camera pose");

  Observation obs;
  obs.width = model.width;
  obs.height = model.height;
  obs.pose = pose;
  size_t n = static_cast<size_t>(model.width) * model.height;
  obs.entity.assign(n, kBackgroundId);
  obs.depth.assign(n, 0.0);
  obs.shade.assign(n, 0.0);

  auto basis = detail::camera_basis(pose, model);
  for (int py = 0; py < model.height; ++py) {
    for (int px = 0; px < model.width; ++px) {
      Vec3 dir = detail::pixel_ray(basis, model, px, py);
      std::optional<Hit> best = ray_cast(scene, pose.position, dir, kRenderFar);
      for (const auto& box : dynamic_entities) {
        double limit = best ? best->t : kRenderFar;
        if (auto t = ray_box(pose.position, dir, box, limit)) {
          if (!best || *t < best->t) best = Hit{*t, box.entity_id};
        }
      }
      if (best) {
        size_t i = static_cast<size_t>(py) * model.width + px;
        obs.entity[i] = best->entity_id;
        obs.depth[i] = best->t;
        obs.shade[i] = shade_of(best->entity_id, best->t);
      }
    }
  }
  return obs;
}

inline int visible_pixels(const Observation& obs, int target_id) {
  int count = 0;
  for (int32_t id : obs.entity)
    if (id == target_id) ++count;
  return count;
}

// Tight box over visible target pixels; nullopt when the target is invisible.
inline std::optional<BBox> gt_bbox(const Observation& obs, int target_id) {
  int x1 = obs.width, y1 = obs.height, x2 = -1, y2 = -1;
  for (int y = 0; y < obs.height; ++y)
    for (int x = 0; x < obs.width; ++x)
      if (obs.entity_at(x, y) == target_id) {
        x1 = std::min(x1, x);
        y1 = std::min(y1, y);
        x2 = std::max(x2, x);
        y2 = std::max(y2, y);
      }
  if (x2 < 0) return std::nullopt;
  return BBox{x1, y1, x2 + 1, y2 + 1};
}

inline CameraPose look_at(const Vec3& eye, const Vec3& at) {
  Vec3 d = at - eye;
  if (d.norm() == 0.0) throw input_error("look_at: target coincides with camera");
  CameraPose pose;
  pose.position = eye;
  pose.yaw = std::atan2(d.y, d.x);
  pose.pitch = std::atan2(d.z, d.norm_xy());
  return pose;
}

// Training-only prophet rig: two cameras sharing the drone's horizontal
// position at fixed altitudes, aimed at the target.
inline std::pair<Observation, Observation> prophet_observations(
    const Scene& scene, const std::vector<Aabb>& dynamic_entities, const Vec3& drone_position,
    const Vec3& target_position, const CameraModel& model, double eta_high = 20.0,
    double eta_low = 3.0) {
  if (eta_high > scene.bounds.max.z || eta_low > scene.bounds.max.z)
    throw input_error("prophet_observations: altitude above scene ceiling");
  Vec3 high_eye{drone_position.x, drone_position.y, eta_high};
  Vec3 low_eye{drone_position.x, drone_position.y, eta_low};
  Observation o_h = render(scene, dynamic_entities, look_at(high_eye, target_position), model);
  Observation o_l = render(scene, dynamic_entities, look_at(low_eye, target_position), model);
  return {std::move(o_h), std::move(o_l)};
}

// Observation noise knob (stands in for weather/domain rendering variation):
// Gaussian perturbation of the shade raster, clamped to [0,1].
inline void add_shade_noise(Observation& obs, double sigma, Rng& rng) {
  if (sigma <= 0.0) return;
  for (double& s : obs.shade) s = clamp(s + sigma * rng.normal(), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Observation dump: little-endian binary rasters behind a JSON header with
// exactly these fields: format, width, height, channels, dtype, pose, time,
// seed. Consumed by the offline training stages.

inline void save_observation(const Observation& obs, const std::string& path, double time,
                             uint64_t seed) {
  nlohmann::json header{
      {"format", 1},
      {"width", obs.width},
      {"height", obs.height},
      {"channels", 3},
      {"dtype", {"i32", "f64", "f64"}},
      {"pose",
       {{"position", to_json(obs.pose.position)}, {"yaw", obs.pose.yaw}, {"pitch", obs.pose.pitch}}},
      {"time", time},
      {"seed", seed}};
  std::string hdr = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("save_observation: cannot open " + path);
  uint32_t len = static_cast<uint32_t>(hdr.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(hdr.data(), hdr.size());
  out.write(reinterpret_cast<const char*>(obs.entity.data()), obs.entity.size() * sizeof(int32_t));
  out.write(reinterpret_cast<const char*>(obs.depth.data()), obs.depth.size() * sizeof(double));
  out.write(reinterpret_cast<const char*>(obs.shade.data()), obs.shade.size() * sizeof(double));
}

inline Observation load_observation(const std::string& path, double* time = nullptr,
                                    uint64_t* seed = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw stage_error("load_observation: missing file " + path);
  uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 4);
  std::string hdr(len, '\0');
  in.read(hdr.data(), len);
  nlohmann::json header = nlohmann::json::parse(hdr);
  if (header.at("format").get<int>() != 1)
    throw input_error("load_observation: unsupported format");
  Observation obs;
  obs.width = header.at("width").get<int>();
  obs.height = header.at("height").get<int>();
  obs.pose.position = vec3_from_json(header.at("pose").at("position"));
  obs.pose.yaw = header.at("pose").at("yaw").get<double>();
  obs.pose.pitch = header.at("pose").at("pitch").get<double>();
  if (time) *time = header.at("time").get<double>();
  if (seed) *seed = header.at("seed").get<uint64_t>();
  size_t n = static_cast<size_t>(obs.width) * obs.height;
  obs.entity.resize(n);
  obs.depth.resize(n);
  obs.shade.resize(n);
  in.read(reinterpret_cast<char*>(obs.entity.data()), n * sizeof(int32_t));
  in.read(reinterpret_cast<char*>(obs.depth.data()), n * sizeof(double));
  in.read(reinterpret_cast<char*>(obs.shade.data()), n * sizeof(double));
  if (!in) throw input_error("load_observation: truncated file " + path);
  return obs;
}

}  // namespace detrack
