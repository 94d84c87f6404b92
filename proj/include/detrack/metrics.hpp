// The four benchmark metrics (VR, mIoU, TR, SR), per-frame IoU, and the
// per-step episode record they consume.
#pragma once

#include <fstream>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "detrack/observer.hpp"

namespace detrack {

struct Thresholds {
  int tau_vis = 1;       // visibility threshold, pixels (resolution-scaled)
  double tau_trk = 0.5;  // IoU threshold for effective tracking
  double tau_d = 10.0;   // trajectory success distance, meters

  void validate() const {
    if (tau_vis <= 0 || tau_trk <= 0.0 || tau_trk >= 1.0 || tau_d <= 0.0)
      throw input_error("Thresholds: all thresholds must be strictly positive");
  }

  // 25 px at the paper's 640x360 scales with the configured pixel count.
  static Thresholds scaled(int width, int height) {
    Thresholds t;
    double full = 640.0 * 360.0;
    t.tau_vis = std::max(1, static_cast<int>(std::lround(25.0 * (width * height) / full)));
    return t;
  }
};

struct StepRecord {
  int t = 0;
  int p_vis = 0;
  double iou = 0.0;
  int dc = 0;         // collision-rising event during this step
  int collision = 0;  // contact flag c_t after this step
  Vec3 drone_pos;
  double drone_yaw = 0.0;
  Vec3 target_pos;
  int move = 0;  // executed action
  double yaw_rate = 0.0;
  double speed_cmd = 0.0;
  std::optional<BBox> track_box;
  double track_score = 0.0;
  std::optional<BBox> gt_box;
};

struct EpisodeRecord {
  uint64_t trajectory_id = 0;
  uint64_t seed = 0;
  std::vector<StepRecord> steps;

  size_t length() const { return steps.size(); }

  double final_distance_xy() const {
    if (steps.empty()) throw input_error("EpisodeRecord: empty record");
    const StepRecord& last = steps.back();
    return (last.drone_pos - last.target_pos).norm_xy();
  }
};

// |a∩b| / |a∪b| for pixel boxes; 0 when disjoint.
inline double iou(const BBox& a, const BBox& b) {
  if (!a.valid() || !b.valid()) throw input_error("iou: invalid box");
  long ix = std::max(0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  long iy = std::max(0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  long inter = ix * iy;
  long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

// Either box absent (target invisible or tracker lost) counts as 0.
inline double iou(const std::optional<BBox>& a, const std::optional<BBox>& b) {
  if (!a || !b) return 0.0;
  return iou(*a, *b);
}

inline double visible_rate(const EpisodeRecord& rec, int tau_vis) {
  if (rec.steps.empty()) throw input_error("visible_rate: empty record");
  size_t visible = 0;
  for (const auto& s : rec.steps)
    if (s.p_vis >= tau_vis) ++visible;
  return static_cast<double>(visible) / rec.steps.size();
}

inline double mean_iou(const EpisodeRecord& rec) {
  if (rec.steps.empty()) throw input_error("mean_iou: empty record");
  double sum = 0.0;
  for (const auto& s : rec.steps) sum += s.iou;
  return sum / rec.steps.size();
}

// Frames counted only when visible AND IoU strictly above tau_trk.
inline double tracking_rate(const EpisodeRecord& rec, int tau_vis, double tau_trk) {
  if (rec.steps.empty()) throw input_error("tracking_rate: empty record");
  size_t tracked = 0;
  for (const auto& s : rec.steps)
    if (s.p_vis >= tau_vis && s.iou > tau_trk) ++tracked;
  return static_cast<double>(tracked) / rec.steps.size();
}

inline double success_rate(std::span<const EpisodeRecord> records, double tau_d) {
  if (records.empty()) throw input_error("success_rate: no records");
  size_t ok = 0;
  for (const auto& rec : records)
    if (rec.final_distance_xy() <= tau_d) ++ok;
  return static_cast<double>(ok) / records.size();
}

// ---------------------------------------------------------------------------
// Episode record persistence: JSON Lines, one meta line then one line per step.

namespace detail {
inline nlohmann::json bbox_to_json(const std::optional<BBox>& b) {
  if (!b) return nullptr;
  return nlohmann::json::array({b->x1, b->y1, b->x2, b->y2});
}

inline std::optional<BBox> bbox_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return BBox{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}
}  // namespace detail

inline void save_episode(const EpisodeRecord& rec, std::ostream& out) {
  nlohmann::json meta{{"meta", {{"format", 1}, {"trajectory_id", rec.trajectory_id}, {"seed", rec.seed}}}};
  out << meta.dump() << "\n";
  for (const auto& s : rec.steps) {
    nlohmann::json line{{"t", s.t},
                        {"p_vis", s.p_vis},
                        {"iou", s.iou},
                        {"dc", s.dc},
                        {"col", s.collision},
                        {"drone", to_json(s.drone_pos)},
                        {"yaw", s.drone_yaw},
                        {"target", to_json(s.target_pos)},
                        {"move", s.move},
                        {"yaw_rate", s.yaw_rate},
                        {"speed_cmd", s.speed_cmd},
                        {"track", detail::bbox_to_json(s.track_box)},
                        {"score", s.track_score},
                        {"gt", detail::bbox_to_json(s.gt_box)}};
    out << line.dump() << "\n";
  }
}

inline void save_episode(const EpisodeRecord& rec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("save_episode: cannot open " + path);
  save_episode(rec, out);
}

inline EpisodeRecord load_episode(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw stage_error("load_episode: missing file " + path);
  EpisodeRecord rec;
  std::string line;
  bool have_meta = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    if (!have_meta) {
      const auto& m = j.at("meta");
      rec.trajectory_id = m.at("trajectory_id").get<uint64_t>();
      rec.seed = m.at("seed").get<uint64_t>();
      have_meta = true;
      continue;
    }
    StepRecord s;
    s.t = j.at("t").get<int>();
    s.p_vis = j.at("p_vis").get<int>();
    s.iou = j.at("iou").get<double>();
    s.dc = j.at("dc").get<int>();
    s.collision = j.at("col").get<int>();
    s.drone_pos = vec3_from_json(j.at("drone"));
    s.drone_yaw = j.at("yaw").get<double>();
    s.target_pos = vec3_from_json(j.at("target"));
    s.move = j.at("move").get<int>();
    s.yaw_rate = j.at("yaw_rate").get<double>();
    s.speed_cmd = j.at("speed_cmd").get<double>();
    s.track_box = detail::bbox_from_json(j.at("track"));
    s.track_score = j.at("score").get<double>();
    s.gt_box = detail::bbox_from_json(j.at("gt"));
    rec.steps.push_back(s);
  }
  return rec;
}

}  // namespace detrack
