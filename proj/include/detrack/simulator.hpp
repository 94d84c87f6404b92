// Closed-loop environment: drone kinematics under speed/yaw-rate limits,
// target and distractor advancement, collision events, episode lifecycle.
#pragma once

#include <functional>
#include <vector>

#include "detrack/metrics.hpp"
#include "detrack/observer.hpp"
#include "detrack/tracker.hpp"
#include "detrack/trajectory.hpp"

namespace detrack {

// Discrete movement commands, in the paper's listing order.
enum class Move { Forward = 0, Backward, Upward, Downward, Leftward, Rightward, Stop };
inline constexpr int kMoveCount = 7;

inline const char* to_string(Move m) {
  static constexpr const char* names[] = {"Forward",  "Backward",  "Upward", "Downward",
                                          "Leftward", "Rightward", "Stop"};
  return names[static_cast<int>(m)];
}

// Flight action. Positive yaw_rate turns clockwise (nose right); bounds are
// clamped on construction.
struct Action {
  Move move = Move::Stop;
  double yaw_rate = 0.0;   // deg/s in [-45, 45]
  double speed_cmd = 0.0;  // m/s in [0, 8]

  Action() = default;
  Action(Move m, double yaw_deg_s, double speed)
      : move(m), yaw_rate(clamp(yaw_deg_s, -45.0, 45.0)), speed_cmd(clamp(speed, 0.0, 8.0)) {}
};

struct DroneState {
  Vec3 position;
  double yaw = 0.0;    // radians, wrapped to (-pi, pi]
  double speed = 0.0;  // m/s, [0, 8]
  int collision = 0;   // c_t
};

// 1 iff the collision flag rises 0 -> 1.
inline int collision_event(int prev_c, int cur_c) {
  if ((prev_c != 0 && prev_c != 1) || (cur_c != 0 && cur_c != 1))
    throw input_error("collision_event: flags must be 0 or 1");
  return (prev_c == 0 && cur_c == 1) ? 1 : 0;
}

struct SimConfig {
  double dt = 0.5;
  double max_speed = 8.0;
  double max_yaw_rate_deg = 45.0;
  double drone_radius = 0.3;
  double altitude_floor = 0.5;
  double spawn_behind = 8.0;   // meters behind the target's initial heading
  double spawn_altitude = 5.0;
  int distractors = 2;         // 0..4
  double target_half_xy = 0.4; // target box half extent, meters
  double target_height = 2.0;
  double obs_noise_sigma = 0.0;
  CameraModel camera;
  uint64_t seed = 0;
};

struct StepOutcome {
  int dc = 0;         // collision-rising event
  int collision = 0;  // c_t after the step
  bool done = false;
  bool target_visible = false;  // placeholder, filled by the episode loop
};

struct EpisodeState {
  int t = 0;
  DroneState drone;
  double target_s = 0.0;  // arc-length progress, meters
  std::vector<double> distractor_s;
  bool done = false;
};

class Environment {
 public:
  Environment(const Scene& scene, const Trajectory& trajectory, const SimConfig& cfg)
      : scene_(&scene), traj_(trajectory), cfg_(cfg) {
    validate_trajectory(traj_);
    total_length_ = trajectory_length(traj_);
    steps_total_ = static_cast<int>(std::ceil(total_length_ / (traj_.target_speed * cfg_.dt)));
    if (steps_total_ < 1) throw input_error("Environment: zero-length episode");
    spawn_drone();
    spawn_distractors();
  }

  const Scene& scene() const { return *scene_; }
  const SimConfig& config() const { return cfg_; }
  const EpisodeState& state() const { return state_; }
  const DroneState& drone() const { return state_.drone; }
  int steps_total() const { return steps_total_; }
  double total_length() const { return total_length_; }

  Vec3 target_position() const { return point_at_arclength(traj_, state_.target_s); }
  Vec3 target_heading() const { return heading_at_arclength(traj_, state_.target_s); }

  // Target and distractor boxes at the current instant.
  std::vector<Aabb> dynamic_entities() const {
    std::vector<Aabb> boxes;
    boxes.push_back(entity_box(target_position(), kTargetId));
    for (size_t i = 0; i < distractor_trajs_.size(); ++i) {
      Vec3 p = point_at_arclength(distractor_trajs_[i], state_.distractor_s[i]);
      boxes.push_back(entity_box(p, first_distractor_id_ + static_cast<int>(i)));
    }
    return boxes;
  }

  // Egocentric render from the drone pose (pitch fixed at the camera default),
  // with the configured observation noise applied to the shade channel.
  Observation render_ego() {
    CameraPose pose{state_.drone.position, state_.drone.yaw, deg2rad(cfg_.camera.pitch_deg)};
    Observation obs = render(*scene_, dynamic_entities(), pose, cfg_.camera);
    if (cfg_.obs_noise_sigma > 0.0) {
      Rng rng(derive_seed(cfg_.seed, 0x0B5E ^ static_cast<uint64_t>(state_.t)));
      add_shade_noise(obs, cfg_.obs_noise_sigma, rng);
    }
    return obs;
  }

  StepOutcome step(const Action& action) {
    if (state_.done) throw state_error("Environment::step: episode already done");
    DroneState& d = state_.drone;
    int prev_c = d.collision;

    double yaw_rate = clamp(action.yaw_rate, -cfg_.max_yaw_rate_deg, cfg_.max_yaw_rate_deg);
    d.yaw = wrap_angle(d.yaw - deg2rad(yaw_rate) * cfg_.dt);
    d.speed = clamp(action.speed_cmd, 0.0, cfg_.max_speed);

    Vec3 dir = move_direction(action.move, d.yaw);
    Vec3 target = d.position + dir * (d.speed * cfg_.dt);
    target.z = clamp(target.z, cfg_.altitude_floor, scene_->bounds.max.z);
    target.x = clamp(target.x, scene_->bounds.min.x, scene_->bounds.max.x);
    target.y = clamp(target.y, scene_->bounds.min.y, scene_->bounds.max.y);

    // Substep integration: penetration per substep stays shallow so the
    // nearest-face push-out clamps the drone to the surface it entered.
    Vec3 delta = target - d.position;
    double len = delta.norm();
    int substeps = len > 0 ? static_cast<int>(std::ceil(len / (cfg_.drone_radius * 0.5))) : 1;
    Vec3 pos = d.position;
    Vec3 inc = delta * (1.0 / substeps);
    bool contact = false;
    for (int k = 0; k < substeps; ++k) {
      pos += inc;
      contact |= resolve_collisions(pos);
    }
    d.position = pos;
    d.collision = contact ? 1 : 0;

    state_.t += 1;
    state_.target_s = std::min(state_.t * traj_.target_speed * cfg_.dt, total_length_);
    for (size_t i = 0; i < distractor_trajs_.size(); ++i) {
      double len = trajectory_length(distractor_trajs_[i]);
      state_.distractor_s[i] = std::min(
          state_.t * distractor_trajs_[i].target_speed * cfg_.dt, len);
    }
    state_.done = state_.t >= steps_total_;

    StepOutcome out;
    out.collision = d.collision;
    out.dc = collision_event(prev_c, d.collision);
    out.done = state_.done;
    return out;
  }

 private:
  Aabb entity_box(const Vec3& ground_pos, int id) const {
    return Aabb{{ground_pos.x - cfg_.target_half_xy, ground_pos.y - cfg_.target_half_xy, ground_pos.z},
                {ground_pos.x + cfg_.target_half_xy, ground_pos.y + cfg_.target_half_xy,
                 ground_pos.z + cfg_.target_height},
                id};
  }

  static Vec3 move_direction(Move m, double yaw) {
    double c = std::cos(yaw), s = std::sin(yaw);
    switch (m) {
      case Move::Forward: return {c, s, 0.0};
      case Move::Backward: return {-c, -s, 0.0};
      case Move::Upward: return {0.0, 0.0, 1.0};
      case Move::Downward: return {0.0, 0.0, -1.0};
      case Move::Leftward: return {-s, c, 0.0};
      case Move::Rightward: return {s, -c, 0.0};
      case Move::Stop: return {0.0, 0.0, 0.0};
    }
    return {0.0, 0.0, 0.0};
  }

  // Push the drone sphere out of any penetrated obstacle (and off the ground
  // half-space). Returns true when contact occurred.
  bool resolve_collisions(Vec3& pos) const {
    bool contact = false;
    if (pos.z < cfg_.drone_radius) {
      pos.z = cfg_.drone_radius;
      contact = true;
    }
    for (int iter = 0; iter < 4; ++iter) {
      const Aabb* worst = nullptr;
      double worst_d2 = cfg_.drone_radius * cfg_.drone_radius;
      for (const auto& box : scene_->obstacles) {
        double d2 = box.dist2(pos);
        if (d2 <= worst_d2) {
          worst_d2 = d2;
          worst = &box;
        }
      }
      if (!worst) break;
      contact = true;
      pos = push_out(pos, *worst, cfg_.drone_radius);
    }
    return contact;
  }

  static Vec3 push_out(const Vec3& p, const Aabb& box, double radius) {
    Vec3 closest{clamp(p.x, box.min.x, box.max.x), clamp(p.y, box.min.y, box.max.y),
                 clamp(p.z, box.min.z, box.max.z)};
    Vec3 delta = p - closest;
    double dist = delta.norm();
    if (dist > 0.0) return closest + delta * (radius / dist);
    // center inside the box: exit through the nearest face
    double exits[6] = {p.x - box.min.x, box.max.x - p.x, p.y - box.min.y,
                       box.max.y - p.y, p.z - box.min.z, box.max.z - p.z};
    int best = 0;
    for (int i = 1; i < 6; ++i)
      if (exits[i] < exits[best]) best = i;
    Vec3 out = p;
    switch (best) {
      case 0: out.x = box.min.x - radius; break;
      case 1: out.x = box.max.x + radius; break;
      case 2: out.y = box.min.y - radius; break;
      case 3: out.y = box.max.y + radius; break;
      case 4: out.z = box.min.z - radius; break;
      case 5: out.z = box.max.z + radius; break;
    }
    return out;
  }

  void spawn_drone() {
    Vec3 heading = heading_at_arclength(traj_, 0.0);
    Vec3 base = traj_.waypoints.front() - heading * cfg_.spawn_behind;
    double yaw = std::atan2(heading.y, heading.x);
    // deterministic fallback scan if the nominal spawn pose is blocked
    for (int attempt = 0; attempt < 12; ++attempt) {
      double extra_back = 2.0 * (attempt / 4);
      double extra_up = 1.0 * (attempt % 4);
      Vec3 pos = base - heading * extra_back;
      pos.z = cfg_.spawn_altitude + extra_up;
      if (!detrack::collides(*scene_, pos, cfg_.drone_radius)) {
        state_.drone.position = pos;
        state_.drone.yaw = wrap_angle(yaw);
        return;
      }
    }
    throw generation_error("Environment: no collision-free spawn pose near trajectory start");
  }

  void spawn_distractors() {
    Rng rng(derive_seed(cfg_.seed, 0xD157u));
    int want = clamp(cfg_.distractors, 0, 4);
    Vec3 anchor = traj_.waypoints.front();
    for (int i = 0; i < want; ++i) {
      Trajectory t;
      t.target_speed = rng.uniform(1.0, 3.0);
      bool ok = false;
      for (int attempt = 0; attempt < 40 && !ok; ++attempt) {
        t.waypoints.clear();
        double ang = rng.uniform(-M_PI, M_PI);
        double dist = rng.uniform(6.0, 25.0);
        Vec3 start{anchor.x + dist * std::cos(ang), anchor.y + dist * std::sin(ang), 0.0};
        start.x = clamp(start.x, scene_->bounds.min.x + 2.0, scene_->bounds.max.x - 2.0);
        start.y = clamp(start.y, scene_->bounds.min.y + 2.0, scene_->bounds.max.y - 2.0);
        if (detail::ground_point_blocked(*scene_, start.x, start.y, cfg_.target_half_xy)) continue;
        t.waypoints.push_back(start);
        double theta = rng.uniform(-M_PI, M_PI);
        int n = 6 + static_cast<int>(rng.integer(10));
        while (static_cast<int>(t.waypoints.size()) < n) {
          const Vec3& prev = t.waypoints.back();
          bool placed = false;
          for (int a = 0; a < 30 && !placed; ++a) {
            double cand_theta = theta + deg2rad(rng.uniform(-60.0, 60.0));
            double seg = rng.uniform(4.0, 10.0);
            Vec3 cand{prev.x + seg * std::cos(cand_theta), prev.y + seg * std::sin(cand_theta), 0.0};
            if (cand.x < scene_->bounds.min.x + 2.0 || cand.x > scene_->bounds.max.x - 2.0 ||
                cand.y < scene_->bounds.min.y + 2.0 || cand.y > scene_->bounds.max.y - 2.0)
              continue;
            if (detail::segment_blocked(*scene_, prev, cand, cfg_.target_half_xy)) continue;
            t.waypoints.push_back(cand);
            theta = cand_theta;
            placed = true;
          }
          if (!placed) break;
        }
        ok = t.waypoints.size() >= 2;
      }
      if (ok) {
        distractor_trajs_.push_back(std::move(t));
        state_.distractor_s.push_back(0.0);
      }
    }
    first_distractor_id_ = scene_->next_entity_id();
  }

  const Scene* scene_;
  Trajectory traj_;
  SimConfig cfg_;
  EpisodeState state_;
  std::vector<Trajectory> distractor_trajs_;
  int first_distractor_id_ = kFirstObstacleId;
  double total_length_ = 0.0;
  int steps_total_ = 0;
};

// Policy and tracker plug points for the episode loop. The tracker closure is
// responsible for initializing itself from the first frame's ground truth.
using PolicyFn = std::function<Action(const Observation&, const TrackPrediction&, const Environment&, int)>;
using TrackerFn = std::function<TrackPrediction(const Observation&, const Environment&, int)>;

// Run one closed-loop episode. Per-step visibility and IoU are computed on
// the pre-step observation; poses are logged after the step so the final row
// carries the episode's final horizontal distance.
inline EpisodeRecord run_episode(const Scene& scene, const Trajectory& trajectory,
                                 const PolicyFn& policy, const TrackerFn& tracker,
                                 const SimConfig& cfg, uint64_t trajectory_id = 0) {
  Environment env(scene, trajectory, cfg);
  EpisodeRecord rec;
  rec.trajectory_id = trajectory_id;
  rec.seed = cfg.seed;
  rec.steps.reserve(env.steps_total());

  for (int t = 0; !env.state().done; ++t) {
    Observation obs = env.render_ego();
    int p_vis = visible_pixels(obs, kTargetId);
    std::optional<BBox> gt = gt_bbox(obs, kTargetId);
    TrackPrediction pred = tracker(obs, env, t);
    double iou_t = iou(pred.bbox, gt);

    Action action = policy(obs, pred, env, t);
    StepOutcome out = env.step(action);

    StepRecord s;
    s.t = t;
    s.p_vis = p_vis;
    s.iou = iou_t;
    s.dc = out.dc;
    s.collision = out.collision;
    s.drone_pos = env.drone().position;
    s.drone_yaw = env.drone().yaw;
    s.target_pos = env.target_position();
    s.move = static_cast<int>(action.move);
    s.yaw_rate = action.yaw_rate;
    s.speed_cmd = action.speed_cmd;
    s.track_box = pred.bbox;
    s.track_score = pred.score;
    s.gt_box = gt;
    rec.steps.push_back(s);
  }
  return rec;
}

// Standard tracker adapters -------------------------------------------------

// NCC tracker initialized from the ground-truth box of the first frame.
inline TrackerFn make_ncc_tracker() {
  auto state = std::make_shared<NccTracker>();
  return [state](const Observation& obs, const Environment&, int t) -> TrackPrediction {
    if (t == 0) {
      std::optional<BBox> gt = gt_bbox(obs, kTargetId);
      if (gt) state->init(obs, *gt);
    }
    if (!state->initialized()) return {std::nullopt, 0.0};
    return state->track(obs);
  };
}

inline TrackerFn make_oracle_tracker(double sigma_px = 0.0, double p_lost = 0.0) {
  return [sigma_px, p_lost](const Observation& obs, const Environment& env, int t) {
    uint64_t seed = derive_seed(env.config().seed, 0x07AC ^ static_cast<uint64_t>(t));
    return oracle_track(obs, kTargetId, sigma_px, p_lost, seed);
  };
}

}  // namespace detrack
