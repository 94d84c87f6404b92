#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "detrack/metrics.hpp"
#include "detrack/rng.hpp"

using namespace detrack;

namespace {

EpisodeRecord record_from(const std::vector<int>& p_vis, const std::vector<double>& ious) {
  EpisodeRecord rec;
  for (size_t i = 0; i < p_vis.size(); ++i) {
    StepRecord s;
    s.t = static_cast<int>(i);
    s.p_vis = p_vis[i];
    s.iou = ious[i];
    rec.steps.push_back(s);
  }
  return rec;
}

EpisodeRecord random_record(Rng& rng, int min_len = 1, int max_len = 60) {
  int n = min_len + static_cast<int>(rng.integer(max_len - min_len + 1));
  EpisodeRecord rec;
  for (int i = 0; i < n; ++i) {
    StepRecord s;
    s.t = i;
    s.p_vis = static_cast<int>(rng.integer(40));
    s.iou = rng.uniform();
    s.dc = rng.uniform() < 0.1 ? 1 : 0;
    s.drone_pos = {rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(1, 10)};
    s.target_pos = {rng.uniform(-50, 50), rng.uniform(-50, 50), 0};
    rec.steps.push_back(s);
  }
  return rec;
}

BBox random_box(Rng& rng, int extent = 40) {
  int x1 = static_cast<int>(rng.integer(extent));
  int y1 = static_cast<int>(rng.integer(extent));
  int w = 1 + static_cast<int>(rng.integer(12));
  int h = 1 + static_cast<int>(rng.integer(12));
  return BBox{x1, y1, x1 + w, y1 + h};
}

}  // namespace

TEST_CASE("iou hand cases", "[metrics]") {
  BBox a{0, 0, 4, 4};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(BBox{0, 0, 2, 2}, BBox{5, 5, 8, 8}) == 0.0);
  CHECK(iou(BBox{0, 0, 4, 4}, BBox{2, 2, 6, 6}) == 4.0 / 28.0);
  CHECK(iou(std::nullopt, std::optional<BBox>(a)) == 0.0);
  CHECK(iou(std::optional<BBox>(a), std::nullopt) == 0.0);
}

TEST_CASE("iou symmetry and identity properties", "[metrics]") {
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    BBox a = random_box(rng);
    BBox b = random_box(rng);
    CHECK(iou(a, b) == iou(b, a));
    CHECK(iou(a, a) == 1.0);
    double v = iou(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("visible_rate hand cases", "[metrics]") {
  CHECK(visible_rate(record_from({5, 9, 3}, {0, 0, 0}), 1) == 1.0);
  CHECK(visible_rate(record_from({10, 0, 5}, {0, 0, 0}), 1) == Catch::Approx(2.0 / 3.0));
  CHECK(visible_rate(record_from({10, 0, 5}, {0, 0, 0}), 11) == 0.0);
  CHECK_THROWS_AS(visible_rate(EpisodeRecord{}, 1), input_error);
}

TEST_CASE("mean_iou hand cases", "[metrics]") {
  CHECK(mean_iou(record_from({1, 1}, {1.0, 1.0})) == 1.0);
  CHECK(mean_iou(record_from({1, 1}, {0.2, 0.4})) == Catch::Approx(0.3).margin(1e-15));
  CHECK(mean_iou(record_from({0, 0}, {0.0, 0.0})) == 0.0);
  CHECK_THROWS_AS(mean_iou(EpisodeRecord{}), input_error);
}

TEST_CASE("tracking_rate uses strict IoU inequality", "[metrics]") {
  // visible but IoU exactly at tau_trk -> not counted
  CHECK(tracking_rate(record_from({5}, {0.5}), 1, 0.5) == 0.0);
  CHECK(tracking_rate(record_from({5, 5}, {0.6, 0.2}), 1, 0.5) == 0.5);
  CHECK(tracking_rate(record_from({0, 0}, {0.9, 0.9}), 1, 0.5) == 0.0);
}

TEST_CASE("success_rate hand cases", "[metrics]") {
  auto make_rec = [](double dist) {
    EpisodeRecord rec;
    StepRecord s;
    s.drone_pos = {dist, 0, 5};
    s.target_pos = {0, 0, 0};
    rec.steps.push_back(s);
    return rec;
  };
  std::vector<EpisodeRecord> recs{make_rec(1.0), make_rec(10.0)};
  CHECK(success_rate(recs, 5.0) == 0.5);
  std::vector<EpisodeRecord> zeros{make_rec(0.0), make_rec(0.0)};
  CHECK(success_rate(zeros, 5.0) == 1.0);
  CHECK(success_rate(recs, 0.0) == 0.0);
  CHECK_THROWS_AS(success_rate(std::span<const EpisodeRecord>{}, 5.0), input_error);
}

TEST_CASE("metrics agree with a brute-force reimplementation", "[metrics]") {
  Rng rng(99);
  std::vector<EpisodeRecord> records;
  for (int i = 0; i < 50; ++i) records.push_back(random_record(rng));

  int tau_vis = 3;
  double tau_trk = 0.5;
  double tau_d = 25.0;
  for (const auto& rec : records) {
    double vr = 0, mi = 0, tr = 0;
    for (const auto& s : rec.steps) {
      vr += s.p_vis >= tau_vis ? 1.0 : 0.0;
      mi += s.iou;
      tr += (s.p_vis >= tau_vis && s.iou > tau_trk) ? 1.0 : 0.0;
    }
    double n = static_cast<double>(rec.steps.size());
    CHECK(std::abs(visible_rate(rec, tau_vis) - vr / n) < 1e-12);
    CHECK(std::abs(mean_iou(rec) - mi / n) < 1e-12);
    CHECK(std::abs(tracking_rate(rec, tau_vis, tau_trk) - tr / n) < 1e-12);
  }
  double sr = 0;
  for (const auto& rec : records) {
    const auto& last = rec.steps.back();
    double dx = last.drone_pos.x - last.target_pos.x;
    double dy = last.drone_pos.y - last.target_pos.y;
    sr += std::sqrt(dx * dx + dy * dy) <= tau_d ? 1.0 : 0.0;
  }
  CHECK(std::abs(success_rate(records, tau_d) - sr / records.size()) < 1e-12);
}

TEST_CASE("TR is bounded by VR and the IoU fraction", "[metrics]") {
  Rng rng(123);
  for (int i = 0; i < 1000; ++i) {
    EpisodeRecord rec = random_record(rng);
    double tr = tracking_rate(rec, 3, 0.5);
    CHECK(tr <= visible_rate(rec, 3) + 1e-15);
    double frac = 0;
    for (const auto& s : rec.steps) frac += s.iou > 0.5 ? 1.0 : 0.0;
    CHECK(tr <= frac / rec.steps.size() + 1e-15);
  }
}

TEST_CASE("metric monotonicity in thresholds", "[metrics]") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    EpisodeRecord rec = random_record(rng);
    CHECK(visible_rate(rec, 5) <= visible_rate(rec, 2));
    CHECK(tracking_rate(rec, 5, 0.6) <= tracking_rate(rec, 2, 0.6));
    CHECK(tracking_rate(rec, 2, 0.6) <= tracking_rate(rec, 2, 0.3));
  }
  std::vector<EpisodeRecord> recs;
  for (int i = 0; i < 30; ++i) recs.push_back(random_record(rng));
  CHECK(success_rate(recs, 5.0) <= success_rate(recs, 20.0));
}

TEST_CASE("thresholds scale with resolution", "[metrics]") {
  CHECK(Thresholds::scaled(640, 360).tau_vis == 25);
  CHECK(Thresholds::scaled(96, 54).tau_vis == 1);
  CHECK(Thresholds::scaled(320, 180).tau_vis == 6);
  CHECK_THROWS_AS(
      [] {
        Thresholds t;
        t.tau_trk = 0.0;
        t.validate();
      }(),
      input_error);
}

TEST_CASE("episode record JSONL round-trip", "[metrics]") {
  Rng rng(31);
  EpisodeRecord rec = random_record(rng, 5, 20);
  rec.trajectory_id = 42;
  rec.seed = 1337;
  rec.steps[0].track_box = BBox{1, 2, 5, 8};
  rec.steps[0].gt_box = BBox{0, 1, 6, 9};

  std::string path = "test_episode_roundtrip.jsonl";
  save_episode(rec, path);
  EpisodeRecord back = load_episode(path);
  CHECK(back.trajectory_id == 42);
  CHECK(back.seed == 1337);
  REQUIRE(back.steps.size() == rec.steps.size());
  CHECK(back.steps[0].track_box.has_value());
  CHECK(back.steps[0].track_box->x2 == 5);
  CHECK(back.final_distance_xy() == Catch::Approx(rec.final_distance_xy()).margin(1e-12));

  // serialization is deterministic
  std::ostringstream s1, s2;
  save_episode(rec, s1);
  save_episode(rec, s2);
  CHECK(s1.str() == s2.str());
  std::remove(path.c_str());
}
