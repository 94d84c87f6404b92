#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "detrack/trajectory.hpp"

using namespace detrack;

namespace {
Trajectory make(std::vector<Vec3> wps) {
  Trajectory t;
  t.waypoints = std::move(wps);
  return t;
}
}  // namespace

TEST_CASE("trajectory_length hand cases", "[trajectory]") {
  CHECK(trajectory_length(make({{0, 0, 0}, {3, 4, 0}})) == Catch::Approx(5.0).margin(1e-15));
  CHECK(trajectory_length(make({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}})) ==
        Catch::Approx(2.0).margin(1e-15));
  CHECK_THROWS_AS(trajectory_length(make({{0, 0, 0}})), input_error);
}

TEST_CASE("degenerate repeated waypoint is rejected", "[trajectory]") {
  CHECK_THROWS_AS(validate_trajectory(make({{1, 1, 0}, {1, 1, 0}})), input_error);
  CHECK_THROWS_AS(validate_trajectory(make({{0, 0, 0}})), input_error);
}

TEST_CASE("point_at_arclength endpoints and interiors", "[trajectory]") {
  Trajectory t = make({{0, 0, 0}, {10, 0, 0}});
  CHECK(point_at_arclength(t, 0.0) == Vec3{0, 0, 0});
  CHECK(point_at_arclength(t, 10.0) == Vec3{10, 0, 0});
  Vec3 p = point_at_arclength(t, 2.5);
  CHECK(p.x == Catch::Approx(2.5).margin(1e-15));
  CHECK(p.y == 0.0);
}

TEST_CASE("point_at_arclength hits waypoints exactly at prefix lengths", "[trajectory]") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Trajectory t;
    int n = 2 + static_cast<int>(rng.integer(8));
    for (int i = 0; i < n; ++i)
      t.waypoints.push_back({rng.uniform(-50, 50), rng.uniform(-50, 50), 0.0});
    validate_trajectory(t);
    double acc = 0.0;
    for (size_t k = 0; k < t.waypoints.size(); ++k) {
      if (k > 0) acc += (t.waypoints[k] - t.waypoints[k - 1]).norm();
      Vec3 p = point_at_arclength(t, acc);
      CHECK(p.x == Catch::Approx(t.waypoints[k].x).margin(1e-9));
      CHECK(p.y == Catch::Approx(t.waypoints[k].y).margin(1e-9));
    }
  }
}

TEST_CASE("trajectory_length is translation invariant", "[trajectory]") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    Trajectory t;
    int n = 2 + static_cast<int>(rng.integer(10));
    for (int i = 0; i < n; ++i)
      t.waypoints.push_back({rng.uniform(-50, 50), rng.uniform(-50, 50), 0.0});
    Vec3 shift{rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-5, 5)};
    Trajectory shifted = t;
    for (auto& w : shifted.waypoints) w += shift;
    CHECK(trajectory_length(t) == Catch::Approx(trajectory_length(shifted)).epsilon(1e-12));
  }
}

TEST_CASE("generate_library is deterministic", "[trajectory]") {
  Scene scene = generate_scene(2, SceneStyle::Town, style_density(SceneStyle::Town));
  auto a = generate_library(123, 20, scene);
  auto b = generate_library(123, 20, scene);
  std::ostringstream sa, sb;
  for (const auto& t : a)
    for (const auto& w : t.waypoints) sa << w.x << "," << w.y << ";";
  for (const auto& t : b)
    for (const auto& w : t.waypoints) sb << w.x << "," << w.y << ";";
  CHECK(sa.str() == sb.str());
}

TEST_CASE("generate_library single trajectory is valid", "[trajectory]") {
  Scene scene = generate_scene(2, SceneStyle::Park, style_density(SceneStyle::Park));
  auto lib = generate_library(9, 1, scene);
  REQUIRE(lib.size() == 1);
  validate_trajectory(lib[0]);
}

TEST_CASE("generated library matches the calibration targets", "[trajectory][slow]") {
  Scene empty;
  empty.bounds = {{-120, -120, 0}, {120, 120, 60}, kBackgroundId};
  auto lib = generate_library(2024, 1000, empty);
  REQUIRE(lib.size() == 1000);
  LibraryStats s = library_stats(lib);
  for (const auto& t : lib) {
    CHECK(t.waypoints.size() >= 2);
    CHECK(t.waypoints.size() <= 99);
  }
  // paper mean length 80.09 m, +-15% band
  CHECK(s.length_mean > 68.08);
  CHECK(s.length_mean < 92.10);
  CHECK(s.length_min >= 8.27 - 1e-9);
  CHECK(s.length_max <= 482.74 + 1e-9);
}

TEST_CASE("library_stats hand cases", "[trajectory]") {
  Trajectory t4 = make({{0, 0, 0}, {4, 0, 0}});
  Trajectory t6 = make({{0, 0, 0}, {6, 0, 0}});
  LibraryStats s = library_stats({t4, t6});
  CHECK(s.length_mean == Catch::Approx(5.0).margin(1e-15));
  CHECK(s.length_median == Catch::Approx(4.0).margin(1e-15));  // lower-middle rule
  LibraryStats single = library_stats({t4});
  CHECK(single.length_mean == single.length_median);
  CHECK_THROWS_AS(library_stats({}), input_error);
}

TEST_CASE("library_stats agrees with an independent streaming recount", "[trajectory]") {
  Scene scene = generate_scene(4, SceneStyle::Rural, style_density(SceneStyle::Rural));
  auto lib = generate_library(55, 100, scene);
  LibraryStats s = library_stats(lib);

  // streaming re-computation with Welford-style accumulation
  double mean_len = 0.0, mean_cnt = 0.0;
  double mn = std::numeric_limits<double>::infinity(), mx = -mn;
  std::vector<double> lens, cnts;
  size_t k = 0;
  for (const auto& t : lib) {
    double len = 0;
    for (size_t i = 0; i + 1 < t.waypoints.size(); ++i) {
      Vec3 d = t.waypoints[i + 1] - t.waypoints[i];
      len += std::sqrt(d.dot(d));
    }
    ++k;
    mean_len += (len - mean_len) / k;
    mean_cnt += (t.waypoints.size() - mean_cnt) / k;
    mn = std::min(mn, len);
    mx = std::max(mx, len);
    lens.push_back(len);
    cnts.push_back(double(t.waypoints.size()));
  }
  std::sort(lens.begin(), lens.end());
  std::sort(cnts.begin(), cnts.end());
  CHECK(s.length_mean == Catch::Approx(mean_len).margin(1e-9));
  CHECK(s.waypoint_mean == Catch::Approx(mean_cnt).margin(1e-9));
  CHECK(s.length_min == Catch::Approx(mn).margin(1e-9));
  CHECK(s.length_max == Catch::Approx(mx).margin(1e-9));
  CHECK(s.length_median == Catch::Approx(lens[(lens.size() - 1) / 2]).margin(1e-9));
  CHECK(s.waypoint_median == Catch::Approx(cnts[(cnts.size() - 1) / 2]).margin(1e-9));
}

TEST_CASE("library JSONL round-trip", "[trajectory]") {
  Scene scene = generate_scene(8, SceneStyle::Town, style_density(SceneStyle::Town));
  auto lib = generate_library(31, 10, scene);
  std::string path = "test_library_roundtrip.jsonl";
  save_library(lib, path);
  auto back = load_library(path);
  REQUIRE(back.size() == lib.size());
  for (size_t i = 0; i < lib.size(); ++i) {
    REQUIRE(back[i].waypoints.size() == lib[i].waypoints.size());
    for (size_t j = 0; j < lib[i].waypoints.size(); ++j)
      CHECK((back[i].waypoints[j] - lib[i].waypoints[j]).norm() == 0.0);
  }
  std::remove(path.c_str());
}

TEST_CASE("generated waypoints avoid obstacles", "[trajectory]") {
  Scene scene = generate_scene(13, SceneStyle::City, style_density(SceneStyle::City));
  auto lib = generate_library(77, 30, scene);
  const double r = LibraryGenConfig{}.target_radius;
  for (const auto& t : lib)
    for (const auto& w : t.waypoints) {
      Vec3 c{w.x, w.y, r};
      for (const auto& box : scene.obstacles) CHECK(box.dist2(c) > r * r - 1e-12);
    }
}
