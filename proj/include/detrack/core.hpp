// Core types shared across the workbench: 3D vector, error categories.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace detrack {

// Malformed caller input (bad shapes, out-of-range arguments, non-finite values).
struct input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Operation called in a state that does not admit it (uninitialized model,
// stepping a finished episode, decoding in inference mode).
struct state_error : std::logic_error {
  using std::logic_error::logic_error;
};

// Procedural generation could not satisfy its constraints within the retry budget.
struct generation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A pipeline stage is missing a prerequisite artifact.
struct stage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Meters, z up, ground plane at z = 0.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  double norm_xy() const { return std::hypot(x, y); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

  Vec3 normalized() const {
    double n = norm();
    if (n <= 0.0) throw input_error("Vec3::normalized: zero vector");
    return {x / n, y / n, z / n};
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * M_PI;
  a = std::fmod(a, two_pi);
  if (a <= -M_PI) a += two_pi;
  if (a > M_PI) a -= two_pi;
  return a;
}

inline double deg2rad(double d) { return d * M_PI / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / M_PI; }

template <typename T>
T clamp(T v, T lo, T hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace detrack
