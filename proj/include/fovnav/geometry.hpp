#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fovnav {

constexpr double kPi = 3.14159265358979323846;

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " is not finite");
}

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {
    require_finite(x, "Vec3.x");
    require_finite(y, "Vec3.y");
    require_finite(z, "Vec3.z");
  }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  double norm_inf() const { return std::max({std::fabs(x), std::fabs(y), std::fabs(z)}); }
  Vec3 normalized() const {
    double n = norm();
    if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
    return *this / n;
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Wrap an angle into (-pi, pi].
inline double normalize_angle(double a) {
  require_finite(a, "angle");
  double w = std::remainder(a, 2.0 * kPi);  // (-pi, pi], ties to even
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

/// Shortest signed angular difference a - b, in (-pi, pi].
inline double angle_diff(double a, double b) { return normalize_angle(a - b); }

/// Position plus yaw; yaw stored normalized to (-pi, pi].
struct Pose4 {
  Vec3 p;
  double psi = 0.0;

  Pose4() = default;
  Pose4(const Vec3& p_, double psi_) : p(p_), psi(normalize_angle(psi_)) {}
};

struct Segment {
  Vec3 a, b;
};

/// Axis-aligned box, used for voxel cells and scene primitives.
struct Aabb {
  Vec3 lo, hi;

  bool contains(const Vec3& q) const {
    return q.x >= lo.x && q.x <= hi.x && q.y >= lo.y && q.y <= hi.y &&
           q.z >= lo.z && q.z <= hi.z;
  }
  Vec3 center() const { return (lo + hi) * 0.5; }
  Vec3 clamp(const Vec3& q) const {
    return {std::clamp(q.x, lo.x, hi.x), std::clamp(q.y, lo.y, hi.y),
            std::clamp(q.z, lo.z, hi.z)};
  }
};

/// Euclidean distance from a point to a box (0 inside).
inline double point_box_distance(const Vec3& q, const Aabb& b) {
  return (q - b.clamp(q)).norm();
}

/// Slab test: does the segment intersect the box? Touching counts.
inline bool segment_intersects_box(const Segment& s, const Aabb& box) {
  Vec3 d = s.b - s.a;
  double t0 = 0.0, t1 = 1.0;
  const double dv[3] = {d.x, d.y, d.z};
  const double av[3] = {s.a.x, s.a.y, s.a.z};
  const double lov[3] = {box.lo.x, box.lo.y, box.lo.z};
  const double hiv[3] = {box.hi.x, box.hi.y, box.hi.z};
  for (int i = 0; i < 3; ++i) {
    if (dv[i] == 0.0) {
      if (av[i] < lov[i] || av[i] > hiv[i]) return false;
    } else {
      double inv = 1.0 / dv[i];
      double ta = (lov[i] - av[i]) * inv;
      double tb = (hiv[i] - av[i]) * inv;
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return false;
    }
  }
  return true;
}

/// Clip a segment to a box; returns false if the segment misses it entirely.
inline bool clip_segment_to_box(const Segment& s, const Aabb& box, Segment& out) {
  Vec3 d = s.b - s.a;
  double t0 = 0.0, t1 = 1.0;
  const double dv[3] = {d.x, d.y, d.z};
  const double av[3] = {s.a.x, s.a.y, s.a.z};
  const double lov[3] = {box.lo.x, box.lo.y, box.lo.z};
  const double hiv[3] = {box.hi.x, box.hi.y, box.hi.z};
  for (int i = 0; i < 3; ++i) {
    if (dv[i] == 0.0) {
      if (av[i] < lov[i] || av[i] > hiv[i]) return false;
    } else {
      double inv = 1.0 / dv[i];
      double ta = (lov[i] - av[i]) * inv;
      double tb = (hiv[i] - av[i]) * inv;
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return false;
    }
  }
  out.a = s.a + d * t0;
  out.b = s.a + d * t1;
  return true;
}

}  // namespace fovnav
