#include "fovnav/frustum.hpp"

#include <vector>

namespace fovnav {

Frustum::Frustum(const Vec3& origin_, double yaw_, double pitch_, double h_fov_,
                 double v_fov_, double depth_min_, double depth_max_)
    : origin(origin_),
      yaw(yaw_),
      pitch(pitch_),
      h_fov(h_fov_),
      v_fov(v_fov_),
      depth_min(depth_min_),
      depth_max(depth_max_) {
  require_finite(yaw, "Frustum.yaw");
  require_finite(pitch, "Frustum.pitch");
  if (!(h_fov > 0.0 && h_fov < kPi)) throw std::invalid_argument("Frustum.h_fov out of (0, pi)");
  if (!(v_fov > 0.0 && v_fov < kPi)) throw std::invalid_argument("Frustum.v_fov out of (0, pi)");
  if (!(depth_min >= 0.0 && depth_min < depth_max))
    throw std::invalid_argument("Frustum depth window invalid");
}

Vec3 Frustum::forward() const {
  double cy = std::cos(yaw), sy = std::sin(yaw);
  double cp = std::cos(pitch), sp = std::sin(pitch);
  return {cy * cp, sy * cp, sp};
}

Vec3 Frustum::left() const { return {-std::sin(yaw), std::cos(yaw), 0.0}; }

Vec3 Frustum::up() const {
  double cy = std::cos(yaw), sy = std::sin(yaw);
  double cp = std::cos(pitch), sp = std::sin(pitch);
  return {-cy * sp, -sy * sp, cp};
}

Vec3 Frustum::to_camera(const Vec3& q) const {
  Vec3 d = q - origin;
  return {d.dot(forward()), d.dot(left()), d.dot(up())};
}

Vec3 Frustum::from_camera(const Vec3& c) const {
  return origin + forward() * c.x + left() * c.y + up() * c.z;
}

Aabb Frustum::bounding_box() const {
  // Corners of the near and far rectangles in camera coordinates.
  double ty = std::tan(h_fov * 0.5), tz = std::tan(v_fov * 0.5);
  Aabb box{origin, origin};
  for (double d : {depth_min, depth_max}) {
    for (int sy = -1; sy <= 1; sy += 2) {
      for (int sz = -1; sz <= 1; sz += 2) {
        Vec3 w = from_camera({d, sy * d * ty, sz * d * tz});
        box.lo.x = std::min(box.lo.x, w.x);
        box.lo.y = std::min(box.lo.y, w.y);
        box.lo.z = std::min(box.lo.z, w.z);
        box.hi.x = std::max(box.hi.x, w.x);
        box.hi.y = std::max(box.hi.y, w.y);
        box.hi.z = std::max(box.hi.z, w.z);
      }
    }
  }
  return box;
}

bool frustum_contains(const Frustum& f, const Vec3& q) {
  Vec3 c = f.to_camera(q);
  if (c.x < f.depth_min || c.x > f.depth_max) return false;
  if (std::fabs(std::atan2(c.y, c.x)) > f.h_fov * 0.5) return false;
  if (std::fabs(std::atan2(c.z, c.x)) > f.v_fov * 0.5) return false;
  return true;
}

Vec3 segment_frustum_exit(const Frustum& f, const Vec3& p0, const Vec3& p1,
                          double step) {
  if (!(step > 0.0)) throw std::invalid_argument("segment_frustum_exit: step must be > 0");
  if (!frustum_contains(f, p0))
    throw std::invalid_argument("segment_frustum_exit: p0 not inside frustum");
  Vec3 d = p1 - p0;
  double len = d.norm();
  if (len == 0.0) return p0;
  Vec3 dir = d / len;
  Vec3 last = p0;
  long n = static_cast<long>(std::ceil(len / step));
  for (long k = 1; k <= n; ++k) {
    Vec3 q = (k == n) ? p1 : p0 + dir * (k * step);
    if (!frustum_contains(f, q)) return last;
    last = q;
  }
  return p1;
}

}  // namespace fovnav
