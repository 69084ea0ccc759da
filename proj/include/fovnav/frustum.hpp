#pragma once

#include "fovnav/geometry.hpp"

namespace fovnav {

/// Sensor viewing volume: pyramidal frustum with angular half-extents and an
/// axial (forward-projected) depth window. Pitch > 0 tilts the view up.
struct Frustum {
  Vec3 origin;
  double yaw = 0.0;
  double pitch = 0.0;
  double h_fov = 0.0;
  double v_fov = 0.0;
  double depth_min = 0.0;
  double depth_max = 0.0;

  Frustum() = default;
  Frustum(const Vec3& origin_, double yaw_, double pitch_, double h_fov_,
          double v_fov_, double depth_min_, double depth_max_);

  Vec3 forward() const;
  Vec3 left() const;
  Vec3 up() const;

  /// Camera coordinates of a world point: (axial depth, left, up).
  Vec3 to_camera(const Vec3& q) const;
  /// World point from camera coordinates.
  Vec3 from_camera(const Vec3& c) const;

  /// World-space AABB enclosing the frustum volume.
  Aabb bounding_box() const;
};

/// Inclusive membership test against both angular bounds and the depth window.
bool frustum_contains(const Frustum& f, const Vec3& q);

/// March from p0 (must be inside f) toward p1 at the given step; returns the
/// last sampled point still inside f. The final sample is p1 itself, so a
/// fully contained segment returns p1 exactly.
Vec3 segment_frustum_exit(const Frustum& f, const Vec3& p0, const Vec3& p1,
                          double step);

}  // namespace fovnav
