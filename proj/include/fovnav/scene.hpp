#pragma once

#include <iosfwd>
#include <vector>

#include "fovnav/geometry.hpp"

namespace fovnav {

/// Solid vertical cylinder (tree-trunk style obstacle).
struct Cylinder {
  double cx = 0.0, cy = 0.0;
  double radius = 0.0;
  double z0 = 0.0, z1 = 0.0;

  bool contains(const Vec3& q) const {
    if (q.z < z0 || q.z > z1) return false;
    double dx = q.x - cx, dy = q.y - cy;
    return dx * dx + dy * dy <= radius * radius;
  }

  double distance(const Vec3& q) const {
    double dr = std::max(0.0, std::hypot(q.x - cx, q.y - cy) - radius);
    double dz = q.z < z0 ? z0 - q.z : (q.z > z1 ? q.z - z1 : 0.0);
    return std::hypot(dr, dz);
  }
};

/// Scripted moving box obstacle. The center follows a piecewise-linear
/// schedule and holds the first/last pose outside the scripted window.
/// Movers are rendered into depth frames but excluded from ground-truth
/// clearance audits and corridor checks.
struct MoverScript {
  Vec3 half_extents;
  std::vector<double> times;   // strictly increasing, at least one entry
  std::vector<Vec3> centers;   // same length as times

  Vec3 center_at(double t) const;
  Aabb box_at(double t) const;
};

struct GroundTruthScene {
  Aabb bounds{{0, 0, 0}, {1, 1, 1}};
  std::vector<Aabb> boxes;
  std::vector<Cylinder> cylinders;
  std::vector<MoverScript> movers;
};

/// Smallest t >= 0 such that origin + t*dir is on the solid; +inf on miss.
/// dir need not be unit length (t is in units of |dir|); a ray starting
/// inside returns 0.
double ray_box(const Vec3& origin, const Vec3& dir, const Aabb& box);
double ray_cylinder(const Vec3& origin, const Vec3& dir, const Cylinder& cyl);

/// Nearest hit over every primitive at scene time `time` (movers included);
/// +inf if nothing is hit.
double scene_raycast(const GroundTruthScene& scene, double time,
                     const Vec3& origin, const Vec3& dir);

/// Euclidean distance from p to the union of *static* primitives (0 inside
/// one); +inf for a scene with no static primitives.
double static_distance(const GroundTruthScene& scene, const Vec3& p);

/// Deterministic text form; save/load round-trips byte-exactly.
void save_scene(std::ostream& os, const GroundTruthScene& scene);
GroundTruthScene load_scene(std::istream& is);

}  // namespace fovnav
