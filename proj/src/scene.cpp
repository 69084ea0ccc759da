#include "fovnav/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace fovnav {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Intersect [t0,t1] with the slab lo <= o + t*d <= hi; false if empty.
bool slab(double o, double d, double lo, double hi, double& t0, double& t1) {
  if (d == 0.0) return o >= lo && o <= hi;
  double inv = 1.0 / d;
  double ta = (lo - o) * inv, tb = (hi - o) * inv;
  if (ta > tb) std::swap(ta, tb);
  t0 = std::max(t0, ta);
  t1 = std::min(t1, tb);
  return t0 <= t1;
}
}  // namespace

Vec3 MoverScript::center_at(double t) const {
  if (times.empty() || times.size() != centers.size())
    throw std::invalid_argument("mover schedule malformed");
  if (t <= times.front()) return centers.front();
  if (t >= times.back()) return centers.back();
  // Find the segment containing t.
  std::size_t i = 1;
  while (times[i] < t) ++i;
  double u = (t - times[i - 1]) / (times[i] - times[i - 1]);
  return centers[i - 1] + (centers[i] - centers[i - 1]) * u;
}

Aabb MoverScript::box_at(double t) const {
  Vec3 c = center_at(t);
  return {c - half_extents, c + half_extents};
}

double ray_box(const Vec3& origin, const Vec3& dir, const Aabb& box) {
  double t0 = 0.0, t1 = kInf;
  if (!slab(origin.x, dir.x, box.lo.x, box.hi.x, t0, t1)) return kInf;
  if (!slab(origin.y, dir.y, box.lo.y, box.hi.y, t0, t1)) return kInf;
  if (!slab(origin.z, dir.z, box.lo.z, box.hi.z, t0, t1)) return kInf;
  return t0;
}

double ray_cylinder(const Vec3& origin, const Vec3& dir, const Cylinder& cyl) {
  double t0 = 0.0, t1 = kInf;
  if (!slab(origin.z, dir.z, cyl.z0, cyl.z1, t0, t1)) return kInf;
  double ox = origin.x - cyl.cx, oy = origin.y - cyl.cy;
  double a = dir.x * dir.x + dir.y * dir.y;
  double c = ox * ox + oy * oy - cyl.radius * cyl.radius;
  if (a == 0.0) return c <= 0.0 ? t0 : kInf;  // vertical ray
  double b = ox * dir.x + oy * dir.y;
  double disc = b * b - a * c;
  if (disc < 0.0) return kInf;
  double sq = std::sqrt(disc);
  double tr0 = (-b - sq) / a, tr1 = (-b + sq) / a;
  t0 = std::max(t0, tr0);
  t1 = std::min(t1, tr1);
  return t0 <= t1 ? t0 : kInf;
}

double scene_raycast(const GroundTruthScene& scene, double time,
                     const Vec3& origin, const Vec3& dir) {
  double best = kInf;
  for (const Aabb& b : scene.boxes) best = std::min(best, ray_box(origin, dir, b));
  for (const Cylinder& c : scene.cylinders)
    best = std::min(best, ray_cylinder(origin, dir, c));
  for (const MoverScript& m : scene.movers)
    best = std::min(best, ray_box(origin, dir, m.box_at(time)));
  return best;
}

double static_distance(const GroundTruthScene& scene, const Vec3& p) {
  double best = kInf;
  for (const Aabb& b : scene.boxes) best = std::min(best, point_box_distance(p, b));
  for (const Cylinder& c : scene.cylinders) best = std::min(best, c.distance(p));
  return best;
}

namespace {
void put(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

void put3(std::ostream& os, const Vec3& v) {
  put(os, v.x);
  os << ' ';
  put(os, v.y);
  os << ' ';
  put(os, v.z);
}
}  // namespace

void save_scene(std::ostream& os, const GroundTruthScene& s) {
  os << "fovnav-scene 1\n";
  os << "bounds ";
  put3(os, s.bounds.lo);
  os << ' ';
  put3(os, s.bounds.hi);
  os << '\n';
  os << "boxes " << s.boxes.size() << '\n';
  for (const Aabb& b : s.boxes) {
    put3(os, b.lo);
    os << ' ';
    put3(os, b.hi);
    os << '\n';
  }
  os << "cylinders " << s.cylinders.size() << '\n';
  for (const Cylinder& c : s.cylinders) {
    put(os, c.cx);
    os << ' ';
    put(os, c.cy);
    os << ' ';
    put(os, c.radius);
    os << ' ';
    put(os, c.z0);
    os << ' ';
    put(os, c.z1);
    os << '\n';
  }
  os << "movers " << s.movers.size() << '\n';
  for (const MoverScript& m : s.movers) {
    put3(os, m.half_extents);
    os << ' ' << m.times.size() << '\n';
    for (std::size_t i = 0; i < m.times.size(); ++i) {
      put(os, m.times[i]);
      os << ' ';
      put3(os, m.centers[i]);
      os << '\n';
    }
  }
}

GroundTruthScene load_scene(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "fovnav-scene" || version != 1)
    throw std::runtime_error("scene load: bad header");
  GroundTruthScene s;
  std::string tag;
  std::size_t n = 0;
  if (!(is >> tag) || tag != "bounds") throw std::runtime_error("scene load: bounds");
  is >> s.bounds.lo.x >> s.bounds.lo.y >> s.bounds.lo.z >> s.bounds.hi.x >>
      s.bounds.hi.y >> s.bounds.hi.z;
  if (!(is >> tag >> n) || tag != "boxes") throw std::runtime_error("scene load: boxes");
  s.boxes.resize(n);
  for (Aabb& b : s.boxes)
    is >> b.lo.x >> b.lo.y >> b.lo.z >> b.hi.x >> b.hi.y >> b.hi.z;
  if (!(is >> tag >> n) || tag != "cylinders")
    throw std::runtime_error("scene load: cylinders");
  s.cylinders.resize(n);
  for (Cylinder& c : s.cylinders) is >> c.cx >> c.cy >> c.radius >> c.z0 >> c.z1;
  if (!(is >> tag >> n) || tag != "movers")
    throw std::runtime_error("scene load: movers");
  s.movers.resize(n);
  for (MoverScript& m : s.movers) {
    std::size_t k = 0;
    is >> m.half_extents.x >> m.half_extents.y >> m.half_extents.z >> k;
    m.times.resize(k);
    m.centers.resize(k);
    for (std::size_t i = 0; i < k; ++i)
      is >> m.times[i] >> m.centers[i].x >> m.centers[i].y >> m.centers[i].z;
  }
  if (!is) throw std::runtime_error("scene load: truncated");
  return s;
}

}  // namespace fovnav
