#include "fovnav/collision.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

namespace fovnav {

namespace {

Aabb inflate(const Aabb& b, double r) {
  return {{b.lo.x - r, b.lo.y - r, b.lo.z - r}, {b.hi.x + r, b.hi.y + r, b.hi.z + r}};
}

bool descend(const OccupancyMap& map, VoxelKey key, const Segment& seg, double radius) {
  const MapConfig& cfg = map.config();
  if (!segment_intersects_box(seg, inflate(key_cell(cfg, key), radius))) return false;
  if (map.leaf_exists(key)) return map.is_occupied(key);
  if (!map.is_internal(key)) return false;  // fully unknown region
  for (const VoxelKey& c : child_keys(cfg, key)) {
    if (descend(map, c, seg, radius)) return true;
  }
  return false;
}

}  // namespace

bool detect_collision(const OccupancyMap& map, const Segment& seg, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("detect_collision: radius must be >= 0");
  Segment clipped;
  if (!clip_segment_to_box(seg, inflate(map.config().bounds(), radius), clipped)) return false;
  return descend(map, VoxelKey{0, 0}, clipped, radius);
}

bool naive_collision(const OccupancyMap& map, const Segment& seg, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("naive_collision: radius must be >= 0");
  const MapConfig& cfg = map.config();
  if (radius == 0.0) {
    bool hit = false;
    traverse_leaf_cells(cfg, seg.a, seg.b, [&](const VoxelKey& k) {
      if (map.is_occupied(k)) {
        hit = true;
        return false;
      }
      return true;
    });
    return hit;
  }
  Vec3 d = seg.b - seg.a;
  double len = d.norm();
  double step = cfg.leaf_edge * 0.5;
  long n = len > 0.0 ? static_cast<long>(std::ceil(len / step)) : 0;
  for (long k = 0; k <= n; ++k) {
    Vec3 q = (k == n) ? seg.b : seg.a + d * (static_cast<double>(k) * step / len);
    if (map.ball_intersects_occupied(q, radius)) return true;
  }
  return false;
}

Segment sample_segment(const MapConfig& cfg, double length_voxels, std::uint64_t& state) {
  std::mt19937_64 rng(state);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const Aabb b = cfg.bounds();
  const double len = length_voxels * cfg.leaf_edge;
  for (int tries = 0; tries < 10000; ++tries) {
    Vec3 a{b.lo.x + uni(rng) * (b.hi.x - b.lo.x), b.lo.y + uni(rng) * (b.hi.y - b.lo.y),
           b.lo.z + uni(rng) * (b.hi.z - b.lo.z)};
    // Uniform direction.
    double z = 2.0 * uni(rng) - 1.0;
    double phi = 2.0 * kPi * uni(rng);
    double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    Vec3 dir{s * std::cos(phi), s * std::sin(phi), z};
    Vec3 e = a + dir * len;
    if (b.contains(e)) {
      state = rng();
      return {a, e};
    }
  }
  throw std::runtime_error("sample_segment: rejection sampling failed (length too large?)");
}

std::vector<CollisionBenchRow> benchmark_collision(const OccupancyMap& map,
                                                   const std::vector<double>& lengths_voxels,
                                                   int trials, std::uint64_t seed) {
  if (trials < 0) throw std::invalid_argument("benchmark_collision: trials must be >= 0");
  using clock = std::chrono::steady_clock;
  std::vector<CollisionBenchRow> rows;
  std::uint64_t state = seed ? seed : 1;
  volatile bool sink = false;  // keep the predicate calls observable

  for (double lv : lengths_voxels) {
    std::vector<Segment> segs;
    segs.reserve(trials);
    for (int i = 0; i < trials; ++i) segs.push_back(sample_segment(map.config(), lv, state));

    int warm = trials / 10;
    for (int i = 0; i < warm; ++i) {
      sink = detect_collision(map, segs[i], 0.0);
      sink = naive_collision(map, segs[i], 0.0);
    }

    CollisionBenchRow row;
    row.length_voxels = lv;
    if (trials > 0) {
      auto t0 = clock::now();
      for (const Segment& s : segs) sink = detect_collision(map, s, 0.0);
      auto t1 = clock::now();
      for (const Segment& s : segs) sink = naive_collision(map, s, 0.0);
      auto t2 = clock::now();
      row.detect_us = std::chrono::duration<double, std::micro>(t1 - t0).count() / trials;
      row.naive_us = std::chrono::duration<double, std::micro>(t2 - t1).count() / trials;
    }
    rows.push_back(row);
  }
  (void)sink;
  return rows;
}

void write_benchmark_csv(std::ostream& os, const std::vector<CollisionBenchRow>& rows) {
  os << "length_voxels,detect_us,naive_us\n";
  char buf[96];
  for (const CollisionBenchRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g\n", r.length_voxels, r.detect_us, r.naive_us);
    os << buf;
  }
}

}  // namespace fovnav
