#include "fovnav/occupancy_map.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fovnav {

OccupancyMap::OccupancyMap(MapConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  clamp_hi_ = static_cast<float>(logit(cfg_.clamp_p));
  delta_hit_ = static_cast<float>(logit(cfg_.p_hit));
  delta_miss_ = static_cast<float>(logit(cfg_.p_miss));
  occ_threshold_ = static_cast<float>(logit(cfg_.p_occ));
  ray_threshold_ = static_cast<float>(logit(cfg_.p_ray));
  leaves_.emplace(VoxelKey{0, 0}, 0.0f);
}

float OccupancyMap::leaf_log_odds(VoxelKey k) const {
  auto it = leaves_.find(k);
  if (it == leaves_.end()) throw std::invalid_argument("leaf_log_odds: key not stored");
  return it->second;
}

VoxelKey OccupancyMap::find_leaf(const Vec3& p) const {
  for (int l = 0; l <= cfg_.levels; ++l) {
    VoxelKey k = encode_key(cfg_, p, l);
    if (leaves_.count(k)) return k;
  }
  throw std::logic_error("find_leaf: stored keys do not cover the extent");
}

float OccupancyMap::log_odds_at(const Vec3& p) const {
  return leaves_.at(find_leaf(p));
}

double OccupancyMap::occupancy_at(const Vec3& p) const {
  double lo = log_odds_at(p);
  return 1.0 / (1.0 + std::exp(-lo));
}

void OccupancyMap::subdivide(VoxelKey k, float value) {
  leaves_.erase(k);
  internal_.insert(k);
  for (const VoxelKey& c : child_keys(cfg_, k)) leaves_.emplace(c, value);
}

void OccupancyMap::apply_delta(VoxelKey leaf, float delta) {
  float& lo = leaves_.at(leaf);
  lo = std::clamp(lo + delta, -clamp_hi_, clamp_hi_);
  if (lo > occ_threshold_) {
    occupied_.insert(leaf);
  } else {
    occupied_.erase(leaf);
  }
}

UpdateSummary OccupancyMap::insert_hit(const Vec3& p, double weight) {
  UpdateSummary s;
  int level = 0;
  VoxelKey k{};
  for (; level <= cfg_.levels; ++level) {
    k = encode_key(cfg_, p, level);
    if (leaves_.count(k)) break;
  }
  if (level > cfg_.levels) throw std::logic_error("insert_hit: no containing leaf");
  while (level < cfg_.levels) {
    subdivide(k, leaves_.at(k));
    ++s.subdivided;
    ++level;
    k = encode_key(cfg_, p, level);
  }
  apply_delta(k, static_cast<float>(delta_hit_ * weight));
  ++s.leaves_updated;
  return s;
}

namespace {

/// Min axial depth per angular bin, tan-uniform so bins line up with the
/// renderer's pixel grid. Empty bins read as depth_max (no return).
struct DepthBins {
  int nh = 0, nv = 0;
  double tan_h = 0.0, tan_v = 0.0;
  double depth_max = 0.0;
  std::vector<float> d;

  DepthBins(const MapConfig& cfg, const PointCloud& cloud) {
    const Frustum& f = cloud.sensor_pose;
    nh = cfg.ray_bins_h;
    nv = cfg.ray_bins_v;
    tan_h = std::tan(f.h_fov * 0.5);
    tan_v = std::tan(f.v_fov * 0.5);
    depth_max = f.depth_max;
    d.assign(static_cast<size_t>(nh) * nv, std::numeric_limits<float>::infinity());
    for (const Vec3& p : cloud.points) {
      Vec3 c = f.to_camera(p);
      if (c.x <= 0.0) continue;
      int bi = bin_index(c.y / c.x, tan_h, nh);
      int bj = bin_index(c.z / c.x, tan_v, nv);
      if (bi < 0 || bj < 0) continue;
      float& cell = d[static_cast<size_t>(bj) * nh + bi];
      cell = std::min(cell, static_cast<float>(c.x));
    }
  }

  static int bin_index(double t, double tan_half, int n) {
    if (std::fabs(t) > tan_half) return -1;
    int i = static_cast<int>((t + tan_half) / (2.0 * tan_half) * n);
    return std::clamp(i, 0, n - 1);
  }

  /// Axial frame depth along the direction with camera tangents (ty, tz).
  double lookup(double ty, double tz) const {
    int bi = bin_index(ty, tan_h, nh);
    int bj = bin_index(tz, tan_v, nv);
    if (bi < 0 || bj < 0) return depth_max;
    float v = d[static_cast<size_t>(bj) * nh + bi];
    return std::isfinite(v) ? std::min(static_cast<double>(v), depth_max) : depth_max;
  }
};

struct RayTarget {
  VoxelKey key;
  Vec3 center;
  double axial = 0.0;        // camera-forward depth of the voxel center
  double frame_depth = 0.0;  // binned frame depth along the same direction
  bool seen_through = false;
};

}  // namespace

UpdateSummary OccupancyMap::insert_point_cloud(const PointCloud& cloud) {
  UpdateSummary s;
  const Frustum& f = cloud.sensor_pose;

  // Tree updates for every in-bounds point.
  KeySet hit_keys;
  hit_keys.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) {
    double w = 1.0;
    if (cfg_.distance_scaled) {
      double dist = (p - f.origin).norm();
      w = 1.0 / (1.0 + (dist / cfg_.update_d0) * (dist / cfg_.update_d0));
    }
    try {
      s += insert_hit(p, w);
      hit_keys.insert(encode_key(cfg_, p, cfg_.levels));
      ++s.points_inserted;
    } catch (const std::out_of_range&) {
      ++s.points_skipped;
    }
  }

  // Grouped raycasting: one ray per occupied voxel that the frame either
  // re-observes as a surface (clears space in front of it) or sees strictly
  // through (cleared itself as well). Empty bins read as depth_max, so rays
  // into unreturned directions clear up to the far plane.
  DepthBins bins(cfg_, cloud);
  const double margin = cfg_.leaf_edge;
  std::vector<RayTarget> targets;
  targets.reserve(occupied_.size());
  for (const VoxelKey& k : occupied_) {
    Vec3 c = key_center(cfg_, k);
    if (!frustum_contains(f, c)) continue;
    Vec3 cam = f.to_camera(c);
    double frame_depth = bins.lookup(cam.y / cam.x, cam.z / cam.x);
    bool seen = frame_depth > cam.x + margin;
    if (!seen && leaves_.at(k) <= ray_threshold_) continue;
    targets.push_back({k, c, cam.x, frame_depth, seen});
  }

  std::vector<VoxelKey> cleared;
  auto gather = [&](const RayTarget& t, std::vector<VoxelKey>& out) {
    double stop_axial = std::min(t.axial, t.frame_depth) - margin;
    if (stop_axial > 0.0) {
      Vec3 dir = t.center - f.origin;
      double radial = dir.norm();
      if (radial > 0.0) {
        Vec3 end = f.origin + dir * (stop_axial / t.axial);
        traverse_leaf_cells(cfg_, f.origin, end, [&](const VoxelKey& k) {
          out.push_back(k);
          return true;
        });
      }
    }
    if (t.seen_through) out.push_back(t.key);
  };

#ifdef _OPENMP
  if (parallel_raycast_) {
    std::vector<std::vector<VoxelKey>> partial;
#pragma omp parallel
    {
#pragma omp single
      partial.resize(omp_get_num_threads());
      std::vector<VoxelKey>& mine = partial[omp_get_thread_num()];
#pragma omp for schedule(static)
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(targets.size()); ++i)
        gather(targets[i], mine);
    }
    for (const auto& part : partial) cleared.insert(cleared.end(), part.begin(), part.end());
  } else
#endif
  {
    for (const RayTarget& t : targets) gather(t, cleared);
  }

  std::sort(cleared.begin(), cleared.end());
  cleared.erase(std::unique(cleared.begin(), cleared.end()), cleared.end());
  for (const VoxelKey& k : cleared) {
    if (hit_keys.count(k)) continue;
    auto it = leaves_.find(k);
    if (it == leaves_.end()) continue;  // inside a coarse unknown leaf
    apply_delta(k, delta_miss_);
    ++s.raycast_cleared;
  }
  return s;
}

bool OccupancyMap::is_navigable(const Vec3& p, double radius) const {
  // The bounded world is a max_extent cube concentric with the current volume.
  Vec3 c = cfg_.bounds().center();
  double half = cfg_.max_extent * 0.5;
  if ((p - c).norm_inf() > half) return false;
  return !ball_intersects_occupied(p, radius);
}

bool OccupancyMap::ball_intersects_occupied(const Vec3& p, double radius) const {
  if (!(radius >= 0.0)) throw std::invalid_argument("ball query: radius must be >= 0");
  const double r = cfg_.leaf_edge;
  const std::int64_t n = std::int64_t{1} << cfg_.levels;
  auto lo_idx = [&](double q, double o) {
    return std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((q - o - radius) / r)));
  };
  auto hi_idx = [&](double q, double o) {
    return std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::floor((q - o + radius) / r)));
  };
  std::int64_t x0 = lo_idx(p.x, cfg_.origin.x), x1 = hi_idx(p.x, cfg_.origin.x);
  std::int64_t y0 = lo_idx(p.y, cfg_.origin.y), y1 = hi_idx(p.y, cfg_.origin.y);
  std::int64_t z0 = lo_idx(p.z, cfg_.origin.z), z1 = hi_idx(p.z, cfg_.origin.z);
  for (std::int64_t ix = x0; ix <= x1; ++ix) {
    for (std::int64_t iy = y0; iy <= y1; ++iy) {
      for (std::int64_t iz = z0; iz <= z1; ++iz) {
        VoxelKey k = pack_key(cfg_, cfg_.levels, {ix, iy, iz});
        if (!occupied_.count(k)) continue;
        if (point_box_distance(p, key_cell(cfg_, k)) <= radius) return true;
      }
    }
  }
  return false;
}

void OccupancyMap::expand_once(const Vec3& required) {
  if (cfg_.levels + 1 > cfg_.m_digits ||
      std::ldexp(cfg_.leaf_edge, cfg_.levels + 1) > cfg_.max_extent)
    throw std::length_error("expand: map would exceed max_extent");

  const double e = cfg_.extent();
  bool shift[3] = {required.x < cfg_.origin.x, required.y < cfg_.origin.y,
                   required.z < cfg_.origin.z};

  MapConfig next = cfg_;
  next.levels += 1;
  if (shift[0]) next.origin.x -= e;
  if (shift[1]) next.origin.y -= e;
  if (shift[2]) next.origin.z -= e;
  next.validate();

  auto remap = [&](VoxelKey k) {
    AxisIndices i = unpack_key(cfg_, k);
    std::int64_t off = std::int64_t{1} << k.level;
    if (shift[0]) i.x += off;
    if (shift[1]) i.y += off;
    if (shift[2]) i.z += off;
    return pack_key(next, static_cast<int>(k.level) + 1, i);
  };

  LeafMap new_leaves;
  new_leaves.reserve(leaves_.size() + 8);
  for (const auto& [k, v] : leaves_) new_leaves.emplace(remap(k), v);
  KeySet new_internal;
  new_internal.reserve(internal_.size() + 1);
  for (const VoxelKey& k : internal_) new_internal.insert(remap(k));
  KeySet new_occ;
  new_occ.reserve(occupied_.size());
  for (const VoxelKey& k : occupied_) new_occ.insert(remap(k));

  // The old volume is one octant of the doubled cube; its 7 new siblings
  // start as unknown leaves and the new root becomes internal.
  AxisIndices old_oct{shift[0] ? 1 : 0, shift[1] ? 1 : 0, shift[2] ? 1 : 0};
  for (std::int64_t dx = 0; dx < 2; ++dx)
    for (std::int64_t dy = 0; dy < 2; ++dy)
      for (std::int64_t dz = 0; dz < 2; ++dz)
        if (dx != old_oct.x || dy != old_oct.y || dz != old_oct.z)
          new_leaves.emplace(pack_key(next, 1, {dx, dy, dz}), 0.0f);
  new_internal.insert(VoxelKey{0, 0});

  cfg_ = next;
  leaves_ = std::move(new_leaves);
  internal_ = std::move(new_internal);
  occupied_ = std::move(new_occ);
}

void OccupancyMap::expand_to(const Vec3& p) {
  int guard = 0;
  while (true) {
    try {
      (void)leaf_indices(cfg_, p);
      return;
    } catch (const std::out_of_range&) {
      expand_once(p);
    }
    if (++guard > 64) throw std::logic_error("expand_to: did not converge");
  }
}

void OccupancyMap::expand_to(const Aabb& box) {
  // Growing for one corner can re-anchor the origin, so re-check all corners.
  for (int pass = 0; pass < 8; ++pass) {
    bool done = true;
    for (int cx = 0; cx < 2 && done; ++cx)
      for (int cy = 0; cy < 2 && done; ++cy)
        for (int cz = 0; cz < 2 && done; ++cz) {
          Vec3 corner{cx ? box.hi.x : box.lo.x, cy ? box.hi.y : box.lo.y,
                      cz ? box.hi.z : box.lo.z};
          try {
            (void)leaf_indices(cfg_, corner);
          } catch (const std::out_of_range&) {
            expand_to(corner);
            done = false;
          }
        }
    if (done) return;
  }
  throw std::logic_error("expand_to(box): did not converge");
}

void OccupancyMap::save(std::ostream& os) const {
  char buf[128];
  os << "fovnav-map 1\n";
  std::snprintf(buf, sizeof buf, "leaf_edge %.17g\n", cfg_.leaf_edge);
  os << buf;
  os << "levels " << cfg_.levels << "\n";
  std::snprintf(buf, sizeof buf, "origin %.17g %.17g %.17g\n", cfg_.origin.x, cfg_.origin.y,
                cfg_.origin.z);
  os << buf;
  std::snprintf(buf, sizeof buf, "max_extent %.17g\n", cfg_.max_extent);
  os << buf;
  std::snprintf(buf, sizeof buf, "probs %.17g %.17g %.17g %.17g %.17g\n", cfg_.p_occ, cfg_.p_ray,
                cfg_.p_hit, cfg_.p_miss, cfg_.clamp_p);
  os << buf;
  os << "bins " << cfg_.ray_bins_h << " " << cfg_.ray_bins_v << "\n";
  os << "keys " << leaves_.size() << "\n";

  std::vector<std::pair<VoxelKey, float>> sorted(leaves_.begin(), leaves_.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [k, v] : sorted) {
    std::snprintf(buf, sizeof buf, "%u %" PRIu64 " %.9g\n", k.level, k.code, v);
    os << buf;
  }
}

OccupancyMap OccupancyMap::load(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "fovnav-map" || version != 1)
    throw std::runtime_error("map load: bad header");

  MapConfig cfg;
  std::string tag;
  std::size_t n_keys = 0;
  while (is >> tag) {
    if (tag == "leaf_edge") is >> cfg.leaf_edge;
    else if (tag == "levels") is >> cfg.levels;
    else if (tag == "origin") is >> cfg.origin.x >> cfg.origin.y >> cfg.origin.z;
    else if (tag == "max_extent") is >> cfg.max_extent;
    else if (tag == "probs") is >> cfg.p_occ >> cfg.p_ray >> cfg.p_hit >> cfg.p_miss >> cfg.clamp_p;
    else if (tag == "bins") is >> cfg.ray_bins_h >> cfg.ray_bins_v;
    else if (tag == "keys") { is >> n_keys; break; }
    else throw std::runtime_error("map load: unknown field " + tag);
    if (!is) throw std::runtime_error("map load: truncated header");
  }
  if (!is) throw std::runtime_error("map load: truncated header");
  try {
    cfg.validate();  // also derives m_digits, needed for key arithmetic below
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("map load: invalid config: ") + e.what());
  }

  OccupancyMap map(cfg);
  map.leaves_.clear();
  map.leaves_.reserve(n_keys);
  for (std::size_t i = 0; i < n_keys; ++i) {
    std::uint32_t level;
    std::uint64_t code;
    float lo;
    if (!(is >> level >> code >> lo)) throw std::runtime_error("map load: truncated keys");
    if (static_cast<int>(level) > cfg.levels) throw std::runtime_error("map load: bad key level");
    VoxelKey k{level, code};
    if (!map.leaves_.emplace(k, lo).second) throw std::runtime_error("map load: duplicate key");
    if (lo > map.occ_threshold_) map.occupied_.insert(k);
    while (k.level > 0) {
      k = parent_key(cfg, k);
      if (!map.internal_.insert(k).second) break;
    }
  }
  if (!map.check_partition()) throw std::runtime_error("map load: keys do not partition the extent");
  return map;
}

bool OccupancyMap::check_partition() const {
  // No stored key may be an ancestor of another, and the cell volumes (in
  // exact leaf-voxel units) must sum to the full cube.
  std::uint64_t total = 0;
  const std::uint64_t full = std::uint64_t{1} << (3 * cfg_.levels);
  for (const auto& [k, v] : leaves_) {
    (void)v;
    VoxelKey a = k;
    while (a.level > 0) {
      a = parent_key(cfg_, a);
      if (leaves_.count(a)) return false;
    }
    total += std::uint64_t{1} << (3 * (cfg_.levels - static_cast<int>(k.level)));
  }
  return total == full;
}

bool is_observed(const OccupancyMap& map, const Frustum& f, const Vec3& p) {
  if (!frustum_contains(f, p)) return false;
  const MapConfig& cfg = map.config();
  VoxelKey target{};
  bool have_target = true;
  try {
    target = encode_key(cfg, p, cfg.levels);
  } catch (const std::out_of_range&) {
    have_target = false;  // outside the stored volume: ray test below still applies
  }
  bool blocked = false;
  traverse_leaf_cells(cfg, f.origin, p, [&](const VoxelKey& k) {
    if (have_target && k == target) return false;  // reached p's own cell
    if (map.is_occupied(k)) {
      blocked = true;
      return false;
    }
    return true;
  });
  return !blocked;
}

bool is_safe(const OccupancyMap& map, const Frustum& f, const Vec3& p, double r_robot) {
  return is_observed(map, f, p) && map.is_navigable(p, r_robot);
}

bool is_in_free(const OccupancyMap& map, const Frustum& f, const Vec3& p, double radius) {
  return is_observed(map, f, p) && map.is_navigable(p, radius);
}

}  // namespace fovnav
