#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "fovnav/geometry.hpp"

namespace fovnav {

/// Octree map parameters. The stored volume is the half-open cube
/// [origin, origin + extent()) with extent() == 2^levels * leaf_edge; the leaf
/// edge stays fixed for the lifetime of the map while expansion doubles the
/// extent and increments `levels`. `m_digits` (bits per axis in the spatial
/// code) is sized once from `max_extent` so codes survive every expansion.
struct MapConfig {
  double leaf_edge = 0.1;
  int levels = 8;
  Vec3 origin{0.0, 0.0, 0.0};
  double max_extent = 150.0;

  double p_occ = 0.65;
  double p_ray = 0.80;
  double p_hit = 0.70;
  double p_miss = 0.40;
  double clamp_p = 0.97;

  // Optional distance-scaled probability updates (off by default): increments
  // are multiplied by 1 / (1 + (d / update_d0)^2) at sensor distance d.
  bool distance_scaled = false;
  double update_d0 = 1.0;

  // Angular binning of the inserted cloud used by grouped raycasting; matches
  // the depth camera resolution by default.
  int ray_bins_h = 64;
  int ray_bins_v = 48;

  int m_digits = 0;  // derived in validate(); bits per axis

  void validate();
  double extent() const;
  double cell_edge(int level) const;
  Aabb bounds() const;
};

double logit(double p);

/// Linear octree key: tree level (0 = root) plus three per-axis cell indices
/// packed into `code` at m_digits bits each, x highest.
struct VoxelKey {
  std::uint32_t level = 0;
  std::uint64_t code = 0;

  bool operator==(const VoxelKey& o) const { return level == o.level && code == o.code; }
  bool operator<(const VoxelKey& o) const {
    return level != o.level ? level < o.level : code < o.code;
  }
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = k.code * 0x9e3779b97f4a7c15ull + k.level;
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    return static_cast<std::size_t>(h);
  }
};

struct AxisIndices {
  std::int64_t x = 0, y = 0, z = 0;
};

VoxelKey pack_key(const MapConfig& cfg, int level, AxisIndices idx);
AxisIndices unpack_key(const MapConfig& cfg, VoxelKey key);

/// Key of the cell containing p at the given level. Throws std::out_of_range
/// if p is outside [origin, origin + extent()).
VoxelKey encode_key(const MapConfig& cfg, const Vec3& p, int level);

/// Leaf-level per-axis indices without packing (same bounds contract).
AxisIndices leaf_indices(const MapConfig& cfg, const Vec3& p);

Aabb key_cell(const MapConfig& cfg, VoxelKey key);
Vec3 key_center(const MapConfig& cfg, VoxelKey key);

VoxelKey parent_key(const MapConfig& cfg, VoxelKey key);
std::array<VoxelKey, 8> child_keys(const MapConfig& cfg, VoxelKey key);
bool is_ancestor(const MapConfig& cfg, VoxelKey anc, VoxelKey key);

/// Visit every leaf-level cell the segment [a, b] passes through, in order
/// from a to b (Amanatides-Woo). The segment is clipped to the map bounds
/// first; nothing is visited if it misses the volume. Return false from the
/// callback to stop early.
template <class Visit>
void traverse_leaf_cells(const MapConfig& cfg, const Vec3& a, const Vec3& b,
                         Visit&& visit) {
  Segment clipped;
  if (!clip_segment_to_box({a, b}, cfg.bounds(), clipped)) return;

  const double r = cfg.leaf_edge;
  const std::int64_t n = std::int64_t{1} << cfg.levels;
  auto cell_of = [&](double q, double o) {
    auto i = static_cast<std::int64_t>(std::floor((q - o) / r));
    return std::clamp(i, std::int64_t{0}, n - 1);
  };
  std::int64_t ix = cell_of(clipped.a.x, cfg.origin.x);
  std::int64_t iy = cell_of(clipped.a.y, cfg.origin.y);
  std::int64_t iz = cell_of(clipped.a.z, cfg.origin.z);

  Vec3 d = clipped.b - clipped.a;
  double len = d.norm();
  if (len == 0.0) {
    visit(pack_key(cfg, cfg.levels, {ix, iy, iz}));
    return;
  }

  const double dv[3] = {d.x, d.y, d.z};
  const double av[3] = {clipped.a.x, clipped.a.y, clipped.a.z};
  const double ov[3] = {cfg.origin.x, cfg.origin.y, cfg.origin.z};
  std::int64_t idx[3] = {ix, iy, iz};
  int step[3];
  double t_max[3], t_delta[3];
  for (int i = 0; i < 3; ++i) {
    if (dv[i] > 0.0) {
      step[i] = 1;
      t_delta[i] = r / dv[i];
      t_max[i] = (ov[i] + (idx[i] + 1) * r - av[i]) / dv[i];
    } else if (dv[i] < 0.0) {
      step[i] = -1;
      t_delta[i] = -r / dv[i];
      t_max[i] = (ov[i] + idx[i] * r - av[i]) / dv[i];
    } else {
      step[i] = 0;
      t_delta[i] = std::numeric_limits<double>::infinity();
      t_max[i] = std::numeric_limits<double>::infinity();
    }
  }

  while (true) {
    if (!visit(pack_key(cfg, cfg.levels, {idx[0], idx[1], idx[2]}))) return;
    int ax = 0;
    if (t_max[1] < t_max[ax]) ax = 1;
    if (t_max[2] < t_max[ax]) ax = 2;
    if (t_max[ax] > 1.0) return;  // next boundary is past the segment end
    idx[ax] += step[ax];
    if (idx[ax] < 0 || idx[ax] >= n) return;
    t_max[ax] += t_delta[ax];
  }
}

}  // namespace fovnav
