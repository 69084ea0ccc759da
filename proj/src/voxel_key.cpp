#include "fovnav/voxel_key.hpp"

#include <cmath>

namespace fovnav {

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("logit: p must be in (0, 1)");
  return std::log(p / (1.0 - p));
}

void MapConfig::validate() {
  if (!(leaf_edge > 0.0)) throw std::invalid_argument("MapConfig.leaf_edge must be > 0");
  if (levels < 1 || levels > 20) throw std::invalid_argument("MapConfig.levels out of [1, 20]");
  if (!(max_extent >= extent()))
    throw std::invalid_argument("MapConfig.max_extent smaller than initial extent");
  for (double p : {p_occ, p_ray, p_hit, p_miss, clamp_p}) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("MapConfig probability out of (0, 1)");
  }
  if (!(p_ray > p_occ)) throw std::invalid_argument("MapConfig requires p_ray > p_occ");
  if (!(p_hit > 0.5) || !(p_miss < 0.5))
    throw std::invalid_argument("MapConfig requires p_hit > 0.5 > p_miss");
  if (ray_bins_h < 1 || ray_bins_v < 1)
    throw std::invalid_argument("MapConfig ray bins must be >= 1");
  if (distance_scaled && !(update_d0 > 0.0))
    throw std::invalid_argument("MapConfig.update_d0 must be > 0");

  int m = 1;
  while ((std::int64_t{1} << m) * leaf_edge < max_extent) ++m;
  m_digits = m;
  if (3 * m_digits > 63)
    throw std::invalid_argument("MapConfig: max_extent/leaf_edge overflows the spatial code");
  if (levels > m_digits)
    throw std::invalid_argument("MapConfig: levels exceed code capacity for max_extent");
}

double MapConfig::extent() const { return std::ldexp(leaf_edge, levels); }

double MapConfig::cell_edge(int level) const { return std::ldexp(leaf_edge, levels - level); }

Aabb MapConfig::bounds() const {
  double e = extent();
  return {origin, origin + Vec3{e, e, e}};
}

VoxelKey pack_key(const MapConfig& cfg, int level, AxisIndices idx) {
  const int m = cfg.m_digits;
  return {static_cast<std::uint32_t>(level),
          (static_cast<std::uint64_t>(idx.x) << (2 * m)) |
              (static_cast<std::uint64_t>(idx.y) << m) |
              static_cast<std::uint64_t>(idx.z)};
}

AxisIndices unpack_key(const MapConfig& cfg, VoxelKey key) {
  const int m = cfg.m_digits;
  const std::uint64_t mask = (std::uint64_t{1} << m) - 1;
  return {static_cast<std::int64_t>((key.code >> (2 * m)) & mask),
          static_cast<std::int64_t>((key.code >> m) & mask),
          static_cast<std::int64_t>(key.code & mask)};
}

AxisIndices leaf_indices(const MapConfig& cfg, const Vec3& p) {
  const std::int64_t n = std::int64_t{1} << cfg.levels;
  auto idx = [&](double q, double o, const char* ax) {
    double rel = (q - o) / cfg.leaf_edge;
    auto i = static_cast<std::int64_t>(std::floor(rel));
    if (i < 0 || i >= n) throw std::out_of_range(std::string("point outside map bounds (") + ax + ")");
    return i;
  };
  return {idx(p.x, cfg.origin.x, "x"), idx(p.y, cfg.origin.y, "y"), idx(p.z, cfg.origin.z, "z")};
}

VoxelKey encode_key(const MapConfig& cfg, const Vec3& p, int level) {
  if (level < 0 || level > cfg.levels) throw std::invalid_argument("encode_key: bad level");
  AxisIndices li = leaf_indices(cfg, p);
  const int shift = cfg.levels - level;
  return pack_key(cfg, level, {li.x >> shift, li.y >> shift, li.z >> shift});
}

Aabb key_cell(const MapConfig& cfg, VoxelKey key) {
  AxisIndices i = unpack_key(cfg, key);
  double e = cfg.cell_edge(static_cast<int>(key.level));
  Vec3 lo = cfg.origin + Vec3{i.x * e, i.y * e, i.z * e};
  return {lo, lo + Vec3{e, e, e}};
}

Vec3 key_center(const MapConfig& cfg, VoxelKey key) { return key_cell(cfg, key).center(); }

VoxelKey parent_key(const MapConfig& cfg, VoxelKey key) {
  if (key.level == 0) throw std::invalid_argument("parent_key: root has no parent");
  AxisIndices i = unpack_key(cfg, key);
  return pack_key(cfg, static_cast<int>(key.level) - 1, {i.x >> 1, i.y >> 1, i.z >> 1});
}

std::array<VoxelKey, 8> child_keys(const MapConfig& cfg, VoxelKey key) {
  if (static_cast<int>(key.level) >= cfg.levels)
    throw std::invalid_argument("child_keys: leaf level has no children");
  AxisIndices i = unpack_key(cfg, key);
  std::array<VoxelKey, 8> out;
  int k = 0;
  for (int dx = 0; dx < 2; ++dx)
    for (int dy = 0; dy < 2; ++dy)
      for (int dz = 0; dz < 2; ++dz)
        out[k++] = pack_key(cfg, static_cast<int>(key.level) + 1,
                            {2 * i.x + dx, 2 * i.y + dy, 2 * i.z + dz});
  return out;
}

bool is_ancestor(const MapConfig& cfg, VoxelKey anc, VoxelKey key) {
  if (anc.level >= key.level) return false;
  AxisIndices a = unpack_key(cfg, anc);
  AxisIndices b = unpack_key(cfg, key);
  const int shift = static_cast<int>(key.level - anc.level);
  return (b.x >> shift) == a.x && (b.y >> shift) == a.y && (b.z >> shift) == a.z;
}

}  // namespace fovnav
