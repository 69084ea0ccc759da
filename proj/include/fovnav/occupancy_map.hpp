#pragma once

#include <cstddef>
#include <iosfwd>
#include <unordered_map>
#include <unordered_set>

#include "fovnav/pointcloud.hpp"
#include "fovnav/voxel_key.hpp"

namespace fovnav {

struct UpdateSummary {
  std::size_t points_inserted = 0;
  std::size_t points_skipped = 0;   // outside map bounds
  std::size_t subdivided = 0;       // subdivision rounds performed
  std::size_t leaves_updated = 0;   // hit increments applied
  std::size_t raycast_cleared = 0;  // miss decrements applied

  UpdateSummary& operator+=(const UpdateSummary& o) {
    points_inserted += o.points_inserted;
    points_skipped += o.points_skipped;
    subdivided += o.subdivided;
    leaves_updated += o.leaves_updated;
    raycast_cleared += o.raycast_cleared;
    return *this;
  }
};

/// Linear octree occupancy map. Stored keys (the leaves) partition the current
/// extent exactly; `internal` holds every subdivided cell so recursive descent
/// can prune; only finest-level leaves ever carry a non-prior log-odds value.
class OccupancyMap {
 public:
  using LeafMap = std::unordered_map<VoxelKey, float, VoxelKeyHash>;
  using KeySet = std::unordered_set<VoxelKey, VoxelKeyHash>;

  explicit OccupancyMap(MapConfig cfg);

  const MapConfig& config() const { return cfg_; }
  const LeafMap& leaves() const { return leaves_; }
  const KeySet& internal_nodes() const { return internal_; }
  const KeySet& occupied() const { return occupied_; }

  bool leaf_exists(VoxelKey k) const { return leaves_.count(k) != 0; }
  bool is_internal(VoxelKey k) const { return internal_.count(k) != 0; }
  bool is_occupied(VoxelKey k) const { return occupied_.count(k) != 0; }
  float leaf_log_odds(VoxelKey k) const;

  /// Stored leaf containing p (descends levels 0..L). Throws std::out_of_range
  /// outside the current extent.
  VoxelKey find_leaf(const Vec3& p) const;
  float log_odds_at(const Vec3& p) const;
  double occupancy_at(const Vec3& p) const;

  /// Tree update for a single measured endpoint: subdivide down to the finest
  /// level and raise the leaf's log-odds (clamped). `weight` scales the
  /// increment (distance-scaled updates).
  UpdateSummary insert_hit(const Vec3& p, double weight = 1.0);

  /// Full frame update: per-point tree updates followed by grouped raycasting
  /// against occupied voxels inside the cloud's frustum. Out-of-bounds points
  /// are skipped and counted; the map is never auto-expanded here.
  UpdateSummary insert_point_cloud(const PointCloud& cloud);

  /// True iff no occupied voxel intersects the closed ball B_radius(p).
  /// Unknown space counts as navigable; points outside the maximum virtual
  /// volume do not.
  bool is_navigable(const Vec3& p, double radius) const;

  /// Does the closed ball B_radius(p) touch any occupied voxel? The pure
  /// geometric half of is_navigable, without the world-bounds rule.
  bool ball_intersects_occupied(const Vec3& p, double radius) const;

  /// Double the extent (incrementing `levels`, leaf edge fixed) until p is
  /// inside. Throws std::length_error if that would exceed max_extent.
  void expand_to(const Vec3& p);
  void expand_to(const Aabb& box);

  void save(std::ostream& os) const;
  static OccupancyMap load(std::istream& is);

  /// Invariant check used by tests and the mapping fuzz: stored keys are
  /// mutually non-overlapping and exactly partition the extent.
  bool check_partition() const;

  /// Toggle OpenMP in the grouped-raycast gather (identical results either
  /// way; exposed for the kernel benchmark).
  void set_parallel_raycast(bool on) { parallel_raycast_ = on; }

 private:
  friend struct MapAccess;

  void subdivide(VoxelKey k, float value);
  void apply_delta(VoxelKey leaf, float delta);
  void expand_once(const Vec3& required);

  MapConfig cfg_;
  LeafMap leaves_;
  KeySet internal_;
  KeySet occupied_;
  float clamp_hi_ = 0.0f;
  float delta_hit_ = 0.0f;
  float delta_miss_ = 0.0f;
  float occ_threshold_ = 0.0f;
  float ray_threshold_ = 0.0f;
  bool parallel_raycast_ = true;
};

/// Observedness of p under frame frustum f: inside the frustum and the sensor
/// ray to p crosses no occupied voxel before reaching p's cell.
bool is_observed(const OccupancyMap& map, const Frustum& f, const Vec3& p);

/// p is observed and the robot ball B_r_robot(p) is clear of occupied voxels.
bool is_safe(const OccupancyMap& map, const Frustum& f, const Vec3& p, double r_robot);

/// p is observed and clear at the full margin radius; the planner's sampling
/// region for the frame-local tree.
bool is_in_free(const OccupancyMap& map, const Frustum& f, const Vec3& p, double radius);

}  // namespace fovnav
