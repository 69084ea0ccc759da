#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fovnav/occupancy_map.hpp"
#include "fovnav/scene.hpp"

namespace fovnav {

/// Start/goal poses bundled with the world they belong to.
struct EnvironmentFixture {
  GroundTruthScene scene;
  Pose4 start;
  Pose4 goal;
};

/// Poisson forest: trunk count ~ Poisson(density * area), positions uniform
/// over the stand, radii uniform in [radius_min, radius_max]. Trunks whose
/// inflated footprint reaches within `keepout` of the start or goal are
/// rejected. A ground slab sits under the stand.
struct ForestSpec {
  double size_x = 20.0;
  double size_y = 20.0;
  double height = 2.0;
  double density = 0.3;          // trunks per square meter
  double radius_min = 0.10;
  double radius_max = 0.25;
  double keepout = 1.0;
  Vec3 start{1.0, 10.0, 1.0};
  Vec3 goal{19.0, 10.0, 1.0};
};

EnvironmentFixture make_forest(const ForestSpec& spec, std::uint64_t seed);

/// Forest with a guaranteed corridor: regenerates with incremented seeds (up
/// to 10 attempts) until corridor_exists() passes at the given clearance and
/// grid resolution. Throws if no attempt validates. `used_seed` (optional)
/// receives the accepted seed.
EnvironmentFixture make_validated_forest(const ForestSpec& spec,
                                         std::uint64_t seed,
                                         double clearance, double resolution,
                                         std::uint64_t* used_seed = nullptr);

/// Grid maze built from row strings ('#' wall cell, '.' open, 'S' start,
/// 'G' goal). Walls span full cells from the floor to wall_height; a ceiling
/// slab above the walls keeps flight inside the maze. Row 0 is the north
/// (max-y) edge; x grows with the column index.
struct MazeSpec {
  std::vector<std::string> rows;
  double cell = 1.5;
  double wall_height = 2.0;
  double slab_thickness = 0.3;  // ceiling + floor slabs
  double fly_z = 1.0;           // start/goal altitude
};

EnvironmentFixture make_maze(const MazeSpec& spec);

/// Canonical maze fixture: a C-shaped pocket opens toward the start and sits
/// on the direct start-goal line, so a straight-line approach enters it and
/// must back out. The surrounding loop keeps the goal reachable.
MazeSpec pocket_maze();

/// (col,row) maze cell containing a world point.
std::pair<int, int> maze_cell_of(const MazeSpec& spec, const Vec3& p);

/// Grid BFS distances (4-connected, -1 = wall/unreachable) from the cell
/// containing `from`. Indexed [row][col].
std::vector<std::vector<int>> maze_grid_distances(const MazeSpec& spec,
                                                  std::pair<int, int> from);

/// Walled corridor with a scripted mover that blocks it for a scripted
/// window, then retreats; used by the dynamic-obstacle scenario.
EnvironmentFixture make_corridor_mover();

/// Empty world (ground slab only) for smoke runs.
EnvironmentFixture make_open_field();

/// Dense-grid corridor check on the ground truth: 6-connected BFS over cells
/// of size `resolution` within scene.bounds, a cell being free iff the static
/// distance at its center exceeds `clearance`. True iff start connects to
/// goal through free cells.
bool corridor_exists(const GroundTruthScene& scene, const Vec3& start,
                     const Vec3& goal, double clearance, double resolution);

/// Map config whose stored cube covers `box` (plus a small margin), aligned
/// to the leaf lattice at the given resolution.
MapConfig config_covering(const Aabb& box, double leaf_edge, double max_extent);

/// Bake the static primitives (plus movers frozen at time t) into a map by
/// saturating every leaf whose center lies inside a primitive. Used by the
/// collision benchmarks and mapping tests.
OccupancyMap rasterize_scene(const GroundTruthScene& scene, const MapConfig& cfg,
                             double time = 0.0);

}  // namespace fovnav
