#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "fovnav/occupancy_map.hpp"

namespace fovnav {

struct PlannerConfig {
  double step_size = 1.0;           // max edge length while extending
  double rewire_radius = 2.0;       // neighbourhood for parent choice/rewiring
  double goal_tolerance = 0.5;      // start == goal short-circuit distance
  double segment_check_step = 0.05; // sampling step for region marches
  int max_iterations = 4000;
  int join_candidates = 64;         // per-insertion join attempts
  double pitch_fraction = 0.9;      // edge pitch bound as a fraction of v_fov/2
  int sample_tries = 8;             // region-rejection retries per iteration
  int replan_retry_limit = 1000;    // consecutive failed frames before giving up

  /// Extra clearance used while BUILDING plans (sampling, steering, edges):
  /// fresh surface voxels can grow an obstacle by about one leaf after a path
  /// is committed, so plans are built with this much headroom while
  /// invalidation and the start precondition stay at the base radius. Edges
  /// leaving the start node are also checked at the base radius so a robot
  /// pinched by newly seen voxels can still plan its way out.
  double plan_slack = 0.0;

  /// Optional bounds for goal-tree sampling; a degenerate box (the default)
  /// falls back to the map's stored volume. Narrowing this to the known world
  /// keeps samples out of useless empty space.
  Aabb sample_bounds{{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};

  void validate() const;
};

/// Derived defaults: step 2R, rewire 4R, goal tolerance R, check step r/2.
PlannerConfig default_planner_config(double radius, double leaf_edge);

/// Internal statistics exposed for tests.
struct RrtDebug {
  std::size_t iterations = 0;
  std::size_t joins_tried = 0;
  std::size_t rewires = 0;
  bool cost_monotone = true;  // rewiring never raised any node's cost
  std::size_t tree_view_size = 0;
  std::size_t tree_free_size = 0;
};

/// Bidirectional RRT with rewiring. One tree grows from the start inside the
/// observed free region of the current view; the other grows from the goal
/// through the navigable volume (unknown space included). Join attempts scan
/// the view tree farthest-from-start first. The result is shortcut and yaw
/// is assigned along segment directions, with the goal yaw on the final
/// waypoint. Edges respect both the collision radius and the pitch bound.
/// Throws std::invalid_argument if the start violates the free-region
/// precondition or the goal is not navigable. Returns nullopt on iteration
/// exhaustion.
std::optional<std::vector<Pose4>> solve_rrt_connect(
    const OccupancyMap& map, const Frustum& view, const Pose4& start,
    const Pose4& goal, double radius, const PlannerConfig& cfg,
    std::mt19937_64& rng, RrtDebug* debug = nullptr);

/// True if any path segment (inflated by radius) now crosses occupied space.
bool path_invalidated(const OccupancyMap& map, const std::vector<Pose4>& path,
                      double radius);

/// Split a path at the boundary of the currently observed free region:
/// `committed` runs from the first waypoint to the boundary point (inclusive),
/// `pending` restarts at the boundary. Marches at `step`, testing each sample
/// with the free-region predicate. Returns nullopt when even the first
/// waypoint is outside the free region of this view.
struct SubPathSplit {
  std::vector<Pose4> committed;
  std::vector<Pose4> pending;
  bool reaches_goal = false;
};
std::optional<SubPathSplit> extract_subpath(const OccupancyMap& map,
                                            const Frustum& view,
                                            const std::vector<Pose4>& path,
                                            double radius, double step);

/// Receding-horizon planning loop: keeps the remaining global path, checks it
/// against map updates, replans from the robot (or a fallback pose) when it
/// is lost, and emits the in-view committed prefix each frame.
class Planner {
 public:
  enum class Status { kSubPath, kHold, kUnreachable };

  struct StepResult {
    Status status = Status::kHold;
    bool invalidated = false;  // path was dropped by this frame's map
    bool replanned = false;    // a fresh global path was solved this frame
    std::vector<Pose4> subpath;
    bool reaches_goal = false;
  };

  Planner(const Pose4& goal, double radius, const PlannerConfig& cfg,
          std::uint64_t seed);

  /// One planning frame. `committed_ahead` is the not-yet-flown tail of the
  /// reference the robot is currently tracking; a map update that invalidates
  /// either it or the stored remainder drops the plan and replans from the
  /// robot (or, if the robot is outside the free region, from
  /// `fallback_start` — typically the tracked reference target).
  StepResult step(const OccupancyMap& map, const Frustum& view,
                  const Pose4& robot,
                  const std::vector<Pose4>& committed_ahead = {},
                  const std::optional<Pose4>& fallback_start = std::nullopt);

  const std::vector<Pose4>& pending() const { return pending_; }
  bool has_path() const { return have_path_; }
  int consecutive_failures() const { return failures_; }
  const RrtDebug& last_debug() const { return debug_; }

 private:
  Pose4 goal_;
  double radius_;
  PlannerConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<Pose4> pending_;
  bool have_path_ = false;
  int failures_ = 0;
  RrtDebug debug_;
};

}  // namespace fovnav
