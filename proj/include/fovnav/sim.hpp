#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fovnav/environments.hpp"
#include "fovnav/planner.hpp"
#include "fovnav/render.hpp"
#include "fovnav/trajectory.hpp"

namespace fovnav {

/// Depth camera intrinsics plus its mounting model (yaw follows the body,
/// pitch fixed at zero).
struct CameraModel {
  int width = 64;
  int height = 48;
  double h_fov = 70.0 * kPi / 180.0;
  double v_fov = 43.0 * kPi / 180.0;
  double depth_min = 0.05;
  double depth_max = 5.0;
  double noise_sigma0 = 0.0;  // additive depth noise scale; 0 disables
  double noise_d0 = 1.0;

  void validate() const;
  /// Sensor frustum at a body pose (rendering view, real near plane).
  Frustum sensor_at(const Vec3& p, double yaw) const;
  /// Same volume with the near plane collapsed to zero: the region the robot
  /// treats as observable this frame, which includes its own position.
  Frustum planning_view_at(const Vec3& p, double yaw) const;
};

struct EpisodeConfig {
  GroundTruthScene scene;
  Pose4 start;
  Pose4 goal;

  Gains gains;
  DynamicLimits limits;
  RobotGeometry geometry;
  double mu = 20.0;  // progress rate

  MapConfig map;
  PlannerConfig planner;
  CameraModel camera;

  double f_cam = 33.0;   // camera/planning rate, Hz
  double f_traj = 240.0; // trajectory integration rate, Hz
  double t_max = 120.0;  // simulated-time budget
  double goal_tolerance = 0.2;
  std::uint64_t seed = 0;
  int trace_stride = 8;

  void validate();  // non-const: derives the map's packing width
};

enum class EpisodeStatus { kReached, kCollided, kTimeout, kUnreachable, kFault };
const char* to_string(EpisodeStatus s);

struct FrameTiming {
  double t = 0.0;
  double render_us = 0.0;
  double map_us = 0.0;
  double plan_us = 0.0;
};

/// One planner interaction per camera frame; deterministic, so it doubles as
/// a regression artifact (the run subcommand can dump it).
struct PlanRow {
  double t = 0.0;
  Planner::Status status = Planner::Status::kHold;
  bool invalidated = false;
  bool replanned = false;
  int subpath_size = 0;   // waypoints emitted this frame
  int pending_size = 0;   // waypoints still beyond the emitted boundary
  int failures = 0;       // consecutive failed replans after this frame
};

struct EpisodeResult {
  EpisodeStatus status = EpisodeStatus::kTimeout;
  double nav_time = 0.0;      // simulated time at termination
  double path_length = 0.0;   // arc length actually flown
  double avg_velocity = 0.0;  // path_length / nav_time
  double min_clearance = 0.0; // ground-truth distance, movers included
  int frames = 0;
  int replans = 0;
  int invalidations = 0;
  std::vector<double> invalidation_times;
  std::vector<TraceRow> trace;
  std::vector<PlanRow> plan_log;     // one row per camera frame
  std::vector<FrameTiming> timings;  // wall-clock; excluded from determinism
  std::string message;
};

/// Ground-truth distance from p to the nearest primitive, movers evaluated at
/// the given time. The collision audit inside run_episode uses this.
double audit_distance(const GroundTruthScene& scene, double time, const Vec3& p);

/// Closed-loop episode: interleaves camera/map/planner frames at f_cam with
/// funnel trajectory ticks at f_traj (camera first on ties), audits the flown
/// state against the ground truth every tick, and stops on goal arrival,
/// collision, planner give-up, funnel fault, or t_max.
EpisodeResult run_episode(const EpisodeConfig& cfg);

/// Episodes in sequence (results deterministic given configs).
std::vector<EpisodeResult> run_suite(const std::vector<EpisodeConfig>& episodes);

/// One row per episode; deterministic fields only.
void write_results_csv(std::ostream& os, const std::vector<EpisodeResult>& results);
/// One row per camera frame with wall-clock stage timings; this file is the
/// only non-deterministic artifact and is kept separate on purpose.
void write_timings_csv(std::ostream& os, const std::vector<EpisodeResult>& results);

/// Config skeleton for a fixture: covering map, derived planner defaults,
/// camera defaults; gains/limits keep their struct defaults.
EpisodeConfig episode_for_fixture(const EnvironmentFixture& fixture,
                                  double leaf_edge, double max_extent,
                                  std::uint64_t seed);

}  // namespace fovnav
