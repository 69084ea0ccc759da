#include "fovnav/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace fovnav {

void CameraModel::validate() const {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("camera: resolution must be positive");
  }
  if (!(h_fov > 0.0) || h_fov >= kPi || !(v_fov > 0.0) || v_fov >= kPi) {
    throw std::invalid_argument("camera: fov must be in (0, pi)");
  }
  if (!(depth_min >= 0.0) || !(depth_max > depth_min)) {
    throw std::invalid_argument("camera: need 0 <= depth_min < depth_max");
  }
  if (!(noise_sigma0 >= 0.0) || !(noise_d0 > 0.0)) {
    throw std::invalid_argument("camera: bad noise parameters");
  }
}

Frustum CameraModel::sensor_at(const Vec3& p, double yaw) const {
  return Frustum(p, yaw, 0.0, h_fov, v_fov, depth_min, depth_max);
}

Frustum CameraModel::planning_view_at(const Vec3& p, double yaw) const {
  return Frustum(p, yaw, 0.0, h_fov, v_fov, 0.0, depth_max);
}

void EpisodeConfig::validate() {
  gains.validate();
  limits.validate();
  geometry.validate();
  map.validate();
  planner.validate();
  camera.validate();
  if (!(mu > 0.0)) throw std::invalid_argument("episode: mu must be > 0");
  if (!(f_cam > 0.0) || !(f_traj >= f_cam)) {
    throw std::invalid_argument("episode: need 0 < f_cam <= f_traj");
  }
  if (!(t_max > 0.0)) throw std::invalid_argument("episode: t_max must be > 0");
  if (!(goal_tolerance > 0.0)) {
    throw std::invalid_argument("episode: goal_tolerance must be > 0");
  }
  if (trace_stride <= 0) {
    throw std::invalid_argument("episode: trace_stride must be > 0");
  }
}

const char* to_string(EpisodeStatus s) {
  switch (s) {
    case EpisodeStatus::kReached: return "reached";
    case EpisodeStatus::kCollided: return "collided";
    case EpisodeStatus::kTimeout: return "timeout";
    case EpisodeStatus::kUnreachable: return "unreachable";
    case EpisodeStatus::kFault: return "fault";
  }
  return "?";
}

double audit_distance(const GroundTruthScene& scene, double time, const Vec3& p) {
  double d = static_distance(scene, p);
  for (const MoverScript& m : scene.movers) {
    d = std::min(d, point_box_distance(p, m.box_at(time)));
  }
  return d;
}

namespace {

double elapsed_us(std::chrono::steady_clock::time_point a,
                  std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double, std::micro>(b - a).count();
}

// Expansion request clipped to the bounded world so indoor configs with a
// tight max_extent never throw on a camera looking at a wall.
void expand_clipped(OccupancyMap& map, const Aabb& want) {
  Vec3 c = map.config().bounds().center();
  double half = 0.5 * map.config().max_extent - 1e-9;
  Aabb world{c - Vec3{half, half, half}, c + Vec3{half, half, half}};
  Aabb clip{{std::max(want.lo.x, world.lo.x), std::max(want.lo.y, world.lo.y),
             std::max(want.lo.z, world.lo.z)},
            {std::min(want.hi.x, world.hi.x), std::min(want.hi.y, world.hi.y),
             std::min(want.hi.z, world.hi.z)}};
  if (clip.lo.x > clip.hi.x || clip.lo.y > clip.hi.y || clip.lo.z > clip.hi.z) {
    return;
  }
  map.expand_to(clip);
}

}  // namespace

EpisodeResult run_episode(const EpisodeConfig& cfg_in) {
  EpisodeConfig cfg = cfg_in;
  cfg.validate();

  const FunnelSpec funnel = make_funnel(cfg.gains, cfg.limits, cfg.geometry);
  const double radius = cfg.geometry.margin_radius();
  OccupancyMap map(cfg.map);
  Planner planner(cfg.goal, radius, cfg.planner, cfg.seed);
  std::mt19937_64 noise_seeds(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  TrajectoryState state = TrajectoryState::at_rest(cfg.start);
  PathParametrization path(std::vector<Pose4>{cfg.start});

  EpisodeResult res;
  res.min_clearance = audit_distance(cfg.scene, 0.0, cfg.start.p);

  bool done = false;
  auto finish = [&](EpisodeStatus st, const char* msg) {
    res.status = st;
    res.message = msg;
    res.nav_time = state.t;
    res.avg_velocity = state.t > 0.0 ? res.path_length / state.t : 0.0;
    done = true;
  };

  if (res.min_clearance < cfg.geometry.r_robot) {
    finish(EpisodeStatus::kCollided, "start pose is in collision");
    return res;
  }
  if ((cfg.start.p - cfg.goal.p).norm() <= cfg.goal_tolerance) {
    finish(EpisodeStatus::kReached, "started at the goal");
    return res;
  }

  auto camera_frame = [&](double t) {
    Pose4 robot(state.position(), normalize_angle(state.yaw()));
    Frustum sensor = cfg.camera.sensor_at(robot.p, robot.psi);

    auto t0 = std::chrono::steady_clock::now();
    DepthFrame frame =
        render_depth(cfg.scene, t, sensor, cfg.camera.width, cfg.camera.height);
    if (cfg.camera.noise_sigma0 > 0.0) {
      add_noise(frame, cfg.camera.noise_sigma0, cfg.camera.noise_d0,
                noise_seeds());
    }
    PointCloud cloud = reproject(frame);
    auto t1 = std::chrono::steady_clock::now();

    expand_clipped(map, sensor.bounding_box());
    map.insert_point_cloud(cloud);
    auto t2 = std::chrono::steady_clock::now();

    Frustum view = cfg.camera.planning_view_at(robot.p, robot.psi);
    std::vector<Pose4> committed = path.remaining(state.s);
    std::optional<Pose4> fallback;
    if (!committed.empty()) fallback = committed.front();
    Planner::StepResult pr = planner.step(map, view, robot, committed, fallback);
    auto t3 = std::chrono::steady_clock::now();

    res.timings.push_back(
        {t, elapsed_us(t0, t1), elapsed_us(t1, t2), elapsed_us(t2, t3)});
    res.plan_log.push_back({t, pr.status, pr.invalidated, pr.replanned,
                            static_cast<int>(pr.subpath.size()),
                            static_cast<int>(planner.pending().size()),
                            planner.consecutive_failures()});
    ++res.frames;
    if (pr.invalidated) {
      ++res.invalidations;
      res.invalidation_times.push_back(t);
    }
    if (pr.replanned) ++res.replans;

    if (pr.status == Planner::Status::kUnreachable) {
      finish(EpisodeStatus::kUnreachable, "planner exhausted its retries");
    } else if (pr.status == Planner::Status::kSubPath && !pr.subpath.empty() &&
               (pr.replanned ||
                (pr.subpath.back().p - path.eval(path.total()).p).norm() >
                    1e-12 ||
                std::abs(normalize_angle(pr.subpath.back().psi -
                                         path.eval(path.total()).psi)) >
                    1e-12)) {
      // splice only when the boundary actually moved (in position or heading):
      // re-splicing an unchanged subpath every frame would keep resetting the
      // reference interpolation (and its yaw) before the tracker converges
      if (!path.points().empty() &&
          (pr.subpath.front().p - path.points().back()).norm() <= 1e-9) {
        // continuation from the committed boundary: keep the flown remainder
        // and extend it instead of bridging from the tracked point; a leading
        // waypoint that only changes heading stays in as a turn-in-place arc
        std::vector<Pose4> wps = path.remaining(state.s);
        std::size_t skip = 0;
        if (!wps.empty() &&
            (pr.subpath.front().p - wps.back().p).norm() <= 1e-9 &&
            std::abs(normalize_angle(pr.subpath.front().psi -
                                     wps.back().psi)) <= 1e-9) {
          skip = 1;
        }
        wps.insert(wps.end(), pr.subpath.begin() + skip, pr.subpath.end());
        path = PathParametrization(wps);
      } else {
        path = splice_path(path, state.s, pr.subpath);
      }
      state.s = 0.0;
    } else if (pr.invalidated && !committed.empty()) {
      // the reference being flown is no longer clear and no replacement came
      // back this frame: freeze it at the current reference point (the error
      // then decays in place, which cannot leave the funnel)
      path = PathParametrization(std::vector<Pose4>{committed.front()});
      state.s = 0.0;
    }
  };

  const double dt = 1.0 / cfg.f_traj;
  const double cam_period = 1.0 / cfg.f_cam;
  int next_frame = 0;
  long tick = 0;

  res.trace.push_back({state.t, state.s, 0.0, state.z});
  while (!done) {
    if (state.t >= cfg.t_max - 0.5 * dt) {
      finish(EpisodeStatus::kTimeout, "time budget exhausted");
      break;
    }
    if (state.t >= next_frame * cam_period - 1e-9) {
      camera_frame(state.t);
      ++next_frame;
      if (done) break;
    }

    Vec3 before = state.position();
    AdvanceResult adv = advance(state, path, funnel, dt, cfg.mu);
    res.path_length += (state.position() - before).norm();
    ++tick;
    if (tick % cfg.trace_stride == 0) {
      res.trace.push_back({state.t, state.s, adv.V, state.z});
    }

    if (adv.fault) {
      finish(EpisodeStatus::kFault, "funnel containment violated");
      break;
    }
    double clearance = audit_distance(cfg.scene, state.t, state.position());
    res.min_clearance = std::min(res.min_clearance, clearance);
    if (clearance < cfg.geometry.r_robot) {
      finish(EpisodeStatus::kCollided, "ground-truth clearance fell below the body radius");
      break;
    }
    if ((state.position() - cfg.goal.p).norm() <= cfg.goal_tolerance) {
      finish(EpisodeStatus::kReached, "goal reached");
      break;
    }
  }

  if (res.trace.empty() || res.trace.back().t != state.t) {
    res.trace.push_back({state.t, state.s, 0.0, state.z});
  }
  return res;
}

std::vector<EpisodeResult> run_suite(const std::vector<EpisodeConfig>& episodes) {
  std::vector<EpisodeResult> out;
  out.reserve(episodes.size());
  for (const EpisodeConfig& cfg : episodes) out.push_back(run_episode(cfg));
  return out;
}

void write_results_csv(std::ostream& os, const std::vector<EpisodeResult>& results) {
  os << "episode,status,nav_time,path_length,avg_velocity,min_clearance,"
        "frames,replans,invalidations\n";
  char buf[256];
  for (std::size_t i = 0; i < results.size(); ++i) {
    const EpisodeResult& r = results[i];
    std::snprintf(buf, sizeof(buf), "%zu,%s,%.6f,%.6f,%.6f,%.6f,%d,%d,%d\n", i,
                  to_string(r.status), r.nav_time, r.path_length,
                  r.avg_velocity, r.min_clearance, r.frames, r.replans,
                  r.invalidations);
    os << buf;
  }
}

void write_timings_csv(std::ostream& os, const std::vector<EpisodeResult>& results) {
  os << "episode,frame,t,render_us,map_us,plan_us\n";
  char buf[256];
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::vector<FrameTiming>& rows = results[i].timings;
    for (std::size_t f = 0; f < rows.size(); ++f) {
      std::snprintf(buf, sizeof(buf), "%zu,%zu,%.6f,%.1f,%.1f,%.1f\n", i, f,
                    rows[f].t, rows[f].render_us, rows[f].map_us,
                    rows[f].plan_us);
      os << buf;
    }
  }
}

EpisodeConfig episode_for_fixture(const EnvironmentFixture& fixture,
                                  double leaf_edge, double max_extent,
                                  std::uint64_t seed) {
  EpisodeConfig cfg;
  cfg.scene = fixture.scene;
  cfg.start = fixture.start;
  cfg.goal = fixture.goal;
  cfg.map = config_covering(fixture.scene.bounds, leaf_edge, max_extent);
  cfg.planner = default_planner_config(cfg.geometry.margin_radius(), leaf_edge);
  Vec3 m{1.0, 1.0, 1.0};
  cfg.planner.sample_bounds = {fixture.scene.bounds.lo - m,
                               fixture.scene.bounds.hi + m};
  cfg.seed = seed;
  return cfg;
}

}  // namespace fovnav
