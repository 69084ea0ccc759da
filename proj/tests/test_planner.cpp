#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fovnav/collision.hpp"
#include "fovnav/environments.hpp"
#include "fovnav/planner.hpp"

using namespace fovnav;

namespace {

constexpr double kRadius = 0.25;

// Planning view: camera frustum with the near plane collapsed to zero so the
// robot's own position counts as observed.
Frustum wide_view(const Vec3& origin, double yaw) {
  return Frustum(origin, yaw, 0.0, 2.4, 1.5, 0.0, 12.0);
}

MapConfig room_config() {
  MapConfig cfg;
  cfg.leaf_edge = 0.2;
  cfg.levels = 6;  // 12.8 m cube
  cfg.origin = {0.0, 0.0, 0.0};
  cfg.max_extent = 150.0;
  cfg.validate();
  return cfg;
}

// Wall at x in [3, 3.4] spanning the whole volume, with a doorway at
// y in [0.6, 1.6], z in [0.4, 2.0]; start and goal sit on y = 2 so the
// straight line is blocked and the path has to dodge through the doorway.
GroundTruthScene doorway_scene() {
  GroundTruthScene scene;
  scene.bounds = {{0.0, 0.0, 0.0}, {12.8, 12.8, 12.8}};
  scene.boxes.push_back({{3.0, 0.0, 0.0}, {3.4, 0.6, 12.8}});
  scene.boxes.push_back({{3.0, 1.6, 0.0}, {3.4, 12.8, 12.8}});
  scene.boxes.push_back({{3.0, 0.6, 0.0}, {3.4, 1.6, 0.4}});
  scene.boxes.push_back({{3.0, 0.6, 2.0}, {3.4, 1.6, 12.8}});
  return scene;
}

OccupancyMap doorway_map() {
  return rasterize_scene(doorway_scene(), room_config());
}

bool edges_feasible(const OccupancyMap& map, const std::vector<Pose4>& path,
                    double radius, double max_tan) {
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (detect_collision(map, {path[i].p, path[i + 1].p}, radius)) return false;
    double dz = std::fabs(path[i + 1].p.z - path[i].p.z);
    double dxy = std::hypot(path[i + 1].p.x - path[i].p.x,
                            path[i + 1].p.y - path[i].p.y);
    if (dxy == 0.0 ? dz != 0.0 : dz > max_tan * dxy + 1e-12) return false;
  }
  return true;
}

double path_length(const std::vector<Pose4>& path) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    s += (path[i + 1].p - path[i].p).norm();
  }
  return s;
}

// saturate every leaf whose center lies within the box
void block_box(OccupancyMap& map, const Aabb& box) {
  double e = map.config().leaf_edge;
  for (double x = std::floor(box.lo.x / e) * e + 0.5 * e; x < box.hi.x; x += e) {
    for (double y = std::floor(box.lo.y / e) * e + 0.5 * e; y < box.hi.y; y += e) {
      for (double z = std::floor(box.lo.z / e) * e + 0.5 * e; z < box.hi.z; z += e) {
        if (box.contains({x, y, z})) map.insert_hit({x, y, z}, 10.0);
      }
    }
  }
}

}  // namespace

TEST_CASE("planner config defaults and validation") {
  PlannerConfig cfg = default_planner_config(0.25, 0.1);
  CHECK(cfg.step_size == doctest::Approx(0.5));
  CHECK(cfg.rewire_radius == doctest::Approx(1.0));
  CHECK(cfg.goal_tolerance == doctest::Approx(0.25));
  CHECK(cfg.segment_check_step == doctest::Approx(0.05));
  CHECK(cfg.max_iterations == 4000);
  CHECK(cfg.join_candidates == 64);
  CHECK(cfg.pitch_fraction == doctest::Approx(0.9));

  CHECK_THROWS_AS(default_planner_config(0.0, 0.1), std::invalid_argument);
  PlannerConfig bad = cfg;
  bad.pitch_fraction = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.step_size = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("trivial and straight-line solves") {
  OccupancyMap map(room_config());
  Pose4 start({1.0, 2.0, 1.0}, 0.0);
  Frustum view = wide_view(start.p, 0.0);
  PlannerConfig cfg = default_planner_config(kRadius, 0.2);
  std::mt19937_64 rng(7);

  SUBCASE("goal within tolerance collapses to a single waypoint") {
    Pose4 goal({1.1, 2.0, 1.0}, 1.0);
    auto path = solve_rrt_connect(map, view, start, goal, kRadius, cfg, rng);
    REQUIRE(path.has_value());
    REQUIRE(path->size() == 1);
    CHECK((*path)[0].p == start.p);
    CHECK((*path)[0].psi == doctest::Approx(1.0));
  }

  SUBCASE("unobstructed goal connects directly") {
    Pose4 goal({5.0, 2.0, 1.0}, 0.5);
    RrtDebug dbg;
    auto path = solve_rrt_connect(map, view, start, goal, kRadius, cfg, rng, &dbg);
    REQUIRE(path.has_value());
    REQUIRE(path->size() == 2);
    CHECK((*path)[0].p == start.p);
    CHECK((*path)[1].p == goal.p);
    CHECK((*path)[0].psi == doctest::Approx(0.0));  // along +x
    CHECK((*path)[1].psi == doctest::Approx(0.5));
    CHECK(dbg.iterations == 0);  // no tree growth needed
  }
}

TEST_CASE("solver preconditions") {
  OccupancyMap map = doorway_map();
  PlannerConfig cfg = default_planner_config(kRadius, 0.2);
  std::mt19937_64 rng(7);
  Pose4 start({1.0, 2.0, 1.0}, 0.0);
  Frustum view = wide_view(start.p, 0.0);

  // start behind the camera is not in the free region
  Pose4 behind({-0.5, 2.0, 1.0}, 0.0);
  CHECK_THROWS_AS(solve_rrt_connect(map, view, behind, Pose4({5, 2, 1}, 0.0),
                                    kRadius, cfg, rng),
                  std::invalid_argument);
  // goal buried inside the wall is not navigable
  Pose4 buried({3.2, 5.0, 1.0}, 0.0);
  CHECK_THROWS_AS(
      solve_rrt_connect(map, view, start, buried, kRadius, cfg, rng),
      std::invalid_argument);
}

TEST_CASE("doorway: planned path is feasible and deterministic") {
  OccupancyMap map = doorway_map();
  Pose4 start({1.0, 2.0, 1.0}, 0.0);
  Pose4 goal({6.0, 2.0, 1.0}, 0.0);
  Frustum view = wide_view(start.p, 0.0);
  PlannerConfig cfg = default_planner_config(kRadius, 0.2);
  const double max_tan = std::tan(cfg.pitch_fraction * 0.5 * view.v_fov);

  // the straight connection really is blocked
  CHECK(detect_collision(map, {start.p, goal.p}, kRadius));

  std::mt19937_64 rng(42);
  RrtDebug dbg;
  auto path = solve_rrt_connect(map, view, start, goal, kRadius, cfg, rng, &dbg);
  REQUIRE(path.has_value());
  REQUIRE(path->size() >= 2);
  CHECK((*path)[0].p == start.p);
  CHECK(path->back().p == goal.p);
  CHECK(path->back().psi == doctest::Approx(goal.psi));
  CHECK(edges_feasible(map, *path, kRadius, max_tan));
  CHECK(dbg.iterations > 0);
  CHECK(dbg.cost_monotone);

  // interior waypoints carry the yaw of their outgoing segment
  for (std::size_t i = 0; i + 1 < path->size(); ++i) {
    Vec3 d = (*path)[i + 1].p - (*path)[i].p;
    if (d.x != 0.0 || d.y != 0.0) {
      CHECK((*path)[i].psi == doctest::Approx(std::atan2(d.y, d.x)));
    }
  }

  // same seed, same path; byte-for-byte
  std::mt19937_64 rng2(42);
  auto path2 = solve_rrt_connect(map, view, start, goal, kRadius, cfg, rng2);
  REQUIRE(path2.has_value());
  REQUIRE(path2->size() == path->size());
  for (std::size_t i = 0; i < path->size(); ++i) {
    CHECK((*path)[i].p == (*path2)[i].p);
    CHECK((*path)[i].psi == (*path2)[i].psi);
  }
}

TEST_CASE("doorway: many seeds all produce feasible paths") {
  OccupancyMap map = doorway_map();
  Pose4 start({1.0, 2.0, 1.0}, 0.0);
  Pose4 goal({6.0, 2.0, 1.0}, 0.0);
  Frustum view = wide_view(start.p, 0.0);
  PlannerConfig cfg = default_planner_config(kRadius, 0.2);
  const double max_tan = std::tan(cfg.pitch_fraction * 0.5 * view.v_fov);

  int solved = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    auto path = solve_rrt_connect(map, view, start, goal, kRadius, cfg, rng);
    if (!path) continue;
    ++solved;
    CHECK(edges_feasible(map, *path, kRadius, max_tan));
    CHECK((*path)[0].p == start.p);
    CHECK(path->back().p == goal.p);
    // shortcutting keeps the length sane: never more than 4x the straight gap
    CHECK(path_length(*path) <= 4.0 * (goal.p - start.p).norm());
  }
  CHECK(solved >= 9);
}

TEST_CASE("pitch bound shapes steep climbs") {
  OccupancyMap map(room_config());
  Pose4 start({1.0, 2.0, 1.0}, 0.0);
  Pose4 goal({1.4, 2.0, 4.0}, 0.0);  // almost straight up
  Frustum view = wide_view(start.p, 0.0);
  PlannerConfig cfg = default_planner_config(kRadius, 0.2);
  const double max_tan = std::tan(cfg.pitch_fraction * 0.5 * view.v_fov);

  // the direct edge is collision-free but too steep to fly while looking ahead
  CHECK_FALSE(detect_collision(map, {start.p, goal.p}, kRadius));
  double dz = goal.p.z - start.p.z;
  double dxy = std::hypot(goal.p.x - start.p.x, goal.p.y - start.p.y);
  CHECK(dz > max_tan * dxy);

  std::mt19937_64 rng(3);
  auto path = solve_rrt_connect(map, view, start, goal, kRadius, cfg, rng);
  REQUIRE(path.has_value());
  CHECK(path->size() > 2);  // must zig-zag to respect the bound
  CHECK(edges_feasible(map, *path, kRadius, max_tan));
}

TEST_CASE("sealed goal exhausts iterations") {
  OccupancyMap map(room_config());
  // hollow box around the goal, walls thick enough to rasterize solid
  Vec3 g{6.0, 6.0, 1.0};
  block_box(map, {{g.x - 1.0, g.y - 1.0, g.z - 1.0}, {g.x + 1.0, g.y + 1.0, g.z - 0.6}});
  block_box(map, {{g.x - 1.0, g.y - 1.0, g.z + 0.6}, {g.x + 1.0, g.y + 1.0, g.z + 1.0}});
  block_box(map, {{g.x - 1.0, g.y - 1.0, g.z - 1.0}, {g.x - 0.6, g.y + 1.0, g.z + 1.0}});
  block_box(map, {{g.x + 0.6, g.y - 1.0, g.z - 1.0}, {g.x + 1.0, g.y + 1.0, g.z + 1.0}});
  block_box(map, {{g.x - 1.0, g.y - 1.0, g.z - 1.0}, {g.x + 1.0, g.y - 0.6, g.z + 1.0}});
  block_box(map, {{g.x - 1.0, g.y + 0.6, g.z - 1.0}, {g.x + 1.0, g.y + 1.0, g.z + 1.0}});
  REQUIRE(map.check_partition());

  Pose4 start({1.0, 2.0, 1.0}, 0.0);
  Frustum view = wide_view(start.p, 0.0);
  PlannerConfig cfg = default_planner_config(kRadius, 0.2);
  cfg.max_iterations = 300;
  std::mt19937_64 rng(5);
  RrtDebug dbg;
  auto path = solve_rrt_connect(map, view, start, Pose4(g, 0.0), kRadius, cfg,
                                rng, &dbg);
  CHECK_FALSE(path.has_value());
  CHECK(dbg.iterations == 300);
}

TEST_CASE("path_invalidated flips when new hits land on the path") {
  OccupancyMap map = doorway_map();
  Pose4 start({1.0, 2.0, 1.0}, 0.0);
  Pose4 goal({6.0, 2.0, 1.0}, 0.0);
  Frustum view = wide_view(start.p, 0.0);
  PlannerConfig cfg = default_planner_config(kRadius, 0.2);
  std::mt19937_64 rng(42);
  auto path = solve_rrt_connect(map, view, start, goal, kRadius, cfg, rng);
  REQUIRE(path.has_value());
  CHECK_FALSE(path_invalidated(map, *path, kRadius));

  // drop an obstacle onto the doorway the path must use
  block_box(map, {{2.8, 0.4, 0.2}, {3.6, 1.8, 2.2}});
  CHECK(path_invalidated(map, *path, kRadius));

  // single-waypoint paths degenerate to a ball check
  std::vector<Pose4> at_start{start};
  CHECK_FALSE(path_invalidated(map, at_start, kRadius));
  std::vector<Pose4> inside_wall{Pose4({3.2, 5.0, 1.0}, 0.0)};
  CHECK(path_invalidated(map, inside_wall, kRadius));
  CHECK_FALSE(path_invalidated(map, {}, kRadius));
}

TEST_CASE("extract_subpath splits at the view boundary") {
  OccupancyMap map(room_config());
  Pose4 start({1.0, 2.0, 1.0}, 0.0);
  Frustum view(start.p, 0.0, 0.0, 2.4, 1.5, 0.0, 6.0);  // shallow depth
  std::vector<Pose4> path{start, Pose4({11.0, 2.0, 1.0}, 0.0)};

  SUBCASE("clips at the depth window") {
    auto split = extract_subpath(map, view, path, kRadius, 0.05);
    REQUIRE(split.has_value());
    CHECK_FALSE(split->reaches_goal);
    REQUIRE(split->committed.size() >= 2);
    // boundary sits at the far plane x = 1 + 6, within one march step
    CHECK(split->committed.back().p.x == doctest::Approx(7.0).epsilon(0.02));
    CHECK(split->committed.back().p.y == doctest::Approx(2.0));
    // pending restarts exactly at the boundary and still ends at the goal
    CHECK(split->pending.front().p == split->committed.back().p);
    CHECK(split->pending.back().p == path.back().p);
  }

  SUBCASE("fully visible path commits whole") {
    std::vector<Pose4> short_path{start, Pose4({4.0, 2.0, 1.0}, 0.0)};
    auto split = extract_subpath(map, view, short_path, kRadius, 0.05);
    REQUIRE(split.has_value());
    CHECK(split->reaches_goal);
    REQUIRE(split->committed.size() == 2);
    CHECK(split->committed[1].p == short_path[1].p);
    REQUIRE(split->pending.size() == 1);
    CHECK(split->pending[0].p == short_path[1].p);
  }

  SUBCASE("head outside the view yields nothing") {
    std::vector<Pose4> behind{Pose4({-1.0, 2.0, 1.0}, 0.0), start};
    CHECK_FALSE(extract_subpath(map, view, behind, kRadius, 0.05).has_value());
  }

  SUBCASE("argument checks") {
    CHECK_THROWS_AS(extract_subpath(map, view, {}, kRadius, 0.05),
                    std::invalid_argument);
    CHECK_THROWS_AS(extract_subpath(map, view, path, kRadius, 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("extract_subpath boundary respects occupancy, not just the frustum") {
  OccupancyMap map = doorway_map();
  Pose4 start({1.0, 2.0, 1.0}, 0.0);
  Frustum view = wide_view(start.p, 0.0);
  // straight toward the wall: free region ends a robot radius short of it
  std::vector<Pose4> path{start, Pose4({6.0, 2.0, 1.0}, 0.0)};
  auto split = extract_subpath(map, view, path, kRadius, 0.05);
  REQUIRE(split.has_value());
  CHECK_FALSE(split->reaches_goal);
  double bx = split->committed.back().p.x;
  CHECK(bx < 3.0 - kRadius + 0.06);  // never enters the inflated wall
  CHECK(bx > 2.0);                   // but commits most of the approach
}

TEST_CASE("planner loop: emit, advance, invalidate, recover") {
  OccupancyMap map = doorway_map();
  Pose4 start({1.0, 2.0, 1.0}, 0.0);
  Pose4 goal({6.0, 2.0, 1.0}, 0.0);
  PlannerConfig cfg = default_planner_config(kRadius, 0.2);
  Planner planner(goal, kRadius, cfg, 42);

  Frustum view = wide_view(start.p, 0.0);
  auto r1 = planner.step(map, view, start);
  CHECK(r1.status == Planner::Status::kSubPath);
  CHECK(r1.replanned);
  CHECK_FALSE(r1.invalidated);
  REQUIRE(!r1.subpath.empty());
  CHECK(r1.subpath.front().p == start.p);
  CHECK(planner.has_path());
  Vec3 b1 = r1.subpath.back().p;

  // same view again: nothing newly visible, but the boundary stays committed
  auto r2 = planner.step(map, view, start);
  CHECK(r2.status == Planner::Status::kSubPath);
  CHECK_FALSE(r2.replanned);
  REQUIRE(!r2.subpath.empty());
  CHECK(r2.subpath.front().p == b1);

  // robot moved to the boundary and looks along the next pending segment:
  // the plan extends deeper
  REQUIRE(planner.pending().size() >= 2);
  Vec3 ahead = planner.pending()[1].p - planner.pending()[0].p;
  double yaw2 = std::atan2(ahead.y, ahead.x);
  Frustum view2 = wide_view(b1, yaw2);
  auto r3 = planner.step(map, view2, Pose4(b1, yaw2));
  CHECK(r3.status == Planner::Status::kSubPath);
  if (!r3.subpath.empty()) {
    CHECK((r3.subpath.back().p - goal.p).norm() <
          (b1 - goal.p).norm() + 1e-9);
  }
}

TEST_CASE("planner loop: obstacle on the flown reference invalidates within one step") {
  OccupancyMap map = doorway_map();
  Pose4 start({1.0, 2.0, 1.0}, 0.0);
  Pose4 goal({6.0, 2.0, 1.0}, 0.0);
  PlannerConfig cfg = default_planner_config(kRadius, 0.2);
  Planner planner(goal, kRadius, cfg, 42);
  Frustum view = wide_view(start.p, 0.0);

  auto r1 = planner.step(map, view, start);
  REQUIRE(r1.status == Planner::Status::kSubPath);

  // seal the doorway: the reference the robot is still flying crosses it, so
  // the plan must be dropped on the very next step and replanned (the solver
  // may legitimately route through unknown space around the wall)
  block_box(map, {{2.8, 0.4, 0.2}, {3.6, 1.8, 2.2}});
  auto r2 = planner.step(map, view, start, r1.subpath);
  CHECK(r2.invalidated);
  CHECK(r2.replanned);
  CHECK(r2.status == Planner::Status::kSubPath);
  // the fresh plan avoids the sealed doorway
  CHECK(edges_feasible(map, planner.pending(), kRadius,
                       std::tan(cfg.pitch_fraction * 0.5 * view.v_fov)));
}

TEST_CASE("planner loop: goal sealed mid-flight holds then gives up") {
  OccupancyMap map(room_config());
  Pose4 start({1.0, 2.0, 1.0}, 0.0);
  Pose4 goal({6.0, 2.0, 1.0}, 0.0);
  PlannerConfig cfg = default_planner_config(kRadius, 0.2);
  cfg.max_iterations = 300;
  cfg.replan_retry_limit = 2;
  Planner planner(goal, kRadius, cfg, 42);
  Frustum view = wide_view(start.p, 0.0);

  auto r1 = planner.step(map, view, start);
  REQUIRE(r1.status == Planner::Status::kSubPath);
  REQUIRE(r1.reaches_goal);  // empty room: the whole path is committed

  // a hollow box closes around the goal; the flown reference crosses its wall
  Vec3 g = goal.p;
  block_box(map, {{g.x - 1.0, g.y - 1.0, g.z - 1.0}, {g.x + 1.0, g.y + 1.0, g.z - 0.6}});
  block_box(map, {{g.x - 1.0, g.y - 1.0, g.z + 0.6}, {g.x + 1.0, g.y + 1.0, g.z + 1.0}});
  block_box(map, {{g.x - 1.0, g.y - 1.0, g.z - 1.0}, {g.x - 0.6, g.y + 1.0, g.z + 1.0}});
  block_box(map, {{g.x + 0.6, g.y - 1.0, g.z - 1.0}, {g.x + 1.0, g.y + 1.0, g.z + 1.0}});
  block_box(map, {{g.x - 1.0, g.y - 1.0, g.z - 1.0}, {g.x + 1.0, g.y - 0.6, g.z + 1.0}});
  block_box(map, {{g.x - 1.0, g.y + 0.6, g.z - 1.0}, {g.x + 1.0, g.y + 1.0, g.z + 1.0}});

  auto r2 = planner.step(map, view, start, r1.subpath);
  CHECK(r2.invalidated);
  CHECK(r2.status == Planner::Status::kHold);
  CHECK(planner.consecutive_failures() == 1);
  auto r3 = planner.step(map, view, start);
  CHECK(r3.status == Planner::Status::kHold);
  auto r4 = planner.step(map, view, start);
  CHECK(r4.status == Planner::Status::kUnreachable);
}

TEST_CASE("planner loop: falls back to the reference pose when the robot slips") {
  OccupancyMap map = doorway_map();
  Pose4 goal({6.0, 2.0, 1.0}, 0.0);
  PlannerConfig cfg = default_planner_config(kRadius, 0.2);
  Planner planner(goal, kRadius, cfg, 42);

  // camera looks +x from (1,2,1) but the robot body has drifted behind the
  // near plane; the committed reference target is still visible
  Pose4 reference({1.0, 2.0, 1.0}, 0.0);
  Pose4 robot({0.98, 2.0, 1.0}, 0.0);
  Frustum view = wide_view(reference.p, 0.0);
  CHECK_FALSE(is_in_free(map, view, robot.p, kRadius));
  auto r = planner.step(map, view, robot, {}, reference);
  CHECK(r.status == Planner::Status::kSubPath);
  CHECK(r.replanned);
  REQUIRE(!r.subpath.empty());
  CHECK(r.subpath.front().p == reference.p);
}
