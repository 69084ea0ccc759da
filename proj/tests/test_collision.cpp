#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "fovnav/collision.hpp"
#include "fovnav/occupancy_map.hpp"

using namespace fovnav;

namespace {
MapConfig cfg_4() {
  MapConfig cfg;
  cfg.leaf_edge = 0.1;
  cfg.levels = 4;  // extent 1.6
  cfg.origin = Vec3{0, 0, 0};
  cfg.max_extent = 6.4;
  cfg.validate();
  return cfg;
}

OccupancyMap wall_map() {
  // Wall of occupied leaves at x in [0.8, 0.9], y,z in [0.4, 1.2].
  OccupancyMap map(cfg_4());
  for (double y = 0.45; y < 1.2; y += 0.1)
    for (double z = 0.45; z < 1.2; z += 0.1)
      for (int i = 0; i < 5; ++i) map.insert_hit(Vec3{0.85, y, z});
  return map;
}
}  // namespace

TEST_CASE("detect_collision hits an occupied wall") {
  OccupancyMap map = wall_map();
  Segment through{{0.2, 0.8, 0.8}, {1.4, 0.8, 0.8}};
  CHECK(detect_collision(map, through, 0.0));
  CHECK(detect_collision(map, through, 0.2));
  Segment miss{{0.2, 0.2, 0.2}, {0.2, 1.4, 0.2}};
  CHECK_FALSE(detect_collision(map, miss, 0.0));
  // With a fat radius the same segment reaches the wall (y overlap, x gap 0.6).
  CHECK_FALSE(detect_collision(map, miss, 0.55));
  CHECK(detect_collision(map, Segment{{0.6, 0.2, 0.8}, {0.6, 1.4, 0.8}}, 0.25));
}

TEST_CASE("unknown space does not collide") {
  OccupancyMap map(cfg_4());
  CHECK_FALSE(detect_collision(map, Segment{{0.1, 0.1, 0.1}, {1.5, 1.5, 1.5}},
                               0.3));
}

TEST_CASE("segments outside the stored volume do not collide") {
  OccupancyMap map = wall_map();
  CHECK_FALSE(detect_collision(map, Segment{{-5, -5, -5}, {-4, -4, -4}}, 0.2));
}

TEST_CASE("naive matches detect exactly at zero radius") {
  OccupancyMap map = wall_map();
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-0.2, 1.8);
  for (int i = 0; i < 5000; ++i) {
    Segment s{{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}};
    bool d = detect_collision(map, s, 0.0);
    bool n = naive_collision(map, s, 0.0);
    REQUIRE_MESSAGE(d == n, "segment ", i);
  }
}

TEST_CASE("positive radius: naive collisions imply detect collisions") {
  OccupancyMap map = wall_map();
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-0.2, 1.8);
  std::uniform_real_distribution<double> ur(0.05, 0.4);
  int naive_hits = 0;
  for (int i = 0; i < 3000; ++i) {
    Segment s{{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}};
    double r = ur(rng);
    if (naive_collision(map, s, r)) {
      ++naive_hits;
      REQUIRE(detect_collision(map, s, r));
    }
  }
  CHECK(naive_hits > 100);  // the sample actually exercises the wall
}

TEST_CASE("degenerate segment is a point query") {
  OccupancyMap map = wall_map();
  CHECK(detect_collision(map, Segment{{0.85, 0.85, 0.85}, {0.85, 0.85, 0.85}},
                         0.0));
  CHECK(naive_collision(map, Segment{{0.85, 0.85, 0.85}, {0.85, 0.85, 0.85}},
                        0.0));
  CHECK_FALSE(
      detect_collision(map, Segment{{0.2, 0.2, 0.2}, {0.2, 0.2, 0.2}}, 0.0));
  // Point at distance 0.25 from the wall face: radius reaches it.
  CHECK(detect_collision(map, Segment{{0.55, 0.85, 0.85}, {0.55, 0.85, 0.85}},
                         0.3));
  CHECK_FALSE(detect_collision(
      map, Segment{{0.55, 0.85, 0.85}, {0.55, 0.85, 0.85}}, 0.2));
}

TEST_CASE("sample_segment is deterministic and has the requested length") {
  MapConfig cfg = cfg_4();
  std::uint64_t s1 = 7, s2 = 7, s3 = 8;
  Segment a = sample_segment(cfg, 20, s1);
  Segment b = sample_segment(cfg, 20, s2);
  CHECK(a.a == b.a);
  CHECK(a.b == b.b);
  CHECK(s1 == s2);
  double len = (a.b - a.a).norm();
  CHECK(len == doctest::Approx(20 * cfg.leaf_edge).epsilon(1e-9));
  CHECK(cfg.bounds().contains(a.a));
  CHECK(cfg.bounds().contains(a.b));
  Segment c = sample_segment(cfg, 20, s3);
  CHECK((c.a - a.a).norm() > 0.0);
}

TEST_CASE("benchmark produces rows and csv") {
  OccupancyMap map = wall_map();
  auto rows = benchmark_collision(map, {4, 8}, 16, 99);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].length_voxels == 4);
  CHECK(rows[0].detect_us > 0.0);
  CHECK(rows[0].naive_us > 0.0);
  std::ostringstream os;
  write_benchmark_csv(os, rows);
  CHECK(os.str().find("length_voxels,detect_us,naive_us") == 0);
}
