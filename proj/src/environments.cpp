#include "fovnav/environments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <stdexcept>

namespace fovnav {

namespace {
Aabb ground_slab(double x0, double x1, double y0, double y1, double thickness) {
  return {{x0, y0, -thickness}, {x1, y1, 0.0}};
}

double yaw_towards(const Vec3& from, const Vec3& to) {
  double dx = to.x - from.x, dy = to.y - from.y;
  if (dx == 0.0 && dy == 0.0) return 0.0;
  return std::atan2(dy, dx);
}
}  // namespace

EnvironmentFixture make_forest(const ForestSpec& spec, std::uint64_t seed) {
  if (spec.size_x <= 0 || spec.size_y <= 0 || spec.height <= 0 ||
      spec.density < 0 || spec.radius_min <= 0 ||
      spec.radius_max < spec.radius_min)
    throw std::invalid_argument("forest spec invalid");
  std::mt19937_64 rng(seed);
  std::poisson_distribution<int> count(spec.density * spec.size_x * spec.size_y);
  std::uniform_real_distribution<double> ux(0.0, spec.size_x);
  std::uniform_real_distribution<double> uy(0.0, spec.size_y);
  std::uniform_real_distribution<double> ur(spec.radius_min, spec.radius_max);

  EnvironmentFixture fix;
  fix.scene.bounds = {{0, 0, 0}, {spec.size_x, spec.size_y, spec.height}};
  fix.scene.boxes.push_back(
      ground_slab(-1.0, spec.size_x + 1.0, -1.0, spec.size_y + 1.0, 0.3));
  int n = count(rng);
  for (int i = 0; i < n; ++i) {
    Cylinder c;
    c.cx = ux(rng);
    c.cy = uy(rng);
    c.radius = ur(rng);
    c.z0 = 0.0;
    c.z1 = spec.height;
    double ds = std::hypot(c.cx - spec.start.x, c.cy - spec.start.y);
    double dg = std::hypot(c.cx - spec.goal.x, c.cy - spec.goal.y);
    if (ds < spec.keepout + c.radius || dg < spec.keepout + c.radius) continue;
    fix.scene.cylinders.push_back(c);
  }
  fix.start = Pose4(spec.start, yaw_towards(spec.start, spec.goal));
  fix.goal = Pose4(spec.goal, yaw_towards(spec.start, spec.goal));
  return fix;
}

EnvironmentFixture make_validated_forest(const ForestSpec& spec,
                                         std::uint64_t seed, double clearance,
                                         double resolution,
                                         std::uint64_t* used_seed) {
  for (int attempt = 0; attempt < 10; ++attempt) {
    std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
    EnvironmentFixture fix = make_forest(spec, s);
    if (corridor_exists(fix.scene, fix.start.p, fix.goal.p, clearance,
                        resolution)) {
      if (used_seed) *used_seed = s;
      return fix;
    }
  }
  throw std::runtime_error("make_validated_forest: no corridor after 10 seeds");
}

EnvironmentFixture make_maze(const MazeSpec& spec) {
  if (spec.rows.empty()) throw std::invalid_argument("maze: empty grid");
  const std::size_t w = spec.rows.front().size();
  const int nrows = static_cast<int>(spec.rows.size());
  const double c = spec.cell;
  int si = -1, sj = -1, gi = -1, gj = -1;
  for (int r = 0; r < nrows; ++r) {
    if (spec.rows[r].size() != w) throw std::invalid_argument("maze: ragged grid");
    for (std::size_t col = 0; col < w; ++col) {
      char ch = spec.rows[r][col];
      if (ch == 'S') { si = static_cast<int>(col); sj = r; }
      else if (ch == 'G') { gi = static_cast<int>(col); gj = r; }
      else if (ch != '#' && ch != '.')
        throw std::invalid_argument("maze: unknown cell char");
    }
  }
  if (si < 0 || gi < 0) throw std::invalid_argument("maze: missing S or G");

  EnvironmentFixture fix;
  const double W = w * c, H = nrows * c;
  fix.scene.bounds = {{0, 0, 0}, {W, H, spec.wall_height}};
  fix.scene.boxes.push_back(ground_slab(0, W, 0, H, spec.slab_thickness));
  fix.scene.boxes.push_back(
      {{0, 0, spec.wall_height}, {W, H, spec.wall_height + spec.slab_thickness}});
  for (int r = 0; r < nrows; ++r)
    for (std::size_t col = 0; col < w; ++col)
      if (spec.rows[r][col] == '#') {
        double x0 = col * c, y0 = (nrows - 1 - r) * c;
        fix.scene.boxes.push_back(
            {{x0, y0, 0.0}, {x0 + c, y0 + c, spec.wall_height}});
      }
  auto cell_center = [&](int col, int row) {
    return Vec3{(col + 0.5) * c, (nrows - 1 - row + 0.5) * c, spec.fly_z};
  };
  Vec3 sp = cell_center(si, sj), gp = cell_center(gi, gj);
  fix.start = Pose4(sp, yaw_towards(sp, gp));
  fix.goal = Pose4(gp, yaw_towards(sp, gp));
  return fix;
}

MazeSpec pocket_maze() {
  MazeSpec spec;
  // The C-shaped pocket (rows 2-6, cols 5-8) opens west, straight at the
  // start; the direct start->goal line runs through its mouth into the east
  // wall, while open rows 1 and 7 keep the goal reachable around it.
  spec.rows = {
      "#############",
      "#...........#",
      "#....####...#",
      "#.......#...#",
      "#.S.....#.G.#",
      "#.......#...#",
      "#....####...#",
      "#...........#",
      "#############",
  };
  return spec;
}

std::pair<int, int> maze_cell_of(const MazeSpec& spec, const Vec3& p) {
  const int nrows = static_cast<int>(spec.rows.size());
  int col = static_cast<int>(std::floor(p.x / spec.cell));
  int row = nrows - 1 - static_cast<int>(std::floor(p.y / spec.cell));
  return {col, row};
}

std::vector<std::vector<int>> maze_grid_distances(const MazeSpec& spec,
                                                  std::pair<int, int> from) {
  const int nrows = static_cast<int>(spec.rows.size());
  const int ncols = static_cast<int>(spec.rows.front().size());
  std::vector<std::vector<int>> dist(nrows, std::vector<int>(ncols, -1));
  auto open = [&](int col, int row) {
    return col >= 0 && col < ncols && row >= 0 && row < nrows &&
           spec.rows[row][col] != '#';
  };
  if (!open(from.first, from.second))
    throw std::invalid_argument("maze bfs: source is a wall");
  std::queue<std::pair<int, int>> q;
  dist[from.second][from.first] = 0;
  q.push(from);
  const int dc[4] = {1, -1, 0, 0}, dr[4] = {0, 0, 1, -1};
  while (!q.empty()) {
    auto [col, row] = q.front();
    q.pop();
    for (int k = 0; k < 4; ++k) {
      int nc = col + dc[k], nr = row + dr[k];
      if (open(nc, nr) && dist[nr][nc] < 0) {
        dist[nr][nc] = dist[row][col] + 1;
        q.push({nc, nr});
      }
    }
  }
  return dist;
}

EnvironmentFixture make_corridor_mover() {
  EnvironmentFixture fix;
  fix.scene.bounds = {{0, 0, 0}, {14, 5, 2}};
  fix.scene.boxes.push_back(ground_slab(0, 14, 0, 5, 0.3));
  fix.scene.boxes.push_back({{0, 0, 2.0}, {14, 5, 2.3}});   // ceiling
  fix.scene.boxes.push_back({{0, 0.2, 0}, {14, 0.5, 2}});   // south wall
  fix.scene.boxes.push_back({{0, 4.5, 0}, {14, 4.8, 2}});   // north wall
  // Full-cross-section blocker: slides in at t=4..6, retreats at t=16..18.
  MoverScript m;
  m.half_extents = Vec3{0.5, 2.0, 1.0};
  m.times = {0.0, 4.0, 6.0, 16.0, 18.0};
  m.centers = {Vec3{7, 7.5, 1}, Vec3{7, 7.5, 1}, Vec3{7, 2.5, 1},
               Vec3{7, 2.5, 1}, Vec3{7, 7.5, 1}};
  fix.scene.movers.push_back(m);
  fix.start = Pose4(Vec3{1, 2.5, 1}, 0.0);
  fix.goal = Pose4(Vec3{13, 2.5, 1}, 0.0);
  return fix;
}

EnvironmentFixture make_open_field() {
  EnvironmentFixture fix;
  fix.scene.bounds = {{0, 0, 0}, {10, 10, 3}};
  fix.scene.boxes.push_back(ground_slab(0, 10, 0, 10, 0.3));
  fix.start = Pose4(Vec3{1, 5, 1}, 0.0);
  fix.goal = Pose4(Vec3{9, 5, 1}, 0.0);
  return fix;
}

bool corridor_exists(const GroundTruthScene& scene, const Vec3& start,
                     const Vec3& goal, double clearance, double resolution) {
  if (resolution <= 0) throw std::invalid_argument("corridor: bad resolution");
  const Aabb& b = scene.bounds;
  const int nx = std::max(1, static_cast<int>(std::ceil((b.hi.x - b.lo.x) / resolution)));
  const int ny = std::max(1, static_cast<int>(std::ceil((b.hi.y - b.lo.y) / resolution)));
  const int nz = std::max(1, static_cast<int>(std::ceil((b.hi.z - b.lo.z) / resolution)));
  const std::size_t total = static_cast<std::size_t>(nx) * ny * nz;
  if (total > (std::size_t{1} << 27))
    throw std::invalid_argument("corridor: grid too large");

  auto center = [&](int ix, int iy, int iz) {
    return Vec3{b.lo.x + (ix + 0.5) * resolution, b.lo.y + (iy + 0.5) * resolution,
                b.lo.z + (iz + 0.5) * resolution};
  };
  auto id = [&](int ix, int iy, int iz) {
    return (static_cast<std::size_t>(iz) * ny + iy) * nx + ix;
  };

  // Stamp blocked cells primitive-by-primitive (each one only touches cells
  // inside its clearance-inflated AABB), then BFS the rest.
  std::vector<std::uint8_t> blocked(total, 0);
  auto stamp = [&](const Aabb& reach, auto&& dist_fn) {
    int x0 = std::max(0, static_cast<int>(std::floor((reach.lo.x - b.lo.x) / resolution)));
    int y0 = std::max(0, static_cast<int>(std::floor((reach.lo.y - b.lo.y) / resolution)));
    int z0 = std::max(0, static_cast<int>(std::floor((reach.lo.z - b.lo.z) / resolution)));
    int x1 = std::min(nx - 1, static_cast<int>(std::floor((reach.hi.x - b.lo.x) / resolution)));
    int y1 = std::min(ny - 1, static_cast<int>(std::floor((reach.hi.y - b.lo.y) / resolution)));
    int z1 = std::min(nz - 1, static_cast<int>(std::floor((reach.hi.z - b.lo.z) / resolution)));
    for (int iz = z0; iz <= z1; ++iz)
      for (int iy = y0; iy <= y1; ++iy)
        for (int ix = x0; ix <= x1; ++ix)
          if (dist_fn(center(ix, iy, iz)) <= clearance) blocked[id(ix, iy, iz)] = 1;
  };
  const Vec3 grow{clearance + resolution, clearance + resolution,
                  clearance + resolution};
  for (const Aabb& box : scene.boxes)
    stamp({box.lo - grow, box.hi + grow},
          [&](const Vec3& p) { return point_box_distance(p, box); });
  for (const Cylinder& cyl : scene.cylinders) {
    Aabb cb{{cyl.cx - cyl.radius, cyl.cy - cyl.radius, cyl.z0},
            {cyl.cx + cyl.radius, cyl.cy + cyl.radius, cyl.z1}};
    stamp({cb.lo - grow, cb.hi + grow},
          [&](const Vec3& p) { return cyl.distance(p); });
  }

  auto cell_of = [&](const Vec3& p, int& ix, int& iy, int& iz) {
    ix = static_cast<int>(std::floor((p.x - b.lo.x) / resolution));
    iy = static_cast<int>(std::floor((p.y - b.lo.y) / resolution));
    iz = static_cast<int>(std::floor((p.z - b.lo.z) / resolution));
    return ix >= 0 && ix < nx && iy >= 0 && iy < ny && iz >= 0 && iz < nz;
  };
  int sx, sy, sz, gx, gy, gz;
  if (!cell_of(start, sx, sy, sz) || !cell_of(goal, gx, gy, gz)) return false;
  if (blocked[id(sx, sy, sz)] || blocked[id(gx, gy, gz)]) return false;

  std::vector<std::uint8_t> seen(total, 0);
  std::queue<std::array<int, 3>> q;
  seen[id(sx, sy, sz)] = 1;
  q.push({sx, sy, sz});
  const int step[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                          {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!q.empty()) {
    auto [ix, iy, iz] = q.front();
    q.pop();
    if (ix == gx && iy == gy && iz == gz) return true;
    for (const auto& d : step) {
      int jx = ix + d[0], jy = iy + d[1], jz = iz + d[2];
      if (jx < 0 || jx >= nx || jy < 0 || jy >= ny || jz < 0 || jz >= nz) continue;
      std::size_t j = id(jx, jy, jz);
      if (seen[j] || blocked[j]) continue;
      seen[j] = 1;
      q.push({jx, jy, jz});
    }
  }
  return false;
}

MapConfig config_covering(const Aabb& box, double leaf_edge, double max_extent) {
  MapConfig cfg;
  cfg.leaf_edge = leaf_edge;
  cfg.max_extent = max_extent;
  // Snap the origin down to the leaf lattice with one leaf of margin.
  auto snap = [&](double v) {
    return std::floor((v - leaf_edge) / leaf_edge) * leaf_edge;
  };
  cfg.origin = Vec3{snap(box.lo.x), snap(box.lo.y), snap(box.lo.z)};
  double need = std::max({box.hi.x - cfg.origin.x, box.hi.y - cfg.origin.y,
                          box.hi.z - cfg.origin.z}) +
                leaf_edge;
  int levels = 1;
  while (std::ldexp(leaf_edge, levels) < need) ++levels;
  cfg.levels = levels;
  cfg.validate();
  return cfg;
}

OccupancyMap rasterize_scene(const GroundTruthScene& scene, const MapConfig& cfg,
                             double time) {
  OccupancyMap map(cfg);
  const double r = cfg.leaf_edge;
  const Vec3 o = cfg.origin;
  const std::int64_t side = std::int64_t{1} << cfg.levels;
  auto fill = [&](const Aabb& bb, auto&& inside) {
    auto lo_idx = [&](double v, double org) {
      return std::max<std::int64_t>(
          0, static_cast<std::int64_t>(std::floor((v - org) / r)));
    };
    auto hi_idx = [&](double v, double org) {
      return std::min<std::int64_t>(
          side - 1, static_cast<std::int64_t>(std::floor((v - org) / r)));
    };
    for (std::int64_t iz = lo_idx(bb.lo.z, o.z); iz <= hi_idx(bb.hi.z, o.z); ++iz)
      for (std::int64_t iy = lo_idx(bb.lo.y, o.y); iy <= hi_idx(bb.hi.y, o.y); ++iy)
        for (std::int64_t ix = lo_idx(bb.lo.x, o.x); ix <= hi_idx(bb.hi.x, o.x); ++ix) {
          Vec3 c{o.x + (ix + 0.5) * r, o.y + (iy + 0.5) * r, o.z + (iz + 0.5) * r};
          if (inside(c)) map.insert_hit(c, 10.0);
        }
  };
  for (const Aabb& b : scene.boxes)
    fill(b, [&](const Vec3& p) { return b.contains(p); });
  for (const Cylinder& c : scene.cylinders) {
    Aabb cb{{c.cx - c.radius, c.cy - c.radius, c.z0},
            {c.cx + c.radius, c.cy + c.radius, c.z1}};
    fill(cb, [&](const Vec3& p) { return c.contains(p); });
  }
  for (const MoverScript& m : scene.movers) {
    Aabb mb = m.box_at(time);
    fill(mb, [&](const Vec3& p) { return mb.contains(p); });
  }
  return map;
}

}  // namespace fovnav
