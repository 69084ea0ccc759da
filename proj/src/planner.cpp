#include "fovnav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fovnav/collision.hpp"

namespace fovnav {

void PlannerConfig::validate() const {
  if (!(step_size > 0.0) || !(rewire_radius > 0.0) || !(goal_tolerance > 0.0) ||
      !(segment_check_step > 0.0)) {
    throw std::invalid_argument("planner config: lengths must be positive");
  }
  if (max_iterations <= 0 || join_candidates <= 0 || sample_tries <= 0 ||
      replan_retry_limit <= 0) {
    throw std::invalid_argument("planner config: counts must be positive");
  }
  if (!(pitch_fraction > 0.0) || pitch_fraction > 1.0) {
    throw std::invalid_argument("planner config: pitch_fraction in (0, 1]");
  }
  if (plan_slack < 0.0) {
    throw std::invalid_argument("planner config: plan_slack must be >= 0");
  }
}

PlannerConfig default_planner_config(double radius, double leaf_edge) {
  if (!(radius > 0.0) || !(leaf_edge > 0.0)) {
    throw std::invalid_argument("planner defaults: radius/leaf_edge > 0");
  }
  PlannerConfig cfg;
  cfg.step_size = 2.0 * radius;
  cfg.rewire_radius = 4.0 * radius;
  cfg.goal_tolerance = radius;
  cfg.segment_check_step = 0.5 * leaf_edge;
  cfg.plan_slack = leaf_edge;
  return cfg;
}

namespace {

struct Tree {
  struct Node {
    Vec3 p;
    int parent = -1;
    double cost = 0.0;
  };
  std::vector<Node> nodes;
  std::vector<std::vector<int>> children;

  explicit Tree(const Vec3& root) {
    nodes.push_back({root, -1, 0.0});
    children.emplace_back();
  }

  int add(const Vec3& p, int parent, double cost) {
    nodes.push_back({p, parent, cost});
    children.emplace_back();
    children[static_cast<std::size_t>(parent)].push_back(
        static_cast<int>(nodes.size()) - 1);
    return static_cast<int>(nodes.size()) - 1;
  }

  int nearest(const Vec3& q) const {
    int best = 0;
    double best_d = (nodes[0].p - q).norm();
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      double d = (nodes[i].p - q).norm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  void reparent(int node, int new_parent, double new_cost) {
    auto& old_kids =
        children[static_cast<std::size_t>(nodes[static_cast<std::size_t>(node)].parent)];
    old_kids.erase(std::find(old_kids.begin(), old_kids.end(), node));
    nodes[static_cast<std::size_t>(node)].parent = new_parent;
    children[static_cast<std::size_t>(new_parent)].push_back(node);
    double shift = new_cost - nodes[static_cast<std::size_t>(node)].cost;
    // propagate the cost change through the whole subtree
    std::vector<int> stack{node};
    while (!stack.empty()) {
      int n = stack.back();
      stack.pop_back();
      nodes[static_cast<std::size_t>(n)].cost += shift;
      for (int c : children[static_cast<std::size_t>(n)]) stack.push_back(c);
    }
  }

  std::vector<Vec3> chain_to_root(int node) const {
    std::vector<Vec3> out;
    for (int n = node; n != -1; n = nodes[static_cast<std::size_t>(n)].parent) {
      out.push_back(nodes[static_cast<std::size_t>(n)].p);
    }
    return out;  // node first, root last
  }
};

// Fraction of the planning margin an escape hop must clear: the hard body
// radius rather than the full tracking margin.
constexpr double kHopRadius = 0.4;

// Climb-rate limit: an edge may not pitch steeper than a fixed fraction of
// the camera's vertical half-fov, so the follower can keep it in view.
bool pitch_ok(const Vec3& a, const Vec3& b, double max_tan) {
  double dz = std::fabs(b.z - a.z);
  double dxy = std::hypot(b.x - a.x, b.y - a.y);
  if (dxy == 0.0) return dz == 0.0;
  return dz <= max_tan * dxy;
}

bool edge_ok(const OccupancyMap& map, const Vec3& a, const Vec3& b,
             double radius, double max_tan) {
  return pitch_ok(a, b, max_tan) && !detect_collision(map, {a, b}, radius);
}

// Uniform sample over the frustum volume: axial depth by inverse-cdf of the
// x^2 cross-section growth, tangents uniform over the angular window.
Vec3 sample_frustum(const Frustum& f, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double c0 = f.depth_min * f.depth_min * f.depth_min;
  double c1 = f.depth_max * f.depth_max * f.depth_max;
  double x = std::cbrt(c0 + (c1 - c0) * uni(rng));
  double th = std::tan(0.5 * f.h_fov);
  double tv = std::tan(0.5 * f.v_fov);
  double ty = th * (2.0 * uni(rng) - 1.0);
  double tz = tv * (2.0 * uni(rng) - 1.0);
  return f.from_camera({x, x * ty, x * tz});
}

Vec3 sample_box(const Aabb& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(box.lo.x, box.hi.x);
  std::uniform_real_distribution<double> uy(box.lo.y, box.hi.y);
  std::uniform_real_distribution<double> uz(box.lo.z, box.hi.z);
  return {ux(rng), uy(rng), uz(rng)};
}

std::vector<Vec3> drop_duplicate_points(const std::vector<Vec3>& pts) {
  std::vector<Vec3> out;
  for (const Vec3& p : pts) {
    if (out.empty() || (p - out.back()).norm() > 0.0) out.push_back(p);
  }
  return out;
}

// Greedy shortcut: from each kept waypoint jump to the farthest later
// waypoint reachable by a single feasible edge. Edges touching a path end
// use the tighter end radius, interior edges the build radius.
std::vector<Vec3> shortcut(const OccupancyMap& map, const std::vector<Vec3>& pts,
                           double r_end, double r_build, double max_tan) {
  if (pts.size() <= 2) return pts;
  std::vector<Vec3> out{pts.front()};
  std::size_t i = 0;
  while (i + 1 < pts.size()) {
    std::size_t best = i + 1;
    for (std::size_t k = pts.size() - 1; k > i + 1; --k) {
      double r = (i == 0 || k + 1 == pts.size()) ? r_end : r_build;
      if (edge_ok(map, pts[i], pts[k], r, max_tan)) {
        best = k;
        break;
      }
    }
    out.push_back(pts[best]);
    i = best;
  }
  return out;
}

std::vector<Pose4> assign_yaw(const std::vector<Vec3>& pts, double goal_psi) {
  std::vector<Pose4> out;
  out.reserve(pts.size());
  double prev = goal_psi;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    Vec3 d = pts[i + 1] - pts[i];
    double psi = (d.x == 0.0 && d.y == 0.0) ? prev : std::atan2(d.y, d.x);
    out.emplace_back(pts[i], psi);
    prev = psi;
  }
  out.emplace_back(pts.back(), goal_psi);
  return out;
}

}  // namespace

std::optional<std::vector<Pose4>> solve_rrt_connect(
    const OccupancyMap& map, const Frustum& view, const Pose4& start,
    const Pose4& goal, double radius, const PlannerConfig& cfg,
    std::mt19937_64& rng, RrtDebug* debug) {
  cfg.validate();
  if (!(radius > 0.0)) throw std::invalid_argument("rrt: radius must be > 0");
  if (!is_in_free(map, view, start.p, radius)) {
    throw std::invalid_argument("rrt: start violates the free-region precondition");
  }
  if (!map.is_navigable(goal.p, radius)) {
    throw std::invalid_argument("rrt: goal is not navigable");
  }
  RrtDebug local;
  RrtDebug& dbg = debug ? *debug : local;
  dbg = RrtDebug{};

  const double max_tan = std::tan(cfg.pitch_fraction * 0.5 * view.v_fov);
  // Plans are built with headroom above the flight radius so that surfaces
  // growing by a voxel as they come into better view do not immediately
  // invalidate the committed path. Edges incident to the start or goal keep
  // the base radius: those endpoints only have to satisfy the preconditions.
  const double r_build = radius + cfg.plan_slack;

  auto finish = [&](std::vector<Vec3> pts) -> std::optional<std::vector<Pose4>> {
    pts = drop_duplicate_points(pts);
    pts = shortcut(map, pts, radius, r_build, max_tan);
    return assign_yaw(pts, goal.psi);
  };

  if ((goal.p - start.p).norm() <= cfg.goal_tolerance) {
    return std::vector<Pose4>{Pose4(start.p, goal.psi)};
  }
  if (edge_ok(map, start.p, goal.p, radius, max_tan)) {
    return finish({start.p, goal.p});
  }

  Tree tree_c(start.p);  // grows through the observed free region of the view
  Tree tree_f(goal.p);   // grows through the navigable volume

  Aabb nav_box = map.config().bounds();
  if (cfg.sample_bounds.hi.x > cfg.sample_bounds.lo.x &&
      cfg.sample_bounds.hi.y > cfg.sample_bounds.lo.y &&
      cfg.sample_bounds.hi.z > cfg.sample_bounds.lo.z) {
    nav_box = cfg.sample_bounds;
  }
  nav_box.lo = {std::min(nav_box.lo.x, goal.p.x - 1.0),
                std::min(nav_box.lo.y, goal.p.y - 1.0),
                std::min(nav_box.lo.z, goal.p.z - 1.0)};
  nav_box.hi = {std::max(nav_box.hi.x, goal.p.x + 1.0),
                std::max(nav_box.hi.y, goal.p.y + 1.0),
                std::max(nav_box.hi.z, goal.p.z + 1.0)};

  auto in_region = [&](bool view_tree, const Vec3& q) {
    return view_tree ? is_in_free(map, view, q, r_build)
                     : map.is_navigable(q, r_build);
  };
  // Edge clearance: base radius when one endpoint is a tree root (the robot
  // or the goal), build radius otherwise.
  auto edge_r = [&](int node_idx) { return node_idx == 0 ? radius : r_build; };

  // Extend one tree toward a region-valid sample with rewiring; returns the
  // index of the inserted node or -1.
  auto extend = [&](Tree& tree, bool view_tree) -> int {
    Vec3 q;
    bool have = false;
    for (int t = 0; t < cfg.sample_tries && !have; ++t) {
      q = view_tree ? sample_frustum(view, rng) : sample_box(nav_box, rng);
      have = in_region(view_tree, q);
    }
    if (!have) return -1;

    int near = tree.nearest(q);
    const Vec3& pn = tree.nodes[static_cast<std::size_t>(near)].p;
    Vec3 d = q - pn;
    double dist = d.norm();
    if (dist == 0.0) return -1;
    Vec3 p_new = dist <= cfg.step_size ? q : pn + d * (cfg.step_size / dist);
    if (p_new != q && !in_region(view_tree, p_new)) return -1;

    // neighbourhood, sorted by arrival cost
    struct Cand {
      int idx;
      double cost;
    };
    std::vector<Cand> near_set;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      double dd = (tree.nodes[i].p - p_new).norm();
      if (dd <= cfg.rewire_radius) {
        near_set.push_back({static_cast<int>(i), tree.nodes[i].cost + dd});
      }
    }
    std::sort(near_set.begin(), near_set.end(), [](const Cand& a, const Cand& b) {
      return a.cost != b.cost ? a.cost < b.cost : a.idx < b.idx;
    });

    int parent = -1;
    double cost = 0.0;
    for (const Cand& c : near_set) {
      if (edge_ok(map, tree.nodes[static_cast<std::size_t>(c.idx)].p, p_new,
                  edge_r(c.idx), max_tan)) {
        parent = c.idx;
        cost = c.cost;
        break;
      }
    }
    if (parent == -1) {
      if (!edge_ok(map, pn, p_new, edge_r(near), max_tan)) return -1;
      parent = near;
      cost = tree.nodes[static_cast<std::size_t>(near)].cost + dist;
    }
    int idx = tree.add(p_new, parent, cost);

    for (const Cand& c : near_set) {
      if (c.idx == parent) continue;
      double via = cost + (tree.nodes[static_cast<std::size_t>(c.idx)].p - p_new).norm();
      if (via + 1e-12 < tree.nodes[static_cast<std::size_t>(c.idx)].cost &&
          edge_ok(map, p_new, tree.nodes[static_cast<std::size_t>(c.idx)].p,
                  r_build, max_tan)) {
        if (via > tree.nodes[static_cast<std::size_t>(c.idx)].cost) {
          dbg.cost_monotone = false;
        }
        tree.reparent(c.idx, idx, via);
        ++dbg.rewires;
      }
    }
    return idx;
  };

  auto assemble = [&](int c_node, int f_node) {
    std::vector<Vec3> c_chain = tree_c.chain_to_root(c_node);
    std::reverse(c_chain.begin(), c_chain.end());  // start .. c_node
    std::vector<Vec3> f_chain = tree_f.chain_to_root(f_node);  // f_node .. goal
    c_chain.insert(c_chain.end(), f_chain.begin(), f_chain.end());
    return c_chain;
  };

  for (int it = 0; it < cfg.max_iterations; ++it) {
    ++dbg.iterations;
    bool grow_view = (it % 2) == 0;
    if (grow_view) {
      int idx = extend(tree_c, true);
      if (idx < 0) continue;
      // join: nearest nodes of the far tree first
      struct Cand {
        int idx;
        double d;
      };
      std::vector<Cand> cands;
      cands.reserve(tree_f.nodes.size());
      for (std::size_t i = 0; i < tree_f.nodes.size(); ++i) {
        cands.push_back({static_cast<int>(i),
                         (tree_f.nodes[i].p -
                          tree_c.nodes[static_cast<std::size_t>(idx)].p)
                             .norm()});
      }
      std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return a.d != b.d ? a.d < b.d : a.idx < b.idx;
      });
      int limit = std::min<int>(cfg.join_candidates, static_cast<int>(cands.size()));
      for (int k = 0; k < limit; ++k) {
        ++dbg.joins_tried;
        int fi = cands[static_cast<std::size_t>(k)].idx;
        if (edge_ok(map, tree_c.nodes[static_cast<std::size_t>(idx)].p,
                    tree_f.nodes[static_cast<std::size_t>(fi)].p, edge_r(fi),
                    max_tan)) {
          dbg.tree_view_size = tree_c.nodes.size();
          dbg.tree_free_size = tree_f.nodes.size();
          return finish(assemble(idx, fi));
        }
      }
    } else {
      int idx = extend(tree_f, false);
      if (idx < 0) continue;
      // join: view-tree nodes farthest from the start first, so the committed
      // in-view prefix is as long as possible
      struct Cand {
        int idx;
        double from_start;
      };
      std::vector<Cand> cands;
      cands.reserve(tree_c.nodes.size());
      for (std::size_t i = 0; i < tree_c.nodes.size(); ++i) {
        cands.push_back({static_cast<int>(i), (tree_c.nodes[i].p - start.p).norm()});
      }
      std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return a.from_start != b.from_start ? a.from_start > b.from_start
                                            : a.idx < b.idx;
      });
      int limit = std::min<int>(cfg.join_candidates, static_cast<int>(cands.size()));
      for (int k = 0; k < limit; ++k) {
        ++dbg.joins_tried;
        int ci = cands[static_cast<std::size_t>(k)].idx;
        if (edge_ok(map, tree_c.nodes[static_cast<std::size_t>(ci)].p,
                    tree_f.nodes[static_cast<std::size_t>(idx)].p, edge_r(ci),
                    max_tan)) {
          dbg.tree_view_size = tree_c.nodes.size();
          dbg.tree_free_size = tree_f.nodes.size();
          return finish(assemble(ci, idx));
        }
      }
    }
  }
  dbg.tree_view_size = tree_c.nodes.size();
  dbg.tree_free_size = tree_f.nodes.size();
  return std::nullopt;
}

bool path_invalidated(const OccupancyMap& map, const std::vector<Pose4>& path,
                      double radius) {
  if (path.empty()) return false;
  if (path.size() == 1) {
    return detect_collision(map, {path[0].p, path[0].p}, radius);
  }
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (detect_collision(map, {path[i].p, path[i + 1].p}, radius)) return true;
  }
  return false;
}

std::optional<SubPathSplit> extract_subpath(const OccupancyMap& map,
                                            const Frustum& view,
                                            const std::vector<Pose4>& path,
                                            double radius, double step) {
  if (path.empty()) throw std::invalid_argument("extract_subpath: empty path");
  if (!(step > 0.0)) throw std::invalid_argument("extract_subpath: step must be > 0");
  // The tracker parks within millimetres of the path head, from where the
  // head can sit marginally outside the zero-depth view cone. The robot's own
  // voxel counts as observed: the vehicle physically occupies it.
  const Vec3& head = path[0].p;
  bool head_free = is_in_free(map, view, head, radius) ||
                   ((head - view.origin).norm() <= map.config().leaf_edge &&
                    map.is_navigable(head, radius));
  if (!head_free) return std::nullopt;

  SubPathSplit out;
  out.committed.push_back(path[0]);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec3& a = path[i].p;
    const Vec3& b = path[i + 1].p;
    double len = (b - a).norm();
    int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    Vec3 last_ok = a;
    bool clipped = false;
    for (int k = 1; k <= n; ++k) {
      Vec3 q = a + (b - a) * (static_cast<double>(k) / n);
      if (!is_in_free(map, view, q, radius)) {
        clipped = true;
        break;
      }
      last_ok = q;
    }
    if (clipped) {
      // the boundary keeps the clipped segment's travel yaw so the held view
      // faces where extension will resume
      if ((last_ok - out.committed.back().p).norm() > 0.0) {
        out.committed.emplace_back(last_ok, path[i].psi);
      }
      Pose4 boundary = out.committed.back();
      out.pending.push_back(boundary);
      out.pending.insert(out.pending.end(), path.begin() + static_cast<long>(i) + 1,
                         path.end());
      return out;
    }
    out.committed.push_back(path[i + 1]);
  }
  out.reaches_goal = true;
  out.pending.push_back(path.back());
  return out;
}

Planner::Planner(const Pose4& goal, double radius, const PlannerConfig& cfg,
                 std::uint64_t seed)
    : goal_(goal), radius_(radius), cfg_(cfg), rng_(seed) {
  cfg_.validate();
  if (!(radius > 0.0)) throw std::invalid_argument("planner: radius must be > 0");
}

Planner::StepResult Planner::step(const OccupancyMap& map, const Frustum& view,
                                  const Pose4& robot,
                                  const std::vector<Pose4>& committed_ahead,
                                  const std::optional<Pose4>& fallback_start) {
  StepResult res;
  // The flown reference is audited even when no global remainder is stored:
  // the caller keeps flying it while we hold. Its first segment is the splice
  // bridge from the tracked point onto the plan head — tracking plumbing the
  // solver never owned — so it and the tracked point itself are audited at
  // the hard body radius; the plan proper gets the full margin.
  bool committed_bad = false;
  if (committed_ahead.size() >= 2) {
    committed_bad =
        detect_collision(map, {committed_ahead[0].p, committed_ahead[1].p},
                         kHopRadius * radius_);
    if (!committed_bad) {
      std::vector<Pose4> tail(committed_ahead.begin() + 1, committed_ahead.end());
      committed_bad = path_invalidated(map, tail, radius_);
    }
  } else if (!committed_ahead.empty()) {
    committed_bad = detect_collision(
        map, {committed_ahead[0].p, committed_ahead[0].p}, kHopRadius * radius_);
  }
  bool pending_bad = have_path_ && path_invalidated(map, pending_, radius_);
  if (committed_bad || pending_bad) {
    pending_.clear();
    have_path_ = false;
    res.invalidated = true;
  }

  if (!have_path_) {
    struct Candidate {
      Pose4 from;
      bool nudge;
    };
    std::vector<Candidate> candidates;
    // A plan that died beyond the flown reference is rebuilt from the end of
    // the committed tail first: the route already being flown is kept and the
    // robot is not sent back over its own track.
    if (pending_bad && !committed_bad && !committed_ahead.empty()) {
      candidates.push_back({committed_ahead.back(), false});
    }
    candidates.push_back({robot, false});
    if (fallback_start) {
      candidates.push_back({*fallback_start, false});
      // Escape ring: freshly observed surfaces can grow a voxel and pinch the
      // held reference below the start margin. Offer deterministic nudged
      // starts next to it; the short hop from the reference is only required
      // to clear the hard body radius, not the full margin. Hops stay well
      // inside the follower's position error bound so the spliced reference
      // does not jerk the tracker outside its funnel.
      static const Vec3 kDirs[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                    {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
      for (double f : {0.25, 0.5}) {
        for (const Vec3& d : kDirs) {
          candidates.push_back({Pose4(fallback_start->p + d * (f * radius_),
                                      fallback_start->psi),
                                true});
        }
      }
    }
    for (const Candidate& cand : candidates) {
      const Pose4& from = cand.from;
      if (!is_in_free(map, view, from.p, radius_)) continue;
      if (cand.nudge &&
          detect_collision(map, {fallback_start->p, from.p}, kHopRadius * radius_)) {
        continue;
      }
      std::optional<std::vector<Pose4>> path;
      try {
        path = solve_rrt_connect(map, view, from, goal_, radius_, cfg_, rng_,
                                 &debug_);
      } catch (const std::invalid_argument&) {
        continue;  // e.g. the goal is currently blocked
      }
      if (path) {
        pending_ = std::move(*path);
        have_path_ = true;
        failures_ = 0;
        res.replanned = true;
        break;
      }
    }
    if (!have_path_) {
      ++failures_;
      res.status = failures_ > cfg_.replan_retry_limit ? Status::kUnreachable
                                                       : Status::kHold;
      return res;
    }
  }

  auto split = extract_subpath(map, view, pending_, radius_,
                               cfg_.segment_check_step);
  if (!split) {
    // path head slipped out of this frame's free region; keep it and retry
    res.status = Status::kHold;
    return res;
  }
  res.status = Status::kSubPath;
  res.subpath = std::move(split->committed);
  res.reaches_goal = split->reaches_goal;
  pending_ = std::move(split->pending);
  return res;
}

}  // namespace fovnav
