#include "fovnav/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fovnav {

void Gains::validate() const {
  for (double k : {k1, k2, k3, k4, k5, k6}) require_finite(k, "gain");
  if (!is_hurwitz(assemble_closed_loop(*this)))
    throw std::invalid_argument("gains: closed loop is not Hurwitz");
}

void DynamicLimits::validate() const {
  for (double v : {v_max, omega_max, a_max, j_max}) {
    require_finite(v, "limit");
    if (v <= 0.0) throw std::invalid_argument("limits must be positive");
  }
}

void RobotGeometry::validate() const {
  for (double v : {r_robot, e_p, e_psi}) {
    require_finite(v, "geometry");
    if (v <= 0.0) throw std::invalid_argument("geometry must be positive");
  }
}

StateMat assemble_closed_loop(const Gains& g) {
  StateMat A = StateMat::Zero();
  for (int ax = 0; ax < 3; ++ax) {
    A(ax, 4 + ax) = 1.0;        // p' = v
    A(4 + ax, 8 + ax) = 1.0;    // v' = a
    A(8 + ax, 11 + ax) = 1.0;   // a' = j
    A(11 + ax, ax) = g.k1;      // j' = k1 e_p + k2 v + k3 a + k4 j
    A(11 + ax, 4 + ax) = g.k2;
    A(11 + ax, 8 + ax) = g.k3;
    A(11 + ax, 11 + ax) = g.k4;
  }
  A(3, 7) = 1.0;   // psi' = omega
  A(7, 3) = g.k5;  // omega' = k5 e_psi + k6 omega
  A(7, 7) = g.k6;
  return A;
}

bool is_hurwitz(const Eigen::MatrixXd& A, double margin) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) return false;
  return (es.eigenvalues().real().array() < -margin).all();
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A) {
  const auto n = A.rows();
  if (A.cols() != n) throw std::invalid_argument("lyapunov: A not square");
  if (!is_hurwitz(A)) throw std::invalid_argument("lyapunov: A not Hurwitz");

  // vec(A^T P) = (I kron A^T) vec(P), vec(P A) = (A^T kron I) vec(P).
  const auto n2 = n * n;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n2, n2);
  const Eigen::MatrixXd At = A.transpose();
  for (Eigen::Index j = 0; j < n; ++j)
    M.block(j * n, j * n, n, n) += At;                  // I kron A^T
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      M.block(i * n, j * n, n, n).diagonal().array() += At(i, j);  // A^T kron I

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(
      Eigen::MatrixXd(-Eigen::MatrixXd::Identity(n, n)).data(), n2);
  Eigen::VectorXd x = lu.solve(rhs);
  Eigen::MatrixXd P = Eigen::Map<Eigen::MatrixXd>(x.data(), n, n);
  P = ((P + P.transpose()) / 2.0).eval();

  // A few rounds of residual refinement tighten stiff systems well past the
  // plain LU solution.
  for (int pass = 0; pass < 4; ++pass) {
    Eigen::MatrixXd R = At * P + P * A + Eigen::MatrixXd::Identity(n, n);
    if (R.cwiseAbs().maxCoeff() < 1e-13) break;
    Eigen::VectorXd rv = Eigen::Map<const Eigen::VectorXd>(R.data(), n2);
    Eigen::VectorXd dx = lu.solve(-rv);
    Eigen::MatrixXd dP = Eigen::Map<Eigen::MatrixXd>(dx.data(), n, n);
    P = ((P + dP + (P + dP).transpose()) / 2.0).eval();
  }
  return P;
}

double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P) {
  Eigen::MatrixXd R = A.transpose() * P + P * A +
                      Eigen::MatrixXd::Identity(A.rows(), A.cols());
  return R.cwiseAbs().maxCoeff();
}

RhoResult max_rho(const Eigen::MatrixXd& P, const std::vector<double>& box) {
  const auto n = P.rows();
  if (static_cast<Eigen::Index>(box.size()) != n)
    throw std::invalid_argument("max_rho: box size mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("max_rho: P not positive definite");
  Eigen::MatrixXd Pinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  RhoResult best;
  best.rho = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (box[i] <= 0.0) throw std::invalid_argument("max_rho: box must be positive");
    double r = box[i] * box[i] / Pinv(i, i);
    if (r < best.rho) {
      best.rho = r;
      best.binding_index = static_cast<int>(i);
    }
  }
  return best;
}

Eigen::VectorXd extremal_point(const Eigen::MatrixXd& P, int i, double box_i) {
  const auto n = P.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("extremal_point: P not positive definite");
  Eigen::VectorXd col = llt.solve(Eigen::VectorXd::Unit(n, i));
  return col * (box_i / col(i));  // e_i = box_i exactly, e^T P e = box_i^2/Pinv_ii
}

FunnelSpec make_funnel(const Gains& gains, const DynamicLimits& limits,
                       const RobotGeometry& geometry) {
  gains.validate();
  limits.validate();
  geometry.validate();
  FunnelSpec spec;
  spec.gains = gains;
  spec.P = solve_lyapunov(assemble_closed_loop(gains));
  spec.box = {geometry.e_p,     geometry.e_p,     geometry.e_p,
              geometry.e_psi,   limits.v_max,     limits.v_max,
              limits.v_max,     limits.omega_max, limits.a_max,
              limits.a_max,     limits.a_max,     limits.j_max,
              limits.j_max,     limits.j_max};
  RhoResult r = max_rho(spec.P, spec.box);
  spec.rho = r.rho;
  spec.binding_index = r.binding_index;
  return spec;
}

PathParametrization::PathParametrization(const std::vector<Pose4>& waypoints) {
  if (waypoints.empty())
    throw std::invalid_argument("path: at least one waypoint required");
  points_.push_back(waypoints[0].p);
  psis_.push_back(waypoints[0].psi);
  knots_.push_back(0.0);
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    Vec3 dp = waypoints[i].p - points_.back();
    double dpsi = angle_diff(waypoints[i].psi, normalize_angle(psis_.back()));
    double ds = std::sqrt(dp.dot(dp) + dpsi * dpsi);
    if (ds == 0.0) continue;  // drop duplicate waypoints
    points_.push_back(waypoints[i].p);
    psis_.push_back(psis_.back() + dpsi);  // unwrapped
    knots_.push_back(knots_.back() + ds);
  }
}

PathParametrization::Ref PathParametrization::eval(double s) const {
  if (points_.empty()) throw std::logic_error("path: empty");
  s = std::clamp(s, 0.0, knots_.back());
  auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
  if (it == knots_.begin()) return {points_.front(), psis_.front()};
  if (it == knots_.end()) return {points_.back(), psis_.back()};
  std::size_t hi = static_cast<std::size_t>(it - knots_.begin());
  std::size_t lo = hi - 1;
  double u = (s - knots_[lo]) / (knots_[hi] - knots_[lo]);
  return {points_[lo] + (points_[hi] - points_[lo]) * u,
          psis_[lo] + (psis_[hi] - psis_[lo]) * u};
}

std::vector<Pose4> PathParametrization::remaining(double s) const {
  if (points_.empty()) return {};
  Ref eta = eval(s);
  std::vector<Pose4> out;
  out.emplace_back(eta.p, normalize_angle(eta.psi));
  s = std::clamp(s, 0.0, knots_.back());
  auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
  for (std::size_t i = static_cast<std::size_t>(it - knots_.begin());
       i < points_.size(); ++i) {
    if ((points_[i] - out.back().p).norm() > 0.0) {
      out.emplace_back(points_[i], normalize_angle(psis_[i]));
    }
  }
  return out;
}

PathParametrization splice_path(const PathParametrization& current, double s,
                                const std::vector<Pose4>& waypoints) {
  PathParametrization::Ref eta = current.eval(s);
  std::vector<Pose4> wps;
  wps.reserve(waypoints.size() + 1);
  wps.emplace_back(eta.p, normalize_angle(eta.psi));
  wps.insert(wps.end(), waypoints.begin(), waypoints.end());
  return PathParametrization(wps);
}

TrajectoryState TrajectoryState::at_rest(const Pose4& pose) {
  TrajectoryState st;
  st.z[0] = pose.p.x;
  st.z[1] = pose.p.y;
  st.z[2] = pose.p.z;
  st.z[3] = pose.psi;
  return st;
}

namespace {
StateVec error_at(const StateVec& z, const PathParametrization::Ref& eta) {
  StateVec e = z;
  e[0] -= eta.p.x;
  e[1] -= eta.p.y;
  e[2] -= eta.p.z;
  e[3] = angle_diff(z[3], normalize_angle(eta.psi));
  return e;
}

// Closed-loop derivative of z at reference eta; e is written for reuse.
StateVec deriv(const StateVec& z, const PathParametrization::Ref& eta,
               const Gains& g, StateVec& e) {
  e = error_at(z, eta);
  StateVec dz;
  for (int ax = 0; ax < 3; ++ax) {
    dz[ax] = z[4 + ax];
    dz[4 + ax] = z[8 + ax];
    dz[8 + ax] = z[11 + ax];
    dz[11 + ax] =
        g.k1 * e[ax] + g.k2 * z[4 + ax] + g.k3 * z[8 + ax] + g.k4 * z[11 + ax];
  }
  dz[3] = z[7];
  dz[7] = g.k5 * e[3] + g.k6 * z[7];
  return dz;
}
}  // namespace

StateVec tracking_error(const TrajectoryState& state,
                        const PathParametrization& path) {
  return error_at(state.z, path.eval(state.s));
}

AdvanceResult advance(TrajectoryState& state, const PathParametrization& path,
                      const FunnelSpec& funnel, double dt, double mu,
                      double fault_tol) {
  if (dt <= 0.0 || mu < 0.0) throw std::invalid_argument("advance: bad dt or mu");
  const double S = path.total();
  auto sdot = [&](const StateVec& e, double) {
    double V = e.dot(funnel.P * e);
    return mu * std::max(funnel.rho - V, 0.0);
  };

  StateVec e;
  // RK4 over the augmented [z; s] state.
  StateVec kz1 = deriv(state.z, path.eval(state.s), funnel.gains, e);
  double ks1 = sdot(e, state.s);
  StateVec z2 = state.z + kz1 * (dt / 2.0);
  double s2 = std::min(S, state.s + ks1 * (dt / 2.0));
  StateVec kz2 = deriv(z2, path.eval(s2), funnel.gains, e);
  double ks2 = sdot(e, s2);
  StateVec z3 = state.z + kz2 * (dt / 2.0);
  double s3 = std::min(S, state.s + ks2 * (dt / 2.0));
  StateVec kz3 = deriv(z3, path.eval(s3), funnel.gains, e);
  double ks3 = sdot(e, s3);
  StateVec z4 = state.z + kz3 * dt;
  double s4 = std::min(S, state.s + ks3 * dt);
  StateVec kz4 = deriv(z4, path.eval(s4), funnel.gains, e);
  double ks4 = sdot(e, s4);

  state.z += (kz1 + 2.0 * kz2 + 2.0 * kz3 + kz4) * (dt / 6.0);
  state.s = std::clamp(state.s + (ks1 + 2.0 * ks2 + 2.0 * ks3 + ks4) * (dt / 6.0),
                       0.0, S);
  state.t += dt;

  StateVec e_end = error_at(state.z, path.eval(state.s));
  AdvanceResult out;
  out.V = e_end.dot(funnel.P * e_end);
  out.fault = out.V > funnel.rho * (1.0 + fault_tol);
  return out;
}

FunnelRunResult run_funnel(const std::vector<Pose4>& waypoints,
                           const FunnelSpec& funnel,
                           const FunnelRunOptions& opts) {
  PathParametrization path(waypoints);
  TrajectoryState st = TrajectoryState::at_rest(
      Pose4(path.eval(0.0).p, normalize_angle(path.eval(0.0).psi)));
  FunnelRunResult run;
  const double S = path.total();
  long tick = 0;
  auto record = [&](double V) {
    if (opts.trace_stride <= 1 || tick % opts.trace_stride == 0)
      run.trace.push_back({st.t, st.s, V, st.z});
  };
  StateVec e0 = tracking_error(st, path);
  record(e0.dot(funnel.P * e0));
  while (st.t < opts.t_max) {
    AdvanceResult r = advance(st, path, funnel, opts.dt, opts.mu, opts.fault_tol);
    ++tick;
    record(r.V);
    if (r.fault) {
      run.fault = true;
      break;
    }
    if (st.s >= S) {
      StateVec e = tracking_error(st, path);
      if (e.cwiseAbs().maxCoeff() <= opts.terminal_tol) {
        run.reached = true;
        break;
      }
    }
  }
  run.t_end = st.t;
  if (run.trace.empty() || run.trace.back().t != st.t) {
    StateVec e = tracking_error(st, path);
    run.trace.push_back({st.t, st.s, e.dot(funnel.P * e), st.z});
  }
  return run;
}

}  // namespace fovnav
