#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fovnav/geometry.hpp"

namespace fovnav {

/// Error-state dimension: [p(3), psi, v(3), omega, a(3), j(3)].
inline constexpr int kStateDim = 14;

/// Closed-loop feedback gains. Position axes share the jerk-level chain
/// j' = k1*e_p + k2*v + k3*a + k4*j; yaw uses omega' = k5*e_psi + k6*omega.
/// Defaults are the stock configuration values.
struct Gains {
  double k1 = -55.0;
  double k2 = -843.75;
  double k3 = -5406.2;
  double k4 = -10687.5;
  double k5 = -10.5;
  double k6 = -33.3;

  /// Throws unless every gain is finite and the closed loop is Hurwitz.
  void validate() const;
};

struct DynamicLimits {
  double v_max = 0.5;
  double omega_max = 0.6;
  double a_max = 3.0;
  double j_max = 6.0;

  void validate() const;
};

struct RobotGeometry {
  double r_robot = 0.2;  // physical radius
  double e_p = 0.3;      // funnel position halfwidth
  double e_psi = 1.0;    // funnel yaw halfwidth

  void validate() const;
  /// Planning radius: physical radius inflated by the tracking bound.
  double margin_radius() const { return r_robot + e_p; }
};

using StateVec = Eigen::Matrix<double, kStateDim, 1>;
using StateMat = Eigen::Matrix<double, kStateDim, kStateDim>;

/// Closed-loop system matrix for the error dynamics e' = A e.
StateMat assemble_closed_loop(const Gains& gains);

/// All eigenvalues strictly in the left half plane (real part < -margin).
bool is_hurwitz(const Eigen::MatrixXd& A, double margin = 0.0);

/// Solve P A + A^T P = -I for symmetric positive-definite P via the
/// Kronecker-product linear system plus iterative refinement. Throws if A is
/// not Hurwitz. Works for any square A.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A);

/// Max residual entry |A^T P + P A + I|.
double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P);

/// Largest rho with {e : e^T P e <= rho} inside the centered box of the given
/// halfwidths: rho = min_i box_i^2 / (P^-1)_ii.
struct RhoResult {
  double rho = 0.0;
  int binding_index = -1;
};
RhoResult max_rho(const Eigen::MatrixXd& P, const std::vector<double>& box);

/// Boundary point of {e^T P e = rho_i} achieving |e_i| = box_i, where
/// rho_i = box_i^2 / (P^-1)_ii: the ellipsoid touches that box face here.
Eigen::VectorXd extremal_point(const Eigen::MatrixXd& P, int i, double box_i);

/// Funnel invariant: P, its certified level rho, and the box it was fit to.
struct FunnelSpec {
  Gains gains;
  StateMat P;
  double rho = 0.0;
  std::vector<double> box;  // kStateDim halfwidths
  int binding_index = -1;
};

FunnelSpec make_funnel(const Gains& gains, const DynamicLimits& limits,
                       const RobotGeometry& geometry);

/// Polyline reference in (position, yaw) space, arc-length parametrized by
/// sqrt(|dp|^2 + dpsi^2) with yaw unwrapped across waypoints so evaluation is
/// continuous. eval() clamps s into [0, total()].
class PathParametrization {
 public:
  PathParametrization() = default;
  explicit PathParametrization(const std::vector<Pose4>& waypoints);

  struct Ref {
    Vec3 p;
    double psi = 0.0;  // unwrapped
  };
  Ref eval(double s) const;
  double total() const { return knots_.empty() ? 0.0 : knots_.back(); }
  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

  /// Waypoint list still ahead of progress s: the reference point at s
  /// followed by every later waypoint. Empty only for an empty path.
  std::vector<Pose4> remaining(double s) const;

 private:
  std::vector<Vec3> points_;
  std::vector<double> psis_;  // unwrapped
  std::vector<double> knots_;
};

/// New path starting at the current reference point eta(s) so the tracking
/// error is unchanged across the splice.
PathParametrization splice_path(const PathParametrization& current, double s,
                                const std::vector<Pose4>& waypoints);

/// Augmented flat state plus arc-length progress.
struct TrajectoryState {
  StateVec z = StateVec::Zero();
  double s = 0.0;
  double t = 0.0;

  static TrajectoryState at_rest(const Pose4& pose);
  Vec3 position() const { return {z[0], z[1], z[2]}; }
  double yaw() const { return z[3]; }
  Vec3 velocity() const { return {z[4], z[5], z[6]}; }
  double yaw_rate() const { return z[7]; }
  Vec3 acceleration() const { return {z[8], z[9], z[10]}; }
  Vec3 jerk() const { return {z[11], z[12], z[13]}; }
};

/// Tracking error e = z - [eta(s), 0...] with yaw wrapped to the shortest
/// difference.
StateVec tracking_error(const TrajectoryState& state,
                        const PathParametrization& path);

struct AdvanceResult {
  double V = 0.0;   // e^T P e after the step
  bool fault = false;  // V exceeded rho * (1 + tol)
};

/// One fixed-step RK4 update of [z; s] with progress rate
/// s' = mu * max(rho - V, 0), s clamped into [0, total].
AdvanceResult advance(TrajectoryState& state, const PathParametrization& path,
                      const FunnelSpec& funnel, double dt, double mu,
                      double fault_tol = 1e-6);

struct TraceRow {
  double t = 0.0, s = 0.0, V = 0.0;
  StateVec z = StateVec::Zero();
};

struct FunnelRunResult {
  std::vector<TraceRow> trace;
  bool reached = false;
  bool fault = false;
  double t_end = 0.0;
};

struct FunnelRunOptions {
  double dt = 1.0 / 240.0;
  double mu = 20.0;
  double t_max = 300.0;
  double terminal_tol = 1e-3;  // inf-norm of the terminal error
  double fault_tol = 1e-6;
  int trace_stride = 1;  // record every n-th tick (first/last always kept)
};

/// Integrate from rest at the first waypoint until the terminal set is
/// reached (s = total and |e|_inf <= terminal_tol), a fault occurs, or t_max
/// elapses.
FunnelRunResult run_funnel(const std::vector<Pose4>& waypoints,
                           const FunnelSpec& funnel,
                           const FunnelRunOptions& opts);

}  // namespace fovnav
