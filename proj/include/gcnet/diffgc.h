// Minimum-snap polynomial guidance with flatness-based feed-forward and PD
// tracking: the classical baseline the network is compared against.

#ifndef GCNET_DIFFGC_H_
#define GCNET_DIFFGC_H_

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gcnet/dynamics.h"
#include "gcnet/sim.h"

namespace gcnet {

// Monomial coefficients, ascending powers of t.
struct PolyTrajectory {
  int degree = 7;
  double tf = 0.0;
  Eigen::VectorXd px;
  Eigen::VectorXd pz;

  // d-th time derivative of each axis at t (not clamped).
  double EvalX(double t, int d = 0) const;
  double EvalZ(double t, int d = 0) const;
};

double PolyEval(const Eigen::VectorXd& p, double t, int d = 0);

struct AxisBc {
  double pos = 0.0;
  double vel = 0.0;
  double acc = 0.0;
  double jerk = 0.0;
};

struct PointBc {
  AxisBc x;
  AxisBc z;
};

PointBc RestAt(double x, double z);

struct SnapQp {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

// Q with p' Q p = integral over [0, tf] of the squared fourth derivative.
// Degrees below 4 give the zero matrix.
Eigen::MatrixXd SnapCostMatrix(int degree, double tf);

// Rows: position, velocity, acceleration, jerk at t = 0 then at t = tf.
// Throws std::invalid_argument when the 8 rows exceed degree + 1 unknowns.
void BoundaryConstraints(const AxisBc& bc0, const AxisBc& bcf, int degree, double tf,
                         Eigen::MatrixXd* A, Eigen::VectorXd* b);

class SingularKkt : public std::runtime_error {
 public:
  SingularKkt(const std::string& what, double cond) : std::runtime_error(what), cond_(cond) {}
  double condition_estimate() const { return cond_; }

 private:
  double cond_;
};

struct MinSnapSolution {
  Eigen::VectorXd p;
  Eigen::VectorXd nu;          // multipliers of A p = b
  double constraint_residual;  // ||A p - b||_inf
  double stationarity;         // ||2 Q p + A' nu||_inf, scaled
};

// Solves min p'Qp s.t. Ap = b through the KKT system.
MinSnapSolution SolveMinSnap(const SnapQp& qp);

PolyTrajectory PlanMinSnap(const PointBc& start, const PointBc& end, double tf, int degree = 7);

class SingularThrust : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FlatSample {
  double t = 0.0;
  double x = 0.0;
  double z = 0.0;
  double vx = 0.0;
  double vz = 0.0;
  double a = 0.0;  // total specific thrust
  double theta = 0.0;
  double q = 0.0;
  double qdot = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
};

// Flatness inversion at one time. Throws SingularThrust when a <= 0.
FlatSample FlatAt(const PolyTrajectory& traj, const QuadParams& p, double t);

// `samples` evenly spaced points on [0, tf] (endpoints included).
std::vector<FlatSample> FlatOutputs(const PolyTrajectory& traj, const QuadParams& p, int samples);

struct FeasibilityReport {
  bool feasible = false;
  double worst_margin = 0.0;  // min over samples of distance to the force bounds
  double worst_time = 0.0;
  double worst_force = 0.0;
  int worst_rotor = 0;  // 1 or 2
  bool singular = false;
};

// Rotor-force bounds checked at `density` samples per second.
FeasibilityReport CheckFeasibility(const PolyTrajectory& traj, const QuadParams& p,
                                   double density = 1000.0);

class InfeasibleStart : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MinTimeResult {
  double tf = 0.0;
  PolyTrajectory traj;
  int iterations = 0;
};

// Shrinks tf by dt_step while the min-snap trajectory stays feasible.
// Throws InfeasibleStart when tf_init itself is infeasible.
MinTimeResult MinTimeSearch(const PointBc& start, const PointBc& end, const QuadParams& p,
                            double dt_step = 0.05, double tf_init = 0.0, int degree = 7);

// 3 x distance / (2 m/s), at least 1 s.
double DefaultTfInit(const PointBc& start, const PointBc& end);
// Doubles the heuristic start until feasible (up to 2^6 x), then searches.
MinTimeResult MinTimeSearchAuto(const PointBc& start, const PointBc& end, const QuadParams& p,
                                double dt_step = 0.05, int degree = 7);

struct TrackingGains {
  double kp = 6.0;
  double kd = 4.0;
  double ki = 0.0;
  double k_theta = 400.0;
  double k_q = 40.0;
};

// Reference state at t; after tf it holds the final position at rest.
PlanarState ReferenceState(const PolyTrajectory& traj, const QuadParams& p, double t);

// Flies the feed-forward plus PD tracker on the plant. Starts on the reference
// unless x0 is given.
SimResult SimulateDiffgc(const PolyTrajectory& traj, const QuadParams& p,
                         const TrackingGains& gains, const SimConfig& cfg,
                         const std::optional<PlanarState>& x0 = std::nullopt);

// Open-loop replay of the flat rotor forces (RK4, forces evaluated at the
// stage times). Returns states at every step.
std::vector<PlanarState> ReplayFlatForces(const PolyTrajectory& traj, const QuadParams& p,
                                          double dt);

std::string PolyToJson(const PolyTrajectory& traj);
PolyTrajectory PolyFromJson(const std::string& text);

}  // namespace gcnet

#endif  // GCNET_DIFFGC_H_
