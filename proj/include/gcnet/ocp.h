// Free-final-time optimal control of the planar quadrotor:
//
//   min (1 - eps) tf + eps * int_0^tf (u1^2 + u2^2) dt
//   s.t. xdot = f(x, u), x(0) = x0, x(tf) = xf, 0 <= u <= 1,
//
// transcribed with Hermite-Simpson collocation on a uniform grid of
// num_nodes points and solved with the interior-point NLP solver.

#ifndef GCNET_OCP_H_
#define GCNET_OCP_H_

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gcnet/dynamics.h"
#include "gcnet/ipm.h"

namespace gcnet {

struct OcpConfig {
  double epsilon = 0.2;
  int num_nodes = 81;
  PlanarState x0;
  PlanarState xf;  // terminal state; the origin unless shifted
  double tf_min = 0.05;
  double tf_max = 20.0;
  // Adds u1 == u2 rows at every node and midpoint (pitch-free vertical flight).
  bool symmetric_controls = false;
  // Positive multiplier applied to every collocation defect row.
  double defect_scale = 1.0;

  void Validate() const;
};

class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Decision vector layout, for K nodes:
//   [ x_0 .. x_{K-1} (6K) | u_0 .. u_{K-1} (2K) | um_0 .. um_{K-2} (2(K-1)) | tf ]
// Constraint rows:
//   [ defects (6(K-1)) | x_0 - x0 (6) | x_{K-1} - xf (6) | u1 - u2 (2K-1, optional) ]
class NlpProblem : public SparseNlp {
 public:
  NlpProblem(const OcpConfig& cfg, const QuadParams& params);

  const OcpConfig& config() const { return cfg_; }
  const QuadParams& params() const { return params_; }

  int num_nodes() const { return k_; }
  int num_segments() const { return k_ - 1; }
  int state_index(int node) const { return 6 * node; }
  int control_index(int node) const { return 6 * k_ + 2 * node; }
  int mid_control_index(int seg) const { return 8 * k_ + 2 * seg; }
  int tf_index() const { return 10 * k_ - 2; }
  int num_defect_rows() const { return 6 * (k_ - 1); }
  int num_boundary_rows() const { return 12; }
  int num_symmetry_rows() const { return cfg_.symmetric_controls ? 2 * k_ - 1 : 0; }

  // Default starting point: states linear from x0 to xf, hover throttles,
  // tf from the straight-line distance.
  Eigen::VectorXd InitialGuess() const;

  // SparseNlp
  int num_vars() const override { return 10 * k_ - 1; }
  int num_cons() const override {
    return num_defect_rows() + num_boundary_rows() + num_symmetry_rows();
  }
  void Bounds(Eigen::VectorXd* lo, Eigen::VectorXd* hi) const override;
  double Objective(const Eigen::VectorXd& w) const override;
  void Gradient(const Eigen::VectorXd& w, Eigen::VectorXd* g) const override;
  void Constraints(const Eigen::VectorXd& w, Eigen::VectorXd* c) const override;
  void Jacobian(const Eigen::VectorXd& w, std::vector<Triplet>* out) const override;
  void Hessian(const Eigen::VectorXd& w, double obj_factor,
               const Eigen::VectorXd& lambda,
               std::vector<Triplet>* out) const override;

  // Unscaled Hermite-Simpson defect of one segment.
  Vec6 SegmentDefect(const Eigen::VectorXd& w, int seg) const;

 private:
  static constexpr int kLocal = 19;
  using LocalVec = Eigen::Matrix<double, kLocal, 1>;
  using LocalJac = Eigen::Matrix<double, 6, kLocal>;

  void Gather(const Eigen::VectorXd& w, int seg, LocalVec* v) const;
  void LocalIndices(int seg, int idx[kLocal]) const;
  void LocalDefect(const LocalVec& v, Vec6* d, LocalJac* jac) const;
  double PowerSum(const Eigen::VectorXd& w) const;

  OcpConfig cfg_;
  QuadParams params_;
  int k_;
};

NlpProblem Transcribe(const OcpConfig& cfg, const QuadParams& params);

// Throws std::invalid_argument when the decision length does not match.
double EvalCost(const Eigen::VectorXd& decision, const NlpProblem& problem);
Eigen::VectorXd CostGradient(const Eigen::VectorXd& decision, const NlpProblem& problem);

struct OcpNode {
  double t = 0.0;
  PlanarState state;
  RotorCommand control;
};

struct OcpSolution {
  std::vector<OcpNode> nodes;
  std::vector<RotorCommand> mid_controls;  // one per segment
  double epsilon = 0.0;
  double tf = 0.0;
  double cost = 0.0;
  bool converged = false;
  double defect_norm = 0.0;   // max-abs unscaled collocation defect
  double boundary_err = 0.0;  // max-abs boundary residual
  double stationarity = 0.0;  // scaled Lagrangian gradient
  int iterations = 0;
  std::string status;

  const PlanarState& x0() const { return nodes.front().state; }
};

class NotConverged : public std::runtime_error {
 public:
  NotConverged(const std::string& what, OcpSolution best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const OcpSolution& best() const { return best_; }

 private:
  OcpSolution best_;
};

struct SolveOptions {
  IpmOptions ipm;
};

// Throws NotConverged (carrying the final iterate) on failure.
OcpSolution Solve(const NlpProblem& problem,
                  const std::optional<Eigen::VectorXd>& guess = std::nullopt,
                  const SolveOptions& opts = {});

OcpSolution ExtractSolution(const NlpProblem& problem, const Eigen::VectorXd& w);
Eigen::VectorXd ToDecision(const OcpSolution& sol, const NlpProblem& problem);

// Control at time t from the quadratic through node, midpoint and node values
// of the enclosing segment. May leave [0, 1] slightly between samples.
RotorCommand InterpolateControl(const OcpSolution& sol, double t);
// State at time t by linear interpolation between nodes (clamped outside).
PlanarState InterpolateState(const OcpSolution& sol, double t);

struct VerificationReport {
  PlanarState terminal_state;  // from re-integration
  double terminal_pos_err = 0.0;
  double terminal_vel_err = 0.0;
  double max_bound_violation = 0.0;
  double recomputed_cost = 0.0;
  double cost_rel_err = 0.0;
};

// Re-integrates the control profile with RK4 at dt from the solution's
// initial state and audits it against the target state.
VerificationReport Verify(const OcpSolution& sol, const QuadParams& params,
                          const PlanarState& target = {}, double dt = 1e-4);

// CSV: header then `t,x,z,vx,vz,theta,q,u1,u2` per node.
void WriteSolutionCsv(const OcpSolution& sol, const std::string& path);
void WriteSolutionMeta(const OcpSolution& sol, const std::string& path);
OcpSolution ReadSolution(const std::string& csv_path, const std::string& meta_path);

}  // namespace gcnet

#endif  // GCNET_OCP_H_
