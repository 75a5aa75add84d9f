// Primal-dual interior-point solver for sparse, equality-constrained,
// bound-constrained nonlinear programs:
//
//   min f(w)  s.t.  c(w) = 0,  lo <= w <= hi.
//
// Newton steps on the barrier KKT system with inertia correction, a filter
// line search with one second-order correction, and a monotone barrier
// update.

#ifndef GCNET_IPM_H_
#define GCNET_IPM_H_

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace gcnet {

using Triplet = Eigen::Triplet<double>;

class SparseNlp {
 public:
  virtual ~SparseNlp() = default;

  virtual int num_vars() const = 0;
  virtual int num_cons() const = 0;
  // Unbounded sides use +/- infinity.
  virtual void Bounds(Eigen::VectorXd* lo, Eigen::VectorXd* hi) const = 0;
  virtual double Objective(const Eigen::VectorXd& w) const = 0;
  virtual void Gradient(const Eigen::VectorXd& w, Eigen::VectorXd* g) const = 0;
  virtual void Constraints(const Eigen::VectorXd& w,
                           Eigen::VectorXd* c) const = 0;
  // Appends constraint Jacobian entries. The sparsity pattern (including
  // explicit zeros) must not depend on w.
  virtual void Jacobian(const Eigen::VectorXd& w,
                        std::vector<Triplet>* out) const = 0;
  // Appends lower-triangular (row >= col) entries of
  //   obj_factor * Hess f(w) + sum_i lambda_i Hess c_i(w).
  // Duplicates are summed. Fixed pattern, as for Jacobian.
  virtual void Hessian(const Eigen::VectorXd& w, double obj_factor,
                       const Eigen::VectorXd& lambda,
                       std::vector<Triplet>* out) const = 0;
};

struct IpmOptions {
  double tol_constr = 1e-6;  // max-abs constraint violation
  double tol_dual = 1e-5;    // scaled stationarity
  double tol_compl = 1e-6;   // scaled complementarity
  int max_iter = 500;
  double mu_init = 0.1;
  bool verbose = false;
  // Solve an l1 feasibility problem when the line search fails.
  bool allow_restoration = true;
  // Checked on every iterate; returning true ends the solve (kStoppedEarly).
  std::function<bool(const Eigen::VectorXd& w)> stop_early;
};

enum class IpmStatus {
  kConverged,
  kMaxIterations,
  kLineSearchFailed,
  kNumericalError,
  kStoppedEarly,
  kInfeasible,  // restoration converged to a point of nonzero infeasibility
};

std::string ToString(IpmStatus s);

struct IpmResult {
  IpmStatus status = IpmStatus::kNumericalError;
  Eigen::VectorXd w;
  Eigen::VectorXd lambda;
  Eigen::VectorXd z_lo;
  Eigen::VectorXd z_hi;
  int iterations = 0;
  double objective = 0.0;
  double constr_viol = 0.0;  // ||c||_inf
  double dual_inf = 0.0;     // scaled ||grad L||_inf
  double compl_err = 0.0;
  std::string message;
};

IpmResult SolveIpm(const SparseNlp& nlp, const Eigen::VectorXd& w0,
                   const IpmOptions& opts = {});

}  // namespace gcnet

#endif  // GCNET_IPM_H_
