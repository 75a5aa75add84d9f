#include "gcnet/ocp.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gcnet/csv.h"
#include "json.hpp"

namespace gcnet {

using Eigen::VectorXd;

void OcpConfig::Validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw InvalidConfig("epsilon must lie in [0, 1]");
  if (num_nodes < 3) throw InvalidConfig("num_nodes must be at least 3");
  if (!(tf_min > 0.0) || !(tf_max > tf_min))
    throw InvalidConfig("tf bounds must satisfy 0 < tf_min < tf_max");
  if (!x0.IsFinite() || !xf.IsFinite())
    throw InvalidConfig("boundary states must be finite");
  if (!(defect_scale > 0.0)) throw InvalidConfig("defect_scale must be positive");
}

NlpProblem::NlpProblem(const OcpConfig& cfg, const QuadParams& params)
    : cfg_(cfg), params_(params), k_(cfg.num_nodes) {
  cfg_.Validate();
  params_.Validate();
}

NlpProblem Transcribe(const OcpConfig& cfg, const QuadParams& params) {
  return NlpProblem(cfg, params);
}

VectorXd NlpProblem::InitialGuess() const {
  VectorXd w = VectorXd::Zero(num_vars());
  const Vec6 a = cfg_.x0.vec();
  const Vec6 b = cfg_.xf.vec();
  for (int k = 0; k < k_; ++k) {
    const double s = static_cast<double>(k) / (k_ - 1);
    w.segment<6>(state_index(k)) = (1.0 - s) * a + s * b;
  }
  double u_hover = 0.5;
  try {
    u_hover = HoverCommand(params_).u1;
  } catch (const HoverInfeasible&) {
  }
  w.segment(control_index(0), 2 * k_).setConstant(u_hover);
  w.segment(mid_control_index(0), 2 * (k_ - 1)).setConstant(u_hover);
  const double dist = std::hypot(a[0] - b[0], a[1] - b[1]);
  w[tf_index()] = std::clamp(2.0 * dist / 5.0, cfg_.tf_min, cfg_.tf_max);
  return w;
}

void NlpProblem::Bounds(VectorXd* lo, VectorXd* hi) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  lo->setConstant(num_vars(), -inf);
  hi->setConstant(num_vars(), inf);
  lo->segment(control_index(0), 2 * k_ + 2 * (k_ - 1)).setZero();
  hi->segment(control_index(0), 2 * k_ + 2 * (k_ - 1)).setOnes();
  (*lo)[tf_index()] = cfg_.tf_min;
  (*hi)[tf_index()] = cfg_.tf_max;
}

double NlpProblem::PowerSum(const VectorXd& w) const {
  // Simpson weights over segments: 1 at the ends, 2 at interior nodes, 4 at midpoints.
  double s = 0.0;
  for (int k = 0; k < k_; ++k) {
    const double wk = (k == 0 || k == k_ - 1) ? 1.0 : 2.0;
    s += wk * w.segment<2>(control_index(k)).squaredNorm();
  }
  for (int k = 0; k < k_ - 1; ++k) s += 4.0 * w.segment<2>(mid_control_index(k)).squaredNorm();
  return s;
}

double NlpProblem::Objective(const VectorXd& w) const {
  const double eps = cfg_.epsilon;
  const double tf = w[tf_index()];
  return (1.0 - eps) * tf + eps * tf / (6.0 * (k_ - 1)) * PowerSum(w);
}

void NlpProblem::Gradient(const VectorXd& w, VectorXd* g) const {
  const double eps = cfg_.epsilon;
  const double tf = w[tf_index()];
  const double c = eps * tf / (6.0 * (k_ - 1));
  g->setZero(num_vars());
  for (int k = 0; k < k_; ++k) {
    const double wk = (k == 0 || k == k_ - 1) ? 1.0 : 2.0;
    g->segment<2>(control_index(k)) = 2.0 * c * wk * w.segment<2>(control_index(k));
  }
  for (int k = 0; k < k_ - 1; ++k)
    g->segment<2>(mid_control_index(k)) = 8.0 * c * w.segment<2>(mid_control_index(k));
  (*g)[tf_index()] = (1.0 - eps) + eps / (6.0 * (k_ - 1)) * PowerSum(w);
}

void NlpProblem::LocalIndices(int seg, int idx[kLocal]) const {
  for (int i = 0; i < 6; ++i) idx[i] = state_index(seg) + i;
  idx[6] = control_index(seg);
  idx[7] = control_index(seg) + 1;
  idx[8] = mid_control_index(seg);
  idx[9] = mid_control_index(seg) + 1;
  for (int i = 0; i < 6; ++i) idx[10 + i] = state_index(seg + 1) + i;
  idx[16] = control_index(seg + 1);
  idx[17] = control_index(seg + 1) + 1;
  idx[18] = tf_index();
}

void NlpProblem::Gather(const VectorXd& w, int seg, LocalVec* v) const {
  int idx[kLocal];
  LocalIndices(seg, idx);
  for (int i = 0; i < kLocal; ++i) (*v)[i] = w[idx[i]];
}

// Hermite-Simpson defect on one segment with local variables
// [x_k(6) u_k(2) um(2) x_k1(6) u_k1(2) tf(1)].
void NlpProblem::LocalDefect(const LocalVec& v, Vec6* d, LocalJac* jac) const {
  const double inv_seg = 1.0 / (k_ - 1);
  const double tf = v[18];
  const double h = tf * inv_seg;
  const Vec6 xk = v.segment<6>(0);
  const Vec6 xk1 = v.segment<6>(10);
  const Vec6 fk = Deriv(xk, v[6], v[7], params_);
  const Vec6 fk1 = Deriv(xk1, v[16], v[17], params_);
  const Vec6 xm = 0.5 * (xk + xk1) + h / 8.0 * (fk - fk1);
  const Vec6 fm = Deriv(xm, v[8], v[9], params_);
  *d = xk1 - xk - h / 6.0 * (fk + 4.0 * fm + fk1);
  if (!jac) return;

  Mat6 ak, ak1, am;
  Mat62 bk, bk1, bm;
  DerivJacobian(xk, v[6], v[7], params_, &ak, &bk);
  DerivJacobian(xk1, v[16], v[17], params_, &ak1, &bk1);
  DerivJacobian(xm, v[8], v[9], params_, &am, &bm);
  const Mat6 eye = Mat6::Identity();
  const Mat6 dxm_dxk = 0.5 * eye + h / 8.0 * ak;
  const Mat6 dxm_dxk1 = 0.5 * eye - h / 8.0 * ak1;
  const Vec6 dxm_dtf = inv_seg / 8.0 * (fk - fk1);

  jac->block<6, 6>(0, 0) = -eye - h / 6.0 * (ak + 4.0 * am * dxm_dxk);
  jac->block<6, 2>(0, 6) = -h / 6.0 * (bk + 4.0 * am * (h / 8.0) * bk);
  jac->block<6, 2>(0, 8) = -h / 6.0 * 4.0 * bm;
  jac->block<6, 6>(0, 10) = eye - h / 6.0 * (4.0 * am * dxm_dxk1 + ak1);
  jac->block<6, 2>(0, 16) = -h / 6.0 * (bk1 - 4.0 * am * (h / 8.0) * bk1);
  jac->col(18) = -inv_seg / 6.0 * (fk + 4.0 * fm + fk1) - h / 6.0 * 4.0 * am * dxm_dtf;
}

Vec6 NlpProblem::SegmentDefect(const VectorXd& w, int seg) const {
  LocalVec v;
  Gather(w, seg, &v);
  Vec6 d;
  LocalDefect(v, &d, nullptr);
  return d;
}

void NlpProblem::Constraints(const VectorXd& w, VectorXd* c) const {
  c->resize(num_cons());
  for (int s = 0; s < k_ - 1; ++s) {
    c->segment<6>(6 * s) = cfg_.defect_scale * SegmentDefect(w, s);
  }
  int row = num_defect_rows();
  c->segment<6>(row) = w.segment<6>(state_index(0)) - cfg_.x0.vec();
  c->segment<6>(row + 6) = w.segment<6>(state_index(k_ - 1)) - cfg_.xf.vec();
  row += 12;
  if (cfg_.symmetric_controls) {
    for (int k = 0; k < k_; ++k)
      (*c)[row++] = w[control_index(k)] - w[control_index(k) + 1];
    for (int k = 0; k < k_ - 1; ++k)
      (*c)[row++] = w[mid_control_index(k)] - w[mid_control_index(k) + 1];
  }
}

void NlpProblem::Jacobian(const VectorXd& w, std::vector<Triplet>* out) const {
  out->reserve(out->size() + (k_ - 1) * 6 * kLocal + 12 + 2 * num_symmetry_rows());
  int idx[kLocal];
  LocalVec v;
  Vec6 d;
  LocalJac jac;
  for (int s = 0; s < k_ - 1; ++s) {
    LocalIndices(s, idx);
    Gather(w, s, &v);
    LocalDefect(v, &d, &jac);
    for (int r = 0; r < 6; ++r)
      for (int j = 0; j < kLocal; ++j)
        out->emplace_back(6 * s + r, idx[j], cfg_.defect_scale * jac(r, j));
  }
  int row = num_defect_rows();
  for (int i = 0; i < 6; ++i) out->emplace_back(row + i, state_index(0) + i, 1.0);
  for (int i = 0; i < 6; ++i) out->emplace_back(row + 6 + i, state_index(k_ - 1) + i, 1.0);
  row += 12;
  if (cfg_.symmetric_controls) {
    for (int k = 0; k < k_; ++k, ++row) {
      out->emplace_back(row, control_index(k), 1.0);
      out->emplace_back(row, control_index(k) + 1, -1.0);
    }
    for (int k = 0; k < k_ - 1; ++k, ++row) {
      out->emplace_back(row, mid_control_index(k), 1.0);
      out->emplace_back(row, mid_control_index(k) + 1, -1.0);
    }
  }
}

void NlpProblem::Hessian(const VectorXd& w, double obj_factor,
                         const VectorXd& lambda,
                         std::vector<Triplet>* out) const {
  // Objective: eps * tf / (6(K-1)) * PowerSum(u).
  const double eps = obj_factor * cfg_.epsilon;
  const double tf = w[tf_index()];
  const double c = eps * tf / (6.0 * (k_ - 1));
  const double ct = eps / (6.0 * (k_ - 1));
  const int itf = tf_index();
  auto add_control = [&](int i, double weight) {
    out->emplace_back(i, i, 2.0 * c * weight);
    out->emplace_back(itf, i, 2.0 * ct * weight * w[i]);
  };
  for (int k = 0; k < k_; ++k) {
    const double wk = (k == 0 || k == k_ - 1) ? 1.0 : 2.0;
    add_control(control_index(k), wk);
    add_control(control_index(k) + 1, wk);
  }
  for (int k = 0; k < k_ - 1; ++k) {
    add_control(mid_control_index(k), 4.0);
    add_control(mid_control_index(k) + 1, 4.0);
  }

  // Defects: central differences of the analytic local gradient J^T lambda.
  int idx[kLocal];
  LocalVec v;
  Vec6 d;
  LocalJac jp, jm;
  Eigen::Matrix<double, kLocal, kLocal> h;
  for (int s = 0; s < k_ - 1; ++s) {
    const Vec6 lam = cfg_.defect_scale * lambda.segment<6>(6 * s);
    LocalIndices(s, idx);
    Gather(w, s, &v);
    for (int j = 0; j < kLocal; ++j) {
      const double step = 1e-6 * std::max(1.0, std::abs(v[j]));
      LocalVec vp = v, vm = v;
      vp[j] += step;
      vm[j] -= step;
      LocalDefect(vp, &d, &jp);
      LocalDefect(vm, &d, &jm);
      h.col(j) = (jp - jm).transpose() * lam / (vp[j] - vm[j]);
    }
    for (int a = 0; a < kLocal; ++a) {
      for (int b = 0; b <= a; ++b) {
        const double val = 0.5 * (h(a, b) + h(b, a));
        out->emplace_back(std::max(idx[a], idx[b]), std::min(idx[a], idx[b]), val);
      }
    }
  }
}

double EvalCost(const VectorXd& decision, const NlpProblem& problem) {
  if (decision.size() != problem.num_vars())
    throw std::invalid_argument("EvalCost: decision vector length mismatch");
  return problem.Objective(decision);
}

VectorXd CostGradient(const VectorXd& decision, const NlpProblem& problem) {
  if (decision.size() != problem.num_vars())
    throw std::invalid_argument("CostGradient: decision vector length mismatch");
  VectorXd g;
  problem.Gradient(decision, &g);
  return g;
}

OcpSolution ExtractSolution(const NlpProblem& problem, const VectorXd& w) {
  OcpSolution sol;
  const int k = problem.num_nodes();
  sol.epsilon = problem.config().epsilon;
  sol.tf = w[problem.tf_index()];
  sol.nodes.resize(k);
  for (int i = 0; i < k; ++i) {
    auto& n = sol.nodes[i];
    n.t = sol.tf * i / (k - 1);
    n.state = PlanarState::FromVec(w.segment<6>(problem.state_index(i)));
    n.control = RotorCommand{w[problem.control_index(i)], w[problem.control_index(i) + 1]}.Clamped();
  }
  sol.nodes.back().t = sol.tf;
  sol.mid_controls.resize(k - 1);
  for (int s = 0; s < k - 1; ++s) {
    sol.mid_controls[s] =
        RotorCommand{w[problem.mid_control_index(s)], w[problem.mid_control_index(s) + 1]}.Clamped();
  }
  sol.cost = problem.Objective(w);
  double dn = 0.0;
  for (int s = 0; s < k - 1; ++s)
    dn = std::max(dn, problem.SegmentDefect(w, s).lpNorm<Eigen::Infinity>());
  sol.defect_norm = dn;
  const auto& cfg = problem.config();
  sol.boundary_err = std::max(
      (w.segment<6>(problem.state_index(0)) - cfg.x0.vec()).lpNorm<Eigen::Infinity>(),
      (w.segment<6>(problem.state_index(k - 1)) - cfg.xf.vec()).lpNorm<Eigen::Infinity>());
  return sol;
}

VectorXd ToDecision(const OcpSolution& sol, const NlpProblem& problem) {
  const int k = problem.num_nodes();
  if (static_cast<int>(sol.nodes.size()) != k ||
      static_cast<int>(sol.mid_controls.size()) != k - 1) {
    throw std::invalid_argument("ToDecision: node count mismatch");
  }
  VectorXd w(problem.num_vars());
  for (int i = 0; i < k; ++i) {
    w.segment<6>(problem.state_index(i)) = sol.nodes[i].state.vec();
    w[problem.control_index(i)] = sol.nodes[i].control.u1;
    w[problem.control_index(i) + 1] = sol.nodes[i].control.u2;
  }
  for (int s = 0; s < k - 1; ++s) {
    w[problem.mid_control_index(s)] = sol.mid_controls[s].u1;
    w[problem.mid_control_index(s) + 1] = sol.mid_controls[s].u2;
  }
  w[problem.tf_index()] = sol.tf;
  return w;
}

OcpSolution Solve(const NlpProblem& problem, const std::optional<VectorXd>& guess,
                  const SolveOptions& opts) {
  const VectorXd w0 = guess ? *guess : problem.InitialGuess();
  if (w0.size() != problem.num_vars())
    throw std::invalid_argument("Solve: initial guess length mismatch");
  IpmResult r = SolveIpm(problem, w0, opts.ipm);
  OcpSolution sol;
  if (r.w.size() == problem.num_vars()) sol = ExtractSolution(problem, r.w);
  sol.iterations = r.iterations;
  sol.stationarity = r.dual_inf;
  sol.status = ToString(r.status);
  sol.converged = r.status == IpmStatus::kConverged &&
                  sol.defect_norm <= opts.ipm.tol_constr &&
                  sol.boundary_err <= opts.ipm.tol_constr;
  if (!sol.converged) {
    throw NotConverged("OCP solve did not converge: " + r.message, std::move(sol));
  }
  return sol;
}

namespace {

// Locates t on the solution's uniform grid.
void Locate(const OcpSolution& sol, double t, int* seg, double* frac) {
  const int nseg = static_cast<int>(sol.nodes.size()) - 1;
  const double h = sol.tf / nseg;
  double s = std::clamp(t / h, 0.0, static_cast<double>(nseg));
  int i = std::min(static_cast<int>(s), nseg - 1);
  *seg = i;
  *frac = s - i;
}

}  // namespace

RotorCommand InterpolateControl(const OcpSolution& sol, double t) {
  int seg;
  double r;
  Locate(sol, t, &seg, &r);
  const RotorCommand& a = sol.nodes[seg].control;
  const RotorCommand& m = sol.mid_controls[seg];
  const RotorCommand& b = sol.nodes[seg + 1].control;
  // Quadratic Lagrange basis on {0, 1/2, 1}: the control interpolant implied by
  // the Simpson quadrature in the collocation defect.
  const double la = 2.0 * (r - 0.5) * (r - 1.0);
  const double lm = -4.0 * r * (r - 1.0);
  const double lb = 2.0 * r * (r - 0.5);
  return {la * a.u1 + lm * m.u1 + lb * b.u1, la * a.u2 + lm * m.u2 + lb * b.u2};
}

PlanarState InterpolateState(const OcpSolution& sol, double t) {
  int seg;
  double r;
  Locate(sol, t, &seg, &r);
  return PlanarState::FromVec((1.0 - r) * sol.nodes[seg].state.vec() +
                              r * sol.nodes[seg + 1].state.vec());
}

VerificationReport Verify(const OcpSolution& sol, const QuadParams& params,
                          const PlanarState& target, double dt) {
  VerificationReport rep;
  const int steps = std::max(1, static_cast<int>(std::ceil(sol.tf / dt - 1e-9)));
  const double h = sol.tf / steps;
  Vec6 x = sol.x0().vec();
  // RK4 with the interpolated (time-varying) control evaluated at stage times,
  // and composite Simpson for the power integral on the same grid.
  double power = 0.0;
  auto u_sq = [&](double t) {
    RotorCommand u = InterpolateControl(sol, t);
    return u.u1 * u.u1 + u.u2 * u.u2;
  };
  for (int i = 0; i < steps; ++i) {
    const double t = i * h;
    const RotorCommand u0 = InterpolateControl(sol, t);
    const RotorCommand um = InterpolateControl(sol, t + 0.5 * h);
    const RotorCommand u1 = InterpolateControl(sol, t + h);
    const Vec6 k1 = Deriv(x, u0.u1, u0.u2, params);
    const Vec6 k2 = Deriv(x + 0.5 * h * k1, um.u1, um.u2, params);
    const Vec6 k3 = Deriv(x + 0.5 * h * k2, um.u1, um.u2, params);
    const Vec6 k4 = Deriv(x + h * k3, u1.u1, u1.u2, params);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    power += h / 6.0 * (u_sq(t) + 4.0 * u_sq(t + 0.5 * h) + u_sq(t + h));
  }
  rep.terminal_state = PlanarState::FromVec(x);
  const Vec6 err = x - target.vec();
  rep.terminal_pos_err = std::hypot(err[0], err[1]);
  rep.terminal_vel_err = std::hypot(err[2], err[3]);
  double viol = 0.0;
  auto check = [&](const RotorCommand& u) {
    viol = std::max({viol, -u.u1, -u.u2, u.u1 - 1.0, u.u2 - 1.0});
  };
  for (const auto& n : sol.nodes) check(n.control);
  for (const auto& m : sol.mid_controls) check(m);
  rep.max_bound_violation = viol;
  rep.recomputed_cost = (1.0 - sol.epsilon) * sol.tf + sol.epsilon * power;
  rep.cost_rel_err = std::abs(rep.recomputed_cost - sol.cost) / std::max(1e-12, std::abs(sol.cost));
  return rep;
}

void WriteSolutionCsv(const OcpSolution& sol, const std::string& path) {
  auto out = OpenForWrite(path);
  out << "t,x,z,vx,vz,theta,q,u1,u2\n";
  for (const auto& n : sol.nodes) {
    const auto& s = n.state;
    out << FormatDouble(n.t) << ',' << FormatDouble(s.x) << ',' << FormatDouble(s.z) << ','
        << FormatDouble(s.vx) << ',' << FormatDouble(s.vz) << ',' << FormatDouble(s.theta)
        << ',' << FormatDouble(s.q) << ',' << FormatDouble(n.control.u1) << ','
        << FormatDouble(n.control.u2) << '\n';
  }
}

void WriteSolutionMeta(const OcpSolution& sol, const std::string& path) {
  nlohmann::json j;
  j["epsilon"] = sol.epsilon;
  j["tf"] = sol.tf;
  j["J"] = sol.cost;
  j["converged"] = sol.converged;
  j["defect_norm"] = sol.defect_norm;
  j["boundary_err"] = sol.boundary_err;
  j["stationarity"] = sol.stationarity;
  j["iterations"] = sol.iterations;
  j["status"] = sol.status;
  nlohmann::json mids = nlohmann::json::array();
  for (const auto& m : sol.mid_controls) mids.push_back({m.u1, m.u2});
  j["mid_controls"] = mids;
  auto out = OpenForWrite(path);
  out << j.dump(2) << "\n";
}

OcpSolution ReadSolution(const std::string& csv_path, const std::string& meta_path) {
  OcpSolution sol;
  auto in = OpenForRead(csv_path);
  std::string line;
  if (!std::getline(in, line) || line != "t,x,z,vx,vz,theta,q,u1,u2")
    throw SchemaError("row 0: unexpected solution CSV header");
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto f = SplitCsvLine(line);
    if (f.size() != 9) throw SchemaError("row " + std::to_string(row) + ": expected 9 fields");
    OcpNode n;
    n.t = ParseField(f[0], row);
    n.state = {ParseField(f[1], row), ParseField(f[2], row), ParseField(f[3], row),
               ParseField(f[4], row), ParseField(f[5], row), ParseField(f[6], row)};
    n.control = {ParseField(f[7], row), ParseField(f[8], row)};
    sol.nodes.push_back(n);
  }
  auto j = nlohmann::json::parse(ReadFile(meta_path));
  sol.epsilon = j.at("epsilon").get<double>();
  sol.tf = j.at("tf").get<double>();
  sol.cost = j.at("J").get<double>();
  sol.converged = j.at("converged").get<bool>();
  sol.defect_norm = j.at("defect_norm").get<double>();
  sol.boundary_err = j.value("boundary_err", 0.0);
  sol.stationarity = j.value("stationarity", 0.0);
  sol.iterations = j.value("iterations", 0);
  sol.status = j.value("status", std::string());
  for (const auto& m : j.at("mid_controls")) sol.mid_controls.push_back({m[0].get<double>(), m[1].get<double>()});
  if (sol.nodes.size() < 2 || sol.mid_controls.size() + 1 != sol.nodes.size())
    throw SchemaError("solution node/midpoint counts inconsistent");
  return sol;
}

}  // namespace gcnet
