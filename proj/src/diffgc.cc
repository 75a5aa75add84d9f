#include "gcnet/diffgc.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "json.hpp"

namespace gcnet {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// i * (i-1) * ... * (i-d+1)
double Falling(int i, int d) {
  double f = 1.0;
  for (int k = 0; k < d; ++k) f *= i - k;
  return f;
}

}  // namespace

double PolyEval(const VectorXd& p, double t, int d) {
  double acc = 0.0;
  for (int i = static_cast<int>(p.size()) - 1; i >= d; --i) acc = acc * t + p[i] * Falling(i, d);
  return acc;
}

double PolyTrajectory::EvalX(double t, int d) const { return PolyEval(px, t, d); }
double PolyTrajectory::EvalZ(double t, int d) const { return PolyEval(pz, t, d); }

PointBc RestAt(double x, double z) {
  PointBc bc;
  bc.x.pos = x;
  bc.z.pos = z;
  return bc;
}

MatrixXd SnapCostMatrix(int degree, double tf) {
  const int n = degree + 1;
  MatrixXd q = MatrixXd::Zero(n, n);
  if (degree < 4) {
    std::fprintf(stderr, "warning: degree %d polynomial has zero snap\n", degree);
    return q;
  }
  for (int i = 4; i < n; ++i) {
    for (int j = 4; j < n; ++j) {
      const int e = i + j - 7;
      q(i, j) = Falling(i, 4) * Falling(j, 4) * std::pow(tf, e) / e;
    }
  }
  return q;
}

void BoundaryConstraints(const AxisBc& bc0, const AxisBc& bcf, int degree, double tf,
                         MatrixXd* A, VectorXd* b) {
  const int n = degree + 1;
  if (8 > n)
    throw std::invalid_argument("boundary constraints: 8 rows exceed " + std::to_string(n) +
                                " coefficients");
  A->setZero(8, n);
  b->resize(8);
  const double v0[4] = {bc0.pos, bc0.vel, bc0.acc, bc0.jerk};
  const double vf[4] = {bcf.pos, bcf.vel, bcf.acc, bcf.jerk};
  for (int d = 0; d < 4; ++d) {
    (*A)(d, d) = Falling(d, d);
    for (int i = d; i < n; ++i) (*A)(4 + d, i) = Falling(i, d) * std::pow(tf, i - d);
    (*b)[d] = v0[d];
    (*b)[4 + d] = vf[d];
  }
}

MinSnapSolution SolveMinSnap(const SnapQp& qp) {
  const int n = static_cast<int>(qp.Q.rows());
  const int m = static_cast<int>(qp.A.rows());
  if (qp.Q.cols() != n || qp.A.cols() != n || qp.b.size() != m)
    throw std::invalid_argument("SolveMinSnap: dimension mismatch");
  // Column then row equilibration; the monomial basis spans many decades.
  VectorXd s(n), r(m);
  for (int i = 0; i < n; ++i) {
    const double c = qp.A.col(i).cwiseAbs().maxCoeff();
    s[i] = c > 0.0 ? 1.0 / c : 1.0;
  }
  const MatrixXd as = qp.A * s.asDiagonal();
  for (int k = 0; k < m; ++k) {
    const double c = as.row(k).cwiseAbs().maxCoeff();
    r[k] = c > 0.0 ? 1.0 / c : 1.0;
  }
  const MatrixXd ah = r.asDiagonal() * as;
  MatrixXd qh = s.asDiagonal() * qp.Q * s.asDiagonal();
  const double qmax = qh.cwiseAbs().maxCoeff();
  const double gamma = qmax > 0.0 ? 1.0 / qmax : 1.0;
  qh *= gamma;

  MatrixXd kkt = MatrixXd::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = 2.0 * qh;
  kkt.topRightCorner(n, m) = ah.transpose();
  kkt.bottomLeftCorner(m, n) = ah;
  VectorXd rhs = VectorXd::Zero(n + m);
  rhs.tail(m) = r.asDiagonal() * qp.b;

  Eigen::FullPivLU<MatrixXd> lu(kkt);
  if (!lu.isInvertible()) {
    Eigen::JacobiSVD<MatrixXd> svd(kkt);
    const auto& sv = svd.singularValues();
    const double cond = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1]
                                                : std::numeric_limits<double>::infinity();
    char buf[128];
    std::snprintf(buf, sizeof(buf), "singular KKT system (condition estimate %.3g)", cond);
    throw SingularKkt(buf, cond);
  }
  const VectorXd sol = lu.solve(rhs);
  MinSnapSolution out;
  out.p = s.asDiagonal() * sol.head(n);
  out.nu = r.asDiagonal() * sol.tail(m) / gamma;
  out.constraint_residual = (qp.A * out.p - qp.b).cwiseAbs().maxCoeff();
  const VectorXd qterm = 2.0 * qp.Q * out.p;
  const VectorXd stat = qterm + qp.A.transpose() * out.nu;
  out.stationarity = stat.cwiseAbs().maxCoeff() / std::max(1.0, qterm.cwiseAbs().maxCoeff());
  return out;
}

PolyTrajectory PlanMinSnap(const PointBc& start, const PointBc& end, double tf, int degree) {
  if (!(tf > 0.0)) throw std::invalid_argument("PlanMinSnap: tf must be positive");
  PolyTrajectory traj;
  traj.degree = degree;
  traj.tf = tf;
  SnapQp qp;
  qp.Q = SnapCostMatrix(degree, tf);
  BoundaryConstraints(start.x, end.x, degree, tf, &qp.A, &qp.b);
  traj.px = SolveMinSnap(qp).p;
  BoundaryConstraints(start.z, end.z, degree, tf, &qp.A, &qp.b);
  traj.pz = SolveMinSnap(qp).p;
  return traj;
}

namespace {

struct Derivs {
  double v[5];  // position .. snap
};

Derivs AxisDerivs(const VectorXd& p, double t) {
  Derivs d;
  for (int k = 0; k < 5; ++k) d.v[k] = PolyEval(p, t, k);
  return d;
}

// Flatness inversion from position derivatives of both axes.
FlatSample Invert(const Derivs& x, const Derivs& z, const QuadParams& p, double t) {
  const double b = p.beta;
  const double n0 = -(x.v[2] + b * x.v[1]);
  const double n1 = -(x.v[3] + b * x.v[2]);
  const double n2 = -(x.v[4] + b * x.v[3]);
  const double d0 = z.v[2] + p.g0 + b * z.v[1];
  const double d1 = z.v[3] + b * z.v[2];
  const double d2 = z.v[4] + b * z.v[3];
  if (!(d0 > 0.0)) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "non-positive thrust at t=%.4f s", t);
    throw SingularThrust(buf);
  }
  const double r2 = n0 * n0 + d0 * d0;
  const double num = d0 * n1 - n0 * d1;
  FlatSample s;
  s.t = t;
  s.x = x.v[0];
  s.z = z.v[0];
  s.vx = x.v[1];
  s.vz = z.v[1];
  s.a = std::sqrt(r2);
  s.theta = std::atan2(n0, d0);
  s.q = num / r2;
  s.qdot = ((d0 * n2 - n0 * d2) * r2 - num * 2.0 * (n0 * n1 + d0 * d1)) / (r2 * r2);
  const double moment = p.inertia_xx * s.qdot / p.arm_len;
  s.f1 = 0.5 * (p.mass * s.a - moment);
  s.f2 = 0.5 * (p.mass * s.a + moment);
  return s;
}

}  // namespace

FlatSample FlatAt(const PolyTrajectory& traj, const QuadParams& p, double t) {
  return Invert(AxisDerivs(traj.px, t), AxisDerivs(traj.pz, t), p, t);
}

std::vector<FlatSample> FlatOutputs(const PolyTrajectory& traj, const QuadParams& p,
                                    int samples) {
  if (samples < 2) throw std::invalid_argument("FlatOutputs: need at least 2 samples");
  std::vector<FlatSample> out;
  out.reserve(samples);
  for (int k = 0; k < samples; ++k) out.push_back(FlatAt(traj, p, traj.tf * k / (samples - 1)));
  return out;
}

FeasibilityReport CheckFeasibility(const PolyTrajectory& traj, const QuadParams& p,
                                   double density) {
  const int n = static_cast<int>(std::ceil(density * traj.tf)) + 1;
  FeasibilityReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    const double t = traj.tf * k / (n - 1);
    FlatSample s;
    try {
      s = FlatAt(traj, p, t);
    } catch (const SingularThrust&) {
      rep.feasible = false;
      rep.singular = true;
      rep.worst_time = t;
      rep.worst_margin = -std::numeric_limits<double>::infinity();
      return rep;
    }
    const double f[2] = {s.f1, s.f2};
    for (int i = 0; i < 2; ++i) {
      const double margin = std::min(f[i] - p.f_min, p.f_max - f[i]);
      if (margin < rep.worst_margin) {
        rep.worst_margin = margin;
        rep.worst_time = t;
        rep.worst_force = f[i];
        rep.worst_rotor = i + 1;
      }
    }
  }
  rep.feasible = rep.worst_margin >= 0.0;
  return rep;
}

MinTimeResult MinTimeSearch(const PointBc& start, const PointBc& end, const QuadParams& p,
                            double dt_step, double tf_init, int degree) {
  if (!(dt_step > 0.0)) throw std::invalid_argument("MinTimeSearch: dt_step must be positive");
  if (!(tf_init > 0.0)) tf_init = DefaultTfInit(start, end);
  MinTimeResult res;
  res.tf = tf_init;
  res.traj = PlanMinSnap(start, end, tf_init, degree);
  if (!CheckFeasibility(res.traj, p).feasible) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "initial final time %.3f s is infeasible", tf_init);
    throw InfeasibleStart(buf);
  }
  for (int k = 1;; ++k) {
    const double tf = tf_init - k * dt_step;
    if (tf <= 0.0) break;
    PolyTrajectory cand = PlanMinSnap(start, end, tf, degree);
    res.iterations = k;
    if (!CheckFeasibility(cand, p).feasible) break;
    res.tf = tf;
    res.traj = std::move(cand);
  }
  return res;
}

double DefaultTfInit(const PointBc& start, const PointBc& end) {
  const double dist = std::hypot(end.x.pos - start.x.pos, end.z.pos - start.z.pos);
  return std::max(1.0, 3.0 * dist / 2.0);
}

MinTimeResult MinTimeSearchAuto(const PointBc& start, const PointBc& end, const QuadParams& p,
                                double dt_step, int degree) {
  double tf = DefaultTfInit(start, end);
  for (int i = 0;; ++i) {
    try {
      return MinTimeSearch(start, end, p, dt_step, tf, degree);
    } catch (const InfeasibleStart&) {
      if (i >= 6) throw;
      tf *= 2.0;
    }
  }
}

PlanarState ReferenceState(const PolyTrajectory& traj, const QuadParams& p, double t) {
  if (t >= traj.tf) {
    PlanarState s;
    s.x = traj.EvalX(traj.tf);
    s.z = traj.EvalZ(traj.tf);
    return s;
  }
  const FlatSample f = FlatAt(traj, p, std::max(t, 0.0));
  return {f.x, f.z, f.vx, f.vz, f.theta, f.q};
}

namespace {

class Tracker {
 public:
  Tracker(const PolyTrajectory& traj, const QuadParams& p, const TrackingGains& g, double dt)
      : traj_(traj), p_(p), g_(g), dt_(dt) {}

  RotorCommand operator()(double t, const PlanarState& s) {
    double r[2], v[2], a[2];
    double q_ff = 0.0, qdot_ff = 0.0;
    if (t < traj_.tf) {
      const Derivs dx = AxisDerivs(traj_.px, t);
      const Derivs dz = AxisDerivs(traj_.pz, t);
      r[0] = dx.v[0], r[1] = dz.v[0];
      v[0] = dx.v[1], v[1] = dz.v[1];
      a[0] = dx.v[2], a[1] = dz.v[2];
      const FlatSample f = Invert(dx, dz, p_, t);
      q_ff = f.q;
      qdot_ff = f.qdot;
    } else {
      r[0] = traj_.EvalX(traj_.tf), r[1] = traj_.EvalZ(traj_.tf);
      v[0] = v[1] = a[0] = a[1] = 0.0;
    }
    const double ex = r[0] - s.x, ez = r[1] - s.z;
    ix_ += ex * dt_;
    iz_ += ez * dt_;
    const double ax = a[0] + g_.kp * ex + g_.kd * (v[0] - s.vx) + g_.ki * ix_;
    const double az = a[1] + g_.kp * ez + g_.kd * (v[1] - s.vz) + g_.ki * iz_;
    const double n = -(ax + p_.beta * s.vx);
    const double d = az + p_.g0 + p_.beta * s.vz;
    const double thrust = std::hypot(n, d);
    const double theta_des = std::atan2(n, d);
    const double qdot = qdot_ff + g_.k_theta * (theta_des - s.theta) + g_.k_q * (q_ff - s.q);
    const double moment = p_.inertia_xx * qdot / p_.arm_len;
    const double f1 = 0.5 * (p_.mass * thrust - moment);
    const double f2 = 0.5 * (p_.mass * thrust + moment);
    return {(f1 - p_.f_min) / p_.delta_f, (f2 - p_.f_min) / p_.delta_f};
  }

 private:
  const PolyTrajectory& traj_;
  const QuadParams& p_;
  TrackingGains g_;
  double dt_;
  double ix_ = 0.0;
  double iz_ = 0.0;
};

}  // namespace

SimResult SimulateDiffgc(const PolyTrajectory& traj, const QuadParams& p,
                         const TrackingGains& gains, const SimConfig& cfg,
                         const std::optional<PlanarState>& x0) {
  Tracker tracker(traj, p, gains, cfg.dt);
  const PlanarState start = x0 ? *x0 : ReferenceState(traj, p, 0.0);
  const Target target{traj.EvalX(traj.tf), traj.EvalZ(traj.tf)};
  return SimulateClosedLoop(std::ref(tracker), start, target, cfg, p);
}

std::vector<PlanarState> ReplayFlatForces(const PolyTrajectory& traj, const QuadParams& p,
                                          double dt) {
  auto throttles = [&](double t, double* u1, double* u2) {
    const FlatSample f = FlatAt(traj, p, std::min(t, traj.tf));
    *u1 = (f.f1 - p.f_min) / p.delta_f;
    *u2 = (f.f2 - p.f_min) / p.delta_f;
  };
  const int n = static_cast<int>(std::ceil(traj.tf / dt - 1e-9));
  const double h = traj.tf / n;
  std::vector<PlanarState> out;
  Vec6 s = ReferenceState(traj, p, 0.0).vec();
  out.push_back(PlanarState::FromVec(s));
  double u1, u2;
  for (int i = 0; i < n; ++i) {
    const double t = i * h;
    throttles(t, &u1, &u2);
    const Vec6 k1 = Deriv(s, u1, u2, p);
    throttles(t + 0.5 * h, &u1, &u2);
    const Vec6 k2 = Deriv(s + 0.5 * h * k1, u1, u2, p);
    const Vec6 k3 = Deriv(s + 0.5 * h * k2, u1, u2, p);
    throttles(t + h, &u1, &u2);
    const Vec6 k4 = Deriv(s + h * k3, u1, u2, p);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.push_back(PlanarState::FromVec(s));
  }
  return out;
}

std::string PolyToJson(const PolyTrajectory& traj) {
  const std::vector<double> px(traj.px.data(), traj.px.data() + traj.px.size());
  const std::vector<double> pz(traj.pz.data(), traj.pz.data() + traj.pz.size());
  nlohmann::json j = {{"degree", traj.degree}, {"tf", traj.tf}, {"px", px}, {"pz", pz}};
  return j.dump(2);
}

PolyTrajectory PolyFromJson(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  PolyTrajectory t;
  t.degree = j.at("degree").get<int>();
  t.tf = j.at("tf").get<double>();
  const auto px = j.at("px").get<std::vector<double>>();
  const auto pz = j.at("pz").get<std::vector<double>>();
  if (static_cast<int>(px.size()) != t.degree + 1 || static_cast<int>(pz.size()) != t.degree + 1)
    throw std::invalid_argument("trajectory: coefficient count must be degree + 1");
  if (!(t.tf > 0.0)) throw std::invalid_argument("trajectory: tf must be positive");
  t.px = Eigen::Map<const VectorXd>(px.data(), px.size());
  t.pz = Eigen::Map<const VectorXd>(pz.data(), pz.size());
  return t;
}

}  // namespace gcnet
