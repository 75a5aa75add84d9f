#include "gcnet/ocp.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "gtest/gtest.h"

namespace gcnet {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

OcpConfig Config(double eps, int k, const PlanarState& x0 = {}) {
  OcpConfig c;
  c.epsilon = eps;
  c.num_nodes = k;
  c.x0 = x0;
  return c;
}

// Decision vector with constant controls u and all states zero.
VectorXd ConstantControls(const NlpProblem& nlp, double u1, double u2, double tf) {
  VectorXd w = VectorXd::Zero(nlp.num_vars());
  for (int k = 0; k < nlp.num_nodes(); ++k) {
    w[nlp.control_index(k)] = u1;
    w[nlp.control_index(k) + 1] = u2;
  }
  for (int s = 0; s < nlp.num_segments(); ++s) {
    w[nlp.mid_control_index(s)] = u1;
    w[nlp.mid_control_index(s) + 1] = u2;
  }
  w[nlp.tf_index()] = tf;
  return w;
}

VectorXd RandomDecision(const NlpProblem& nlp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorXd w(nlp.num_vars());
  for (int i = 0; i < w.size(); ++i) w[i] = u(rng);
  for (int k = 0; k < nlp.num_nodes(); ++k)
    for (int j = 0; j < 2; ++j) w[nlp.control_index(k) + j] = 0.5 + 0.4 * u(rng);
  for (int s = 0; s < nlp.num_segments(); ++s)
    for (int j = 0; j < 2; ++j) w[nlp.mid_control_index(s) + j] = 0.5 + 0.4 * u(rng);
  w[nlp.tf_index()] = 2.0 + u(rng);
  return w;
}

TEST(Transcribe, ThreeNodeStructure) {
  const NlpProblem nlp = Transcribe(Config(0.2, 3, {1, 2, 0, 0, 0, 0}), QuadParams{});
  EXPECT_EQ(nlp.num_segments(), 2);
  EXPECT_EQ(nlp.num_defect_rows(), 12);
  EXPECT_EQ(nlp.num_boundary_rows(), 12);
  EXPECT_EQ(nlp.num_cons(), 24);
  EXPECT_EQ(nlp.num_vars(), 6 * 3 + 2 * 3 + 2 * 2 + 1);
}

TEST(Transcribe, RejectsInvalidConfig) {
  EXPECT_THROW(Transcribe(Config(1.5, 81), QuadParams{}), InvalidConfig);
  EXPECT_THROW(Transcribe(Config(0.2, 2), QuadParams{}), InvalidConfig);
  OcpConfig c = Config(0.2, 81);
  c.tf_min = 0.0;
  EXPECT_THROW(Transcribe(c, QuadParams{}), InvalidConfig);
}

// A densely integrated trajectory, resampled onto the grid, nearly satisfies
// the defects, and the residual shrinks at high order as the grid refines.
double IntegratedDefect(int k) {
  QuadParams p;
  const double tf = 2.0;
  auto u1 = [](double t) { return 0.3 + 0.1 * std::sin(2 * t); };
  auto u2 = [](double t) { return 0.35 + 0.1 * std::cos(3 * t); };
  const NlpProblem nlp = Transcribe(Config(0.2, k), p);
  VectorXd w = VectorXd::Zero(nlp.num_vars());
  w[nlp.tf_index()] = tf;
  const double h = tf / (k - 1);
  const int sub = 20000 / (k - 1);
  const double dt = h / sub;
  Vec6 s = PlanarState{0, 0, 1.0, 0.5, 0.1, 0.0}.vec();
  for (int n = 0; n < k; ++n) {
    const double t = n * h;
    w.segment<6>(nlp.state_index(n)) = s;
    w[nlp.control_index(n)] = u1(t);
    w[nlp.control_index(n) + 1] = u2(t);
    if (n + 1 == k) break;
    w[nlp.mid_control_index(n)] = u1(t + h / 2);
    w[nlp.mid_control_index(n) + 1] = u2(t + h / 2);
    for (int i = 0; i < sub; ++i) {
      // midpoint-sampled controls keep the reference integration 4th order
      const double tc = t + (i + 0.5) * dt;
      s = StepRk4(s, u1(tc), u2(tc), p, dt);
    }
  }
  double worst = 0.0;
  for (int seg = 0; seg < nlp.num_segments(); ++seg)
    worst = std::max(worst, nlp.SegmentDefect(w, seg).cwiseAbs().maxCoeff());
  return worst;
}

TEST(Transcribe, IntegratedTrajectoryDefectsConvergeAtHighOrder) {
  const double coarse = IntegratedDefect(11);
  const double fine = IntegratedDefect(21);
  EXPECT_LT(coarse, 1e-3);
  EXPECT_GT(coarse / fine, 12.0);
}

TEST(Transcribe, HoverAtOriginIsFeasible) {
  QuadParams p;
  const OcpConfig cfg = Config(0.2, 11);
  const NlpProblem nlp = Transcribe(cfg, p);
  const RotorCommand h = HoverCommand(p);
  const VectorXd w = ConstantControls(nlp, h.u1, h.u2, cfg.tf_min);
  VectorXd c;
  nlp.Constraints(w, &c);
  EXPECT_LT(c.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Cost, Examples) {
  QuadParams p;
  const NlpProblem pure_time = Transcribe(Config(0.0, 11), p);
  EXPECT_DOUBLE_EQ(EvalCost(ConstantControls(pure_time, 0.7, 0.1, 2.0), pure_time), 2.0);
  const NlpProblem hybrid = Transcribe(Config(0.2, 11), p);
  EXPECT_NEAR(EvalCost(ConstantControls(hybrid, 0.25121, 0.25121, 2.0), hybrid), 1.65048, 1e-4);
  const NlpProblem power = Transcribe(Config(1.0, 11), p);
  EXPECT_EQ(EvalCost(ConstantControls(power, 0.0, 0.0, 3.7), power), 0.0);
  EXPECT_THROW(EvalCost(VectorXd::Zero(5), power), std::invalid_argument);
}

TEST(Cost, QuadraticControlsIntegrateExactly) {
  // u1 = t / tf on [0, tf]: integral of u1^2 is tf / 3 under Simpson.
  const NlpProblem nlp = Transcribe(Config(1.0, 5), QuadParams{});
  const double tf = 1.5;
  VectorXd w = ConstantControls(nlp, 0.0, 0.0, tf);
  for (int k = 0; k < 5; ++k) w[nlp.control_index(k)] = k / 4.0;
  for (int s = 0; s < 4; ++s) w[nlp.mid_control_index(s)] = (s + 0.5) / 4.0;
  EXPECT_NEAR(EvalCost(w, nlp), tf / 3.0, 1e-14);
}

TEST(Cost, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(2);
  const NlpProblem nlp = Transcribe(Config(0.3, 7), QuadParams{});
  for (int trial = 0; trial < 5; ++trial) {
    VectorXd w = RandomDecision(nlp, rng);
    const VectorXd g = CostGradient(w, nlp);
    for (int i = 0; i < w.size(); ++i) {
      const double h = 1e-6;
      VectorXd wp = w, wm = w;
      wp[i] += h;
      wm[i] -= h;
      const double fd = (EvalCost(wp, nlp) - EvalCost(wm, nlp)) / (2 * h);
      EXPECT_NEAR(g[i], fd, 1e-6 * std::max(1.0, std::abs(fd))) << "variable " << i;
    }
  }
}

MatrixXd DenseJacobian(const NlpProblem& nlp, const VectorXd& w) {
  std::vector<Triplet> t;
  nlp.Jacobian(w, &t);
  MatrixXd J = MatrixXd::Zero(nlp.num_cons(), nlp.num_vars());
  for (const auto& e : t) J(e.row(), e.col()) += e.value();
  return J;
}

TEST(Transcribe, ConstraintJacobianMatchesCentralDifferences) {
  std::mt19937_64 rng(4);
  OcpConfig cfg = Config(0.2, 5, {1, -1, 0.5, 0, 0.2, 0});
  cfg.symmetric_controls = true;
  const NlpProblem nlp = Transcribe(cfg, QuadParams{});
  const VectorXd w = RandomDecision(nlp, rng);
  const MatrixXd J = DenseJacobian(nlp, w);
  for (int i = 0; i < w.size(); ++i) {
    const double h = 1e-6;
    VectorXd wp = w, wm = w, cp, cm;
    wp[i] += h;
    wm[i] -= h;
    nlp.Constraints(wp, &cp);
    nlp.Constraints(wm, &cm);
    const VectorXd fd = (cp - cm) / (2 * h);
    EXPECT_LT((fd - J.col(i)).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, fd.cwiseAbs().maxCoeff()))
        << "variable " << i;
  }
}

TEST(Transcribe, LagrangianHessianMatchesDifferencedGradient) {
  std::mt19937_64 rng(6);
  const NlpProblem nlp = Transcribe(Config(0.4, 4, {1, -1, 0.5, 0, 0.2, 0}), QuadParams{});
  const VectorXd w = RandomDecision(nlp, rng);
  VectorXd lambda(nlp.num_cons());
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < lambda.size(); ++i) lambda[i] = u(rng);
  const double sigma = 0.7;
  auto lag_grad = [&](const VectorXd& x) {
    VectorXd g;
    nlp.Gradient(x, &g);
    return VectorXd(sigma * g + DenseJacobian(nlp, x).transpose() * lambda);
  };
  std::vector<Triplet> t;
  nlp.Hessian(w, sigma, lambda, &t);
  MatrixXd H = MatrixXd::Zero(nlp.num_vars(), nlp.num_vars());
  for (const auto& e : t) {
    ASSERT_GE(e.row(), e.col());
    H(e.row(), e.col()) += e.value();
    if (e.row() != e.col()) H(e.col(), e.row()) += e.value();
  }
  for (int i = 0; i < w.size(); ++i) {
    const double h = 1e-5;
    VectorXd wp = w, wm = w;
    wp[i] += h;
    wm[i] -= h;
    const VectorXd fd = (lag_grad(wp) - lag_grad(wm)) / (2 * h);
    EXPECT_LT((fd - H.col(i)).cwiseAbs().maxCoeff(), 1e-4 * std::max(1.0, fd.cwiseAbs().maxCoeff()))
        << "variable " << i;
  }
}

TEST(Solve, AlreadyAtTargetGivesMinimalTime) {
  QuadParams p;
  const OcpConfig cfg = Config(0.2, 21);
  const OcpSolution sol = Solve(Transcribe(cfg, p));
  ASSERT_TRUE(sol.converged);
  EXPECT_NEAR(sol.tf, cfg.tf_min, 1e-4);
  const double hover = HoverCommand(p).u1;
  EXPECT_NEAR(sol.cost, 0.8 * cfg.tf_min + 0.2 * cfg.tf_min * 2 * hover * hover, 1e-3);
}

TEST(Solve, DiagonalManeuverIsNearBangBang) {
  QuadParams p;
  const OcpSolution sol = Solve(Transcribe(Config(0.2, 81, {-5, -2.5, 0, 0, 0, 0}), p));
  ASSERT_TRUE(sol.converged) << sol.status;
  EXPECT_LE(sol.defect_norm, 1e-6);
  EXPECT_LE(sol.boundary_err, 1e-8);
  int saturated = 0;
  for (const auto& n : sol.nodes) {
    EXPECT_TRUE(n.control.InBounds(1e-9));
    for (double u : {n.control.u1, n.control.u2})
      if (u < 1e-3 || u > 1 - 1e-3) ++saturated;
  }
  EXPECT_GT(saturated, 0);
  for (size_t i = 1; i < sol.nodes.size(); ++i) EXPECT_GT(sol.nodes[i].t, sol.nodes[i - 1].t);
  EXPECT_DOUBLE_EQ(sol.nodes.back().t, sol.tf);

  const VerificationReport v = Verify(sol, p);
  EXPECT_LE(v.terminal_pos_err, 1e-2);
  EXPECT_LE(v.terminal_vel_err, 1e-2);
  EXPECT_LE(v.cost_rel_err, 1e-3);
  EXPECT_LE(v.max_bound_violation, 1e-9);
}

TEST(Solve, TranslationAndDefectScalingLeaveSolutionUnchanged) {
  QuadParams p;
  const PlanarState x0{-3, 1.5, 0.5, -0.2, 0.1, 0};
  const OcpSolution base = Solve(Transcribe(Config(0.2, 41, x0), p));
  ASSERT_TRUE(base.converged);

  OcpConfig shifted = Config(0.2, 41, x0);
  shifted.x0.x += 4.0;
  shifted.x0.z -= 2.0;
  shifted.xf.x = 4.0;
  shifted.xf.z = -2.0;
  const OcpSolution moved = Solve(Transcribe(shifted, p));
  ASSERT_TRUE(moved.converged);
  EXPECT_NEAR(moved.tf, base.tf, 1e-4 * base.tf);
  for (size_t i = 0; i < base.nodes.size(); ++i)
    EXPECT_NEAR(moved.nodes[i].control.u1, base.nodes[i].control.u1, 1e-3);

  OcpConfig scaled = Config(0.2, 41, x0);
  scaled.defect_scale = 10.0;
  const OcpSolution s10 = Solve(Transcribe(scaled, p));
  ASSERT_TRUE(s10.converged);
  EXPECT_NEAR(s10.tf, base.tf, 1e-4 * base.tf);
}

TEST(Solve, NotConvergedCarriesBestIterate) {
  SolveOptions opts;
  opts.ipm.max_iter = 2;
  opts.ipm.allow_restoration = false;
  try {
    Solve(Transcribe(Config(0.2, 41, {-5, -2.5, 0, 0, 0, 0}), QuadParams{}), std::nullopt, opts);
    FAIL() << "expected NotConverged";
  } catch (const NotConverged& e) {
    EXPECT_FALSE(e.best().converged);
    EXPECT_EQ(e.best().nodes.size(), 41u);
  }
}

// Time-optimal vertical climb with both rotors tied: full thrust, then zero
// thrust until the climb rate returns to zero. Brute-force over the switch
// time with fine RK4 integration of the vertical channel only.
double BruteForceClimbTime(const QuadParams& p, double rise) {
  auto accel = [&](double u, double vz) {
    return 2 * u * p.delta_f / p.mass + 2 * p.f_min / p.mass - p.g0 - p.beta * vz;
  };
  auto rk4 = [&](double u, double& z, double& vz, double dt) {
    const double k1v = accel(u, vz), k1z = vz;
    const double k2v = accel(u, vz + dt / 2 * k1v), k2z = vz + dt / 2 * k1v;
    const double k3v = accel(u, vz + dt / 2 * k2v), k3z = vz + dt / 2 * k2v;
    const double k4v = accel(u, vz + dt * k3v), k4z = vz + dt * k3v;
    z += dt / 6 * (k1z + 2 * k2z + 2 * k3z + k4z);
    vz += dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
  };
  const double dt = 1e-4;
  double best_tf = 0.0, best_miss = 1e9;
  for (double ts = 0.5; ts < 2.5; ts += 1e-3) {
    double z = -rise, vz = 0.0, t = 0.0;
    for (; t < ts - 1e-12; t += dt) rk4(1.0, z, vz, dt);
    while (vz > 0.0) {
      rk4(0.0, z, vz, dt);
      t += dt;
    }
    const double miss = std::hypot(z, vz);
    if (miss < best_miss) {
      best_miss = miss;
      best_tf = t;
    }
  }
  return best_tf;
}

TEST(Solve, VerticalClimbMatchesBangBangOracle) {
  QuadParams p;
  OcpConfig cfg = Config(0.0, 81, {0, -2, 0, 0, 0, 0});
  cfg.symmetric_controls = true;
  const OcpSolution sol = Solve(Transcribe(cfg, p));
  ASSERT_TRUE(sol.converged) << sol.status;
  const double oracle = BruteForceClimbTime(p, 2.0);
  EXPECT_NEAR(sol.tf, oracle, 0.01 * oracle);
}

TEST(Verify, TrivialHoverIsExact) {
  QuadParams p;
  OcpSolution sol;
  sol.tf = 1.0;
  sol.epsilon = 0.0;
  sol.cost = 1.0;
  sol.converged = true;
  const RotorCommand h = HoverCommand(p);
  for (int k = 0; k < 5; ++k) sol.nodes.push_back({k / 4.0, PlanarState{}, h});
  sol.mid_controls.assign(4, h);
  const VerificationReport v = Verify(sol, p);
  EXPECT_LE(v.terminal_pos_err, 1e-9);
  EXPECT_LE(v.terminal_vel_err, 1e-9);
  EXPECT_NEAR(v.recomputed_cost, 1.0, 1e-12);
}

TEST(SolutionIo, RoundTrip) {
  QuadParams p;
  const OcpSolution sol = Solve(Transcribe(Config(0.2, 21, {2, 1, 0, 0, 0, 0}), p));
  const auto dir = std::filesystem::temp_directory_path() / "gcnet_ocp_io";
  std::filesystem::create_directories(dir);
  WriteSolutionCsv(sol, (dir / "s.csv").string());
  WriteSolutionMeta(sol, (dir / "s.json").string());
  const OcpSolution back = ReadSolution((dir / "s.csv").string(), (dir / "s.json").string());
  ASSERT_EQ(back.nodes.size(), sol.nodes.size());
  EXPECT_EQ(back.tf, sol.tf);
  EXPECT_EQ(back.cost, sol.cost);
  for (size_t i = 0; i < sol.nodes.size(); ++i) {
    EXPECT_EQ(back.nodes[i].state, sol.nodes[i].state);
    EXPECT_EQ(back.nodes[i].control, sol.nodes[i].control);
  }
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace gcnet
