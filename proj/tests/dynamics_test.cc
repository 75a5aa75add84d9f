#include "gcnet/dynamics.h"

#include <cmath>
#include <random>

#include "gtest/gtest.h"

namespace gcnet {
namespace {

PlanarState RandomState(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {10 * u(rng), 10 * u(rng), 5 * u(rng), 5 * u(rng), u(rng), 2 * u(rng)};
}

TEST(Dynamics, HoverIsEquilibrium) {
  QuadParams p;
  const RotorCommand h = HoverCommand(p);
  EXPECT_NEAR(h.u1, 0.250924, 1e-6);
  EXPECT_EQ(h.u1, h.u2);
  // independent of the implementation: m g0 = 2 f_min + 2 u delta_f
  EXPECT_NEAR(h.u1, (p.mass * p.g0 - 2 * p.f_min) / (2 * p.delta_f), 1e-15);
  const Vec6 d = Deriv(Vec6::Zero(), h.u1, h.u2, p);
  EXPECT_LT(d.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Dynamics, FullThrottleClimb) {
  QuadParams p;
  const Vec6 d = Deriv(Vec6::Zero(), 1.0, 1.0, p);
  EXPECT_NEAR(d[3], 2 * 0.59 / 0.389 + 2 * 1.76 / 0.389 - 9.81, 1e-3);
  EXPECT_NEAR(d[3], 2.2731, 1e-3);
  EXPECT_EQ(d[2], 0.0);
  EXPECT_EQ(d[5], 0.0);
}

TEST(Dynamics, SymmetricThrottleHasNoPitchAcceleration) {
  QuadParams p;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng);
    EXPECT_EQ(Deriv(RandomState(rng).vec(), a, a, p)[5], 0.0);
  }
}

TEST(Dynamics, MatchesModelTermByTerm) {
  QuadParams p;
  const PlanarState s{1.0, -2.0, 0.3, -0.7, 0.4, 1.1};
  const double u1 = 0.2, u2 = 0.9;
  const double a = (u1 + u2) * 0.59 / 0.389 + 2 * 1.76 / 0.389;
  const Vec6 d = Deriv(s.vec(), u1, u2, p);
  EXPECT_NEAR(d[0], 0.3, 1e-15);
  EXPECT_NEAR(d[1], -0.7, 1e-15);
  EXPECT_NEAR(d[2], -a * std::sin(0.4) - 0.5 * 0.3, 1e-12);
  EXPECT_NEAR(d[3], a * std::cos(0.4) - 9.81 + 0.5 * 0.7, 1e-12);
  EXPECT_NEAR(d[4], 1.1, 1e-15);
  EXPECT_NEAR(d[5], 0.08 / 0.001242 * 0.59 * 0.7, 1e-10);
}

TEST(Dynamics, TranslationInvariant) {
  QuadParams p;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    PlanarState s = RandomState(rng);
    const Vec6 d0 = Deriv(s.vec(), 0.3, 0.6, p);
    s.x += 7.5;
    s.z -= 3.25;
    EXPECT_EQ(Deriv(s.vec(), 0.3, 0.6, p), d0);
  }
}

TEST(Dynamics, ThrustEnvelope) {
  QuadParams p;
  EXPECT_NEAR(p.ThrustAccel(0.0), 9.0488, 1e-3);
  EXPECT_NEAR(p.ThrustAccel(2.0), 12.0823, 1e-3);
}

TEST(Dynamics, JacobianMatchesCentralDifferences) {
  QuadParams p;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec6 s = RandomState(rng).vec();
    const double u1 = u(rng), u2 = u(rng);
    Mat6 fx;
    Mat62 fu;
    DerivJacobian(s, u1, u2, p, &fx, &fu);
    const double h = 1e-6;
    for (int j = 0; j < 6; ++j) {
      Vec6 sp = s, sm = s;
      sp[j] += h;
      sm[j] -= h;
      const Vec6 fd = (Deriv(sp, u1, u2, p) - Deriv(sm, u1, u2, p)) / (2 * h);
      EXPECT_LT((fd - fx.col(j)).cwiseAbs().maxCoeff(), 1e-6) << "state column " << j;
    }
    const Vec6 d1 = (Deriv(s, u1 + h, u2, p) - Deriv(s, u1 - h, u2, p)) / (2 * h);
    const Vec6 d2 = (Deriv(s, u1, u2 + h, p) - Deriv(s, u1, u2 - h, p)) / (2 * h);
    EXPECT_LT((d1 - fu.col(0)).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_LT((d2 - fu.col(1)).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(Rk4, HoverStaysPut) {
  QuadParams p;
  const RotorCommand h = HoverCommand(p);
  const PlanarState s = StepRk4(PlanarState{}, h, p, 0.01);
  EXPECT_LT(s.vec().cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Rk4, FullThrottleStepMatchesDenseIntegration) {
  QuadParams p;
  const Vec6 coarse = StepRk4(Vec6::Zero(), 1.0, 1.0, p, 0.1);
  // vertical subsystem alone has the closed form vz = a/beta (1 - exp(-beta t))
  const double a = 2.0 * p.f_max / p.mass - p.g0;
  EXPECT_NEAR(coarse[3], a / p.beta * (1 - std::exp(-p.beta * 0.1)), 1e-6);
  Vec6 fine = Vec6::Zero();
  for (int i = 0; i < 1000; ++i) fine = StepRk4(fine, 1.0, 1.0, p, 1e-4);
  EXPECT_LT((coarse - fine).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_NEAR(coarse[3], 2.2731 * 0.1, 2.2731 * 0.1 * 0.05 + 1e-3);
}

TEST(Rk4, FourthOrderConvergence) {
  QuadParams p;
  const Vec6 s0 = PlanarState{0, 0, 1.0, -0.5, 0.3, 0.8}.vec();
  auto run = [&](double dt) {
    Vec6 s = s0;
    const int n = static_cast<int>(std::lround(1.0 / dt));
    for (int i = 0; i < n; ++i) s = StepRk4(s, 0.2, 0.45, p, dt);
    return s;
  };
  const Vec6 ref = run(1e-5);
  const double e1 = (run(0.04) - ref).norm();
  const double e2 = (run(0.02) - ref).norm();
  EXPECT_GT(e1 / e2, 14.0);
  EXPECT_LT(e1 / e2, 18.0);
}

TEST(Hover, AchievabilityBoundaries) {
  QuadParams top = MakeParams(2.35, 1.76, 0.5, 2 * 2.35 / 9.81, 0.08, 0.001242);
  EXPECT_NEAR(HoverCommand(top).u1, 1.0, 1e-12);
  QuadParams bottom = MakeParams(2.35, 1.76, 0.5, 2 * 1.76 / 9.81, 0.08, 0.001242);
  EXPECT_NEAR(HoverCommand(bottom).u2, 0.0, 1e-12);
  QuadParams heavy = MakeParams(2.35, 1.76, 0.5, 1.0, 0.08, 0.001242);
  EXPECT_THROW(HoverCommand(heavy), HoverInfeasible);
}

TEST(Actuation, Examples) {
  QuadParams p;
  Actuation a = CommandToActuation({0, 0}, p);
  EXPECT_EQ(a.thrust_cmd, 0.0);
  EXPECT_EQ(a.qdot_cmd, 0.0);
  a = CommandToActuation({1, 1}, p);
  EXPECT_NEAR(a.thrust_cmd, 3.0334, 1e-4);
  EXPECT_EQ(a.qdot_cmd, 0.0);
  a = CommandToActuation({0, 1}, p);
  EXPECT_NEAR(a.qdot_cmd, 38.003, 0.01);
  EXPECT_NEAR(a.qdot_cmd, Deriv(Vec6::Zero(), 0, 1, p)[5], 1e-12);
}

TEST(Params, ValidationAndRoundTrip) {
  QuadParams p;
  EXPECT_NO_THROW(p.Validate());
  EXPECT_NEAR(p.delta_f, p.f_max - p.f_min, 1e-12);
  QuadParams bad = p;
  bad.f_min = 3.0;
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
  bad = p;
  bad.delta_f = 0.5;
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
  bad = p;
  bad.beta = -0.1;
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
  const QuadParams q = ParamsFromJson(ParamsToJson(p));
  EXPECT_EQ(q.mass, p.mass);
  EXPECT_EQ(q.inertia_xx, p.inertia_xx);
  EXPECT_EQ(q.delta_f, p.delta_f);
}

}  // namespace
}  // namespace gcnet
