#include "gcnet/dynamics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gcnet {

using nlohmann::json;

void QuadParams::Validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("invalid QuadParams: " + what);
  };
  if (!(f_max > f_min)) fail("f_max must exceed f_min");
  if (!(f_min >= 0.0)) fail("f_min must be non-negative");
  if (std::abs(delta_f - (f_max - f_min)) > 1e-12)
    fail("delta_f must equal f_max - f_min");
  if (!(mass > 0.0)) fail("mass must be positive");
  if (!(arm_len > 0.0)) fail("arm_len must be positive");
  if (!(inertia_xx > 0.0)) fail("inertia_xx must be positive");
  if (!(g0 > 0.0)) fail("g0 must be positive");
  if (!(beta >= 0.0)) fail("beta must be non-negative");
}

QuadParams MakeParams(double f_max, double f_min, double beta, double mass,
                      double arm_len, double inertia_xx, double g0) {
  QuadParams p;
  p.f_max = f_max;
  p.f_min = f_min;
  p.delta_f = f_max - f_min;
  p.beta = beta;
  p.mass = mass;
  p.arm_len = arm_len;
  p.inertia_xx = inertia_xx;
  p.g0 = g0;
  p.Validate();
  return p;
}

std::string ParamsToJson(const QuadParams& p) {
  json j = {{"f_max", p.f_max},         {"f_min", p.f_min},
            {"delta_f", p.delta_f},     {"beta", p.beta},
            {"mass", p.mass},           {"arm_len", p.arm_len},
            {"inertia_xx", p.inertia_xx}, {"g0", p.g0}};
  return j.dump(2);
}

QuadParams ParamsFromJson(const std::string& text) {
  json j = json::parse(text);
  QuadParams p;
  p.f_max = j.at("f_max").get<double>();
  p.f_min = j.at("f_min").get<double>();
  p.delta_f = j.value("delta_f", p.f_max - p.f_min);
  p.beta = j.at("beta").get<double>();
  p.mass = j.at("mass").get<double>();
  p.arm_len = j.at("arm_len").get<double>();
  p.inertia_xx = j.at("inertia_xx").get<double>();
  p.g0 = j.value("g0", 9.81);
  p.Validate();
  return p;
}

QuadParams LoadParams(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open params file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParamsFromJson(ss.str());
}

void SaveParams(const QuadParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write params file: " + path);
  out << ParamsToJson(p) << "\n";
}

RotorCommand RotorCommand::Clamped() const {
  return {std::clamp(u1, 0.0, 1.0), std::clamp(u2, 0.0, 1.0)};
}

Vec6 Deriv(const Vec6& s, double u1, double u2, const QuadParams& p) {
  const double a = p.ThrustAccel(u1 + u2);
  const double st = std::sin(s[4]);
  const double ct = std::cos(s[4]);
  Vec6 d;
  d << s[2], s[3], -a * st - p.beta * s[2], a * ct - p.g0 - p.beta * s[3],
      s[5], p.PitchGain() * (u2 - u1);
  return d;
}

PlanarState DynamicsDeriv(const PlanarState& s, const RotorCommand& u,
                          const QuadParams& p) {
  return PlanarState::FromVec(Deriv(s.vec(), u.u1, u.u2, p));
}

void DerivJacobian(const Vec6& s, double u1, double u2, const QuadParams& p,
                   Mat6* dfdx, Mat62* dfdu) {
  const double a = p.ThrustAccel(u1 + u2);
  const double st = std::sin(s[4]);
  const double ct = std::cos(s[4]);
  const double da = p.delta_f / p.mass;
  if (dfdx) {
    dfdx->setZero();
    (*dfdx)(0, 2) = 1.0;
    (*dfdx)(1, 3) = 1.0;
    (*dfdx)(2, 2) = -p.beta;
    (*dfdx)(2, 4) = -a * ct;
    (*dfdx)(3, 3) = -p.beta;
    (*dfdx)(3, 4) = -a * st;
    (*dfdx)(4, 5) = 1.0;
  }
  if (dfdu) {
    dfdu->setZero();
    (*dfdu)(2, 0) = (*dfdu)(2, 1) = -da * st;
    (*dfdu)(3, 0) = (*dfdu)(3, 1) = da * ct;
    (*dfdu)(5, 0) = -p.PitchGain();
    (*dfdu)(5, 1) = p.PitchGain();
  }
}

Vec6 StepRk4(const Vec6& s, double u1, double u2, const QuadParams& p,
             double dt) {
  const Vec6 k1 = Deriv(s, u1, u2, p);
  const Vec6 k2 = Deriv(s + 0.5 * dt * k1, u1, u2, p);
  const Vec6 k3 = Deriv(s + 0.5 * dt * k2, u1, u2, p);
  const Vec6 k4 = Deriv(s + dt * k3, u1, u2, p);
  return s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

PlanarState StepRk4(const PlanarState& s, const RotorCommand& u,
                    const QuadParams& p, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("StepRk4: dt must be positive");
  return PlanarState::FromVec(StepRk4(s.vec(), u.u1, u.u2, p, dt));
}

RotorCommand HoverCommand(const QuadParams& p) {
  const double weight = p.mass * p.g0;
  // Small slack so exact boundary cases survive rounding.
  const double slack = 1e-12 * weight;
  if (weight < 2.0 * p.f_min - slack || weight > 2.0 * p.f_max + slack) {
    throw HoverInfeasible("hover infeasible: m*g0 = " + std::to_string(weight) +
                          " N outside [2*f_min, 2*f_max]");
  }
  const double u =
      std::clamp((weight - 2.0 * p.f_min) / (2.0 * p.delta_f), 0.0, 1.0);
  return {u, u};
}

Actuation CommandToActuation(const RotorCommand& u, const QuadParams& p) {
  return {u.u_sigma() * p.delta_f / p.mass, p.PitchGain() * (u.u2 - u.u1)};
}

}  // namespace gcnet
