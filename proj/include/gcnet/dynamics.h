// Planar (x-z) quadrotor model driven by two normalized rotor throttles.

#ifndef GCNET_DYNAMICS_H_
#define GCNET_DYNAMICS_H_

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace gcnet {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat62 = Eigen::Matrix<double, 6, 2>;

// Physical constants of the vehicle. Forces in newtons, SI everywhere.
struct QuadParams {
  double f_max = 2.35;        // maximum single-rotor thrust
  double f_min = 1.76;        // minimum single-rotor thrust
  double delta_f = 0.59;      // f_max - f_min
  double beta = 0.5;          // linear drag coefficient [1/s]
  double mass = 0.389;
  double arm_len = 0.08;
  double inertia_xx = 0.001242;
  double g0 = 9.81;

  // Throws std::invalid_argument describing the first violated invariant.
  void Validate() const;

  // Total specific thrust at throttle sum u_sigma.
  double ThrustAccel(double u_sigma) const {
    return u_sigma * delta_f / mass + 2.0 * f_min / mass;
  }
  // Pitch acceleration per unit throttle difference (u2 - u1).
  double PitchGain() const { return arm_len / inertia_xx * delta_f; }
};

// Parameters with f_max, f_min given; delta_f derived.
QuadParams MakeParams(double f_max, double f_min, double beta, double mass,
                      double arm_len, double inertia_xx, double g0 = 9.81);

QuadParams LoadParams(const std::string& path);
void SaveParams(const QuadParams& p, const std::string& path);
std::string ParamsToJson(const QuadParams& p);
QuadParams ParamsFromJson(const std::string& text);

struct PlanarState {
  double x = 0.0;
  double z = 0.0;
  double vx = 0.0;
  double vz = 0.0;
  double theta = 0.0;
  double q = 0.0;

  Vec6 vec() const {
    Vec6 v;
    v << x, z, vx, vz, theta, q;
    return v;
  }
  static PlanarState FromVec(const Vec6& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }
  bool IsFinite() const { return vec().allFinite(); }
  bool operator==(const PlanarState&) const = default;
};

struct RotorCommand {
  double u1 = 0.0;
  double u2 = 0.0;

  double u_sigma() const { return u1 + u2; }
  bool InBounds(double tol = 0.0) const {
    return u1 >= -tol && u1 <= 1.0 + tol && u2 >= -tol && u2 <= 1.0 + tol;
  }
  RotorCommand Clamped() const;
  bool operator==(const RotorCommand&) const = default;
};

// Commanded specific thrust and pitch acceleration for a throttle pair.
struct Actuation {
  double thrust_cmd = 0.0;  // m/s^2, excludes the 2*f_min/m baseline
  double qdot_cmd = 0.0;    // rad/s^2
};

class HoverInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// State derivative [vx, vz, ax, az, q, qdot].
Vec6 Deriv(const Vec6& s, double u1, double u2, const QuadParams& p);
PlanarState DynamicsDeriv(const PlanarState& s, const RotorCommand& u,
                          const QuadParams& p);

// Analytic Jacobians of Deriv with respect to state (6x6) and throttles (6x2).
void DerivJacobian(const Vec6& s, double u1, double u2, const QuadParams& p,
                   Mat6* dfdx, Mat62* dfdu);

// One classical RK4 step with the command held constant over dt.
Vec6 StepRk4(const Vec6& s, double u1, double u2, const QuadParams& p,
             double dt);
PlanarState StepRk4(const PlanarState& s, const RotorCommand& u,
                    const QuadParams& p, double dt);

RotorCommand HoverCommand(const QuadParams& p);

Actuation CommandToActuation(const RotorCommand& u, const QuadParams& p);

}  // namespace gcnet

#endif  // GCNET_DYNAMICS_H_
