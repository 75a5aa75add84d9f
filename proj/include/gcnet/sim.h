// Closed-loop flight of a state-feedback controller on the planar plant with
// a pure measurement-to-actuation delay, arrival detection, and the hover
// stability margin search.

#ifndef GCNET_SIM_H_
#define GCNET_SIM_H_

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcnet/dynamics.h"
#include "gcnet/mlp.h"

namespace gcnet {

struct Target {
  double x = 0.0;
  double z = 0.0;
};

struct ArrivalCriteria {
  double pos_tol = 0.15;
  double speed_tol = 0.3;
  double hold = 0.2;
};

struct SimConfig {
  double dt = 0.002;
  double tau = 0.0;
  double horizon = 10.0;
  ArrivalCriteria arrival;
  double diverge_pos = 50.0;        // distance from the target
  double diverge_theta = 3.14159265358979323846;
  bool stop_on_arrival = false;     // end once the hold window completes
  bool stop_on_divergence = true;

  void Validate() const;
  int DelaySteps() const;  // round(tau / dt)
  int NumSteps() const;    // round(horizon / dt)
};

// Fixed-length FIFO of past states; Push returns the state from `steps`
// pushes ago (the initial fill before that).
class DelayLine {
 public:
  DelayLine(int steps, const PlanarState& initial);
  PlanarState Push(const PlanarState& s);
  int steps() const { return static_cast<int>(buf_.size()); }

 private:
  std::vector<PlanarState> buf_;
  size_t head_ = 0;
};

struct SimSample {
  double t = 0.0;
  PlanarState state;
  RotorCommand command;  // applied over [t, t + dt); clamped
};

struct SimResult {
  std::vector<SimSample> samples;
  std::optional<double> arrival_time;
  bool diverged = false;
  PlanarState final_state;
};

// Maps (time, observed state) to throttles. Called once per step.
using Controller = std::function<RotorCommand(double t, const PlanarState& observed)>;

SimResult SimulateClosedLoop(const Controller& ctrl, const PlanarState& x0, const Target& target,
                             const SimConfig& cfg, const QuadParams& p);

// The network sees the target-relative state.
SimResult SimulateGcnet(const MlpParams& net, const PlanarState& x0, const Target& target,
                        const SimConfig& cfg, const QuadParams& p);

// Start of the earliest window of length `hold` over which the position error
// stays below pos_tol and the speed below speed_tol at every sample.
std::optional<double> ArrivalTime(const SimResult& res, const Target& target,
                                  const ArrivalCriteria& c);

double PositionError(const PlanarState& s, const Target& target);

struct StabilityTest {
  double duration = 20.0;
  double max_excursion = 0.5;
  double dt = 0.001;
};

struct StabilityProbe {
  double tau = 0.0;
  bool stable = false;
  double excursion = 0.0;
};

struct StabilityReport {
  double tau_s = 0.0;  // largest stable delay on the resolution grid
  double resolution = 0.001;
  std::vector<StabilityProbe> trace;
  std::string note;

  std::string ToJson() const;
};

class BracketInvalid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Station-keeping at rest on the target with delay tau.
StabilityProbe ProbeHover(const MlpParams& net, double tau, const QuadParams& p,
                          const StabilityTest& test = {});

// Bisection over whole multiples of test.dt between tau_lo (stable) and
// tau_hi (unstable). Throws BracketInvalid otherwise.
StabilityReport StabilityMargin(const MlpParams& net, const QuadParams& p, double tau_lo,
                                double tau_hi, const StabilityTest& test = {});

struct DelaySweep {
  std::vector<double> taus;
  std::vector<SimResult> runs;
  double t_terminal = 0.0;  // start of the terminal phase, e.g. the optimal tf
};

// Never stops early, so every run covers the same time grid.
DelaySweep RunDelaySweep(const MlpParams& net, const PlanarState& x0, const Target& target,
                         const std::vector<double>& taus, const SimConfig& cfg,
                         const QuadParams& p, double t_terminal = 0.0);

// Largest |theta| from t_from to the end of the run.
double TerminalPitchDeviation(const SimResult& res, double t_from);

// `t,x,z,vx,vz,theta,q,u1,u2`, one line per sample.
void WriteSimCsv(const SimResult& res, const std::string& path);
SimResult ReadSimCsv(const std::string& path);
// One CSV per delay plus index.json in `dir`.
void WriteDelaySweep(const DelaySweep& sweep, const std::string& dir);

}  // namespace gcnet

#endif  // GCNET_SIM_H_
