#include "gcnet/sim.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gcnet/csv.h"
#include "json.hpp"

namespace gcnet {

void SimConfig::Validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be positive");
  if (!(tau >= 0.0)) throw std::invalid_argument("SimConfig: tau must be non-negative");
  if (!(horizon >= 0.0)) throw std::invalid_argument("SimConfig: horizon must be non-negative");
}

int SimConfig::DelaySteps() const { return static_cast<int>(std::lround(tau / dt)); }
int SimConfig::NumSteps() const { return static_cast<int>(std::lround(horizon / dt)); }

DelayLine::DelayLine(int steps, const PlanarState& initial)
    : buf_(std::max(0, steps), initial) {}

PlanarState DelayLine::Push(const PlanarState& s) {
  if (buf_.empty()) return s;
  PlanarState out = buf_[head_];
  buf_[head_] = s;
  head_ = (head_ + 1) % buf_.size();
  return out;
}

double PositionError(const PlanarState& s, const Target& target) {
  return std::hypot(s.x - target.x, s.z - target.z);
}

namespace {

bool Compliant(const PlanarState& s, const Target& target, const ArrivalCriteria& c) {
  return PositionError(s, target) < c.pos_tol && std::hypot(s.vx, s.vz) < c.speed_tol;
}

}  // namespace

std::optional<double> ArrivalTime(const SimResult& res, const Target& target,
                                  const ArrivalCriteria& c) {
  const auto& s = res.samples;
  constexpr double kSlack = 1e-9;
  size_t start = 0;
  bool in = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (!Compliant(s[i].state, target, c)) {
      in = false;
      continue;
    }
    if (!in) {
      in = true;
      start = i;
    }
    if (s[i].t - s[start].t >= c.hold - kSlack) return s[start].t;
  }
  return std::nullopt;
}

SimResult SimulateClosedLoop(const Controller& ctrl, const PlanarState& x0, const Target& target,
                             const SimConfig& cfg, const QuadParams& p) {
  cfg.Validate();
  SimResult res;
  DelayLine delay(cfg.DelaySteps(), x0);
  const int n = cfg.NumSteps();
  res.samples.reserve(n + 1);
  PlanarState s = x0;
  size_t window_start = 0;
  bool in = false;
  for (int i = 0; i <= n; ++i) {
    const double t = i * cfg.dt;
    const PlanarState observed = delay.Push(s);
    const RotorCommand u = ctrl(t, observed).Clamped();
    res.samples.push_back({t, s, u});

    if (std::abs(s.theta) > cfg.diverge_theta || PositionError(s, target) > cfg.diverge_pos ||
        !s.IsFinite()) {
      res.diverged = true;
      if (cfg.stop_on_divergence) break;
    }
    if (cfg.stop_on_arrival) {
      if (Compliant(s, target, cfg.arrival)) {
        if (!in) window_start = res.samples.size() - 1;
        in = true;
        if (t - res.samples[window_start].t >= cfg.arrival.hold - 1e-9) break;
      } else {
        in = false;
      }
    }
    if (i == n) break;
    s = PlanarState::FromVec(StepRk4(s.vec(), u.u1, u.u2, p, cfg.dt));
    if (!s.IsFinite()) {
      res.diverged = true;
      res.samples.push_back({(i + 1) * cfg.dt, s, u});
      break;
    }
  }
  res.final_state = res.samples.back().state;
  res.arrival_time = ArrivalTime(res, target, cfg.arrival);
  return res;
}

SimResult SimulateGcnet(const MlpParams& net, const PlanarState& x0, const Target& target,
                        const SimConfig& cfg, const QuadParams& p) {
  auto ctrl = [&](double, const PlanarState& obs) {
    PlanarState rel = obs;
    rel.x -= target.x;
    rel.z -= target.z;
    return Forward(net, rel);
  };
  return SimulateClosedLoop(ctrl, x0, target, cfg, p);
}

StabilityProbe ProbeHover(const MlpParams& net, double tau, const QuadParams& p,
                          const StabilityTest& test) {
  SimConfig cfg;
  cfg.dt = test.dt;
  cfg.tau = tau;
  cfg.horizon = test.duration;
  const Target target;
  const SimResult res = SimulateGcnet(net, PlanarState{}, target, cfg, p);
  StabilityProbe probe;
  probe.tau = cfg.DelaySteps() * cfg.dt;
  for (const auto& smp : res.samples)
    probe.excursion = std::max(probe.excursion, PositionError(smp.state, target));
  if (res.diverged) probe.excursion = std::max(probe.excursion, cfg.diverge_pos);
  probe.stable = !res.diverged && probe.excursion <= test.max_excursion;
  return probe;
}

std::string StabilityReport::ToJson() const {
  nlohmann::json tr = nlohmann::json::array();
  for (const auto& pr : trace)
    tr.push_back({{"tau", pr.tau}, {"stable", pr.stable}, {"excursion", pr.excursion}});
  nlohmann::json j = {
      {"tau_s", tau_s}, {"resolution", resolution}, {"trace", tr}, {"note", note}};
  return j.dump(2);
}

StabilityReport StabilityMargin(const MlpParams& net, const QuadParams& p, double tau_lo,
                                double tau_hi, const StabilityTest& test) {
  if (!(test.dt > 0.0)) throw std::invalid_argument("StabilityMargin: dt must be positive");
  long lo = std::lround(tau_lo / test.dt);
  long hi = std::lround(tau_hi / test.dt);
  if (lo < 0 || hi <= lo) throw BracketInvalid("stability bracket must satisfy 0 <= lo < hi");
  StabilityReport rep;
  rep.resolution = test.dt;
  rep.note =
      "bisection assumes hover stability is monotone in the delay; tau_s is the largest "
      "delay found stable, the next grid point is unstable";
  auto probe = [&](long k) {
    StabilityProbe pr = ProbeHover(net, k * test.dt, p, test);
    rep.trace.push_back(pr);
    return pr.stable;
  };
  const bool s_lo = probe(lo);
  const bool s_hi = probe(hi);
  if (s_lo == s_hi || !s_lo) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "bracket invalid: tau=%g s is %s and tau=%g s is %s", lo * test.dt,
                  s_lo ? "stable" : "unstable", hi * test.dt, s_hi ? "stable" : "unstable");
    throw BracketInvalid(buf);
  }
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    if (probe(mid))
      lo = mid;
    else
      hi = mid;
  }
  rep.tau_s = lo * test.dt;
  return rep;
}

DelaySweep RunDelaySweep(const MlpParams& net, const PlanarState& x0, const Target& target,
                         const std::vector<double>& taus, const SimConfig& cfg,
                         const QuadParams& p, double t_terminal) {
  DelaySweep sweep;
  sweep.t_terminal = t_terminal;
  SimConfig c = cfg;
  c.stop_on_arrival = false;
  c.stop_on_divergence = false;
  for (double tau : taus) {
    c.tau = tau;
    sweep.taus.push_back(tau);
    sweep.runs.push_back(SimulateGcnet(net, x0, target, c, p));
  }
  return sweep;
}

double TerminalPitchDeviation(const SimResult& res, double t_from) {
  double dev = 0.0;
  for (const auto& smp : res.samples)
    if (smp.t >= t_from - 1e-12) dev = std::max(dev, std::abs(smp.state.theta));
  return dev;
}

namespace {
constexpr const char* kSimHeader = "t,x,z,vx,vz,theta,q,u1,u2";
}  // namespace

void WriteSimCsv(const SimResult& res, const std::string& path) {
  auto out = OpenForWrite(path);
  out << kSimHeader << "\n";
  for (const auto& smp : res.samples) {
    out << FormatDouble(smp.t);
    const Vec6 v = smp.state.vec();
    for (int i = 0; i < 6; ++i) out << "," << FormatDouble(v[i]);
    out << "," << FormatDouble(smp.command.u1) << "," << FormatDouble(smp.command.u2) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

SimResult ReadSimCsv(const std::string& path) {
  auto in = OpenForRead(path);
  std::string line;
  if (!std::getline(in, line) || line != kSimHeader)
    throw SchemaError("row 0: unexpected simulation CSV header");
  SimResult res;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = SplitCsvLine(line);
    if (f.size() != 9) throw SchemaError("row " + std::to_string(row) + ": expected 9 fields");
    SimSample smp;
    smp.t = ParseField(f[0], row);
    Vec6 v;
    for (int i = 0; i < 6; ++i) v[i] = ParseField(f[1 + i], row);
    smp.state = PlanarState::FromVec(v);
    smp.command = {ParseField(f[7], row), ParseField(f[8], row)};
    res.samples.push_back(smp);
  }
  if (!res.samples.empty()) res.final_state = res.samples.back().state;
  return res;
}

void WriteDelaySweep(const DelaySweep& sweep, const std::string& dir) {
  nlohmann::json runs = nlohmann::json::array();
  for (size_t i = 0; i < sweep.runs.size(); ++i) {
    const long ms = std::lround(sweep.taus[i] * 1000.0);
    const std::string name = "tau_" + std::to_string(ms) + "ms.csv";
    WriteSimCsv(sweep.runs[i], dir + "/" + name);
    const auto& r = sweep.runs[i];
    nlohmann::json e = {{"tau", sweep.taus[i]},
                        {"file", name},
                        {"diverged", r.diverged},
                        {"terminal_pitch_dev", TerminalPitchDeviation(r, sweep.t_terminal)}};
    e["arrival_time"] = r.arrival_time ? nlohmann::json(*r.arrival_time) : nlohmann::json();
    runs.push_back(e);
  }
  auto out = OpenForWrite(dir + "/index.json");
  out << nlohmann::json({{"t_terminal", sweep.t_terminal}, {"runs", runs}}).dump(2) << "\n";
}

}  // namespace gcnet
