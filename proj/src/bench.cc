#include "gcnet/bench.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "gcnet/csv.h"
#include "gcnet/ocp.h"
#include "json.hpp"

namespace gcnet {

double Sigma(double tf_diffgc, double tf_gcnet) {
  if (!(tf_diffgc > 0.0)) throw std::invalid_argument("Sigma: tf_diffgc must be positive");
  return (tf_diffgc - tf_gcnet) / tf_diffgc;
}

std::optional<double> Sigma(const std::optional<double>& tf_diffgc,
                            const std::optional<double>& tf_gcnet) {
  if (!tf_diffgc || !tf_gcnet || !(*tf_diffgc > 0.0)) return std::nullopt;
  return Sigma(*tf_diffgc, *tf_gcnet);
}

std::vector<Target> BenchmarkSpec::Targets() const {
  auto axis = [](double lo, double hi, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    return v;
  };
  std::vector<Target> out;
  for (double x : axis(x_lo, x_hi, nx))
    for (double z : axis(z_lo, z_hi, nz)) out.push_back({x, z});
  return out;
}

ComparisonCell CompareCell(const BenchmarkSpec& spec, const Target& target, const MlpParams& net,
                           const QuadParams& p, CellRuns* runs) {
  ComparisonCell cell;
  cell.x_f = target.x;
  cell.z_f = target.z;
  CellRuns local;
  CellRuns& r = runs ? *runs : local;
  try {
    r.plan = MinTimeSearchAuto(RestAt(spec.start.x, spec.start.z), RestAt(target.x, target.z), p,
                               spec.dt_step);
    r.diffgc = SimulateDiffgc(r.plan.traj, p, spec.gains, spec.sim);
    cell.tf_diffgc = r.diffgc.arrival_time;
  } catch (const std::exception& e) {
    cell.error = std::string("diffgc: ") + e.what();
  }
  PlanarState x0;
  x0.x = spec.start.x;
  x0.z = spec.start.z;
  r.gcnet = SimulateGcnet(net, x0, target, spec.sim, p);
  cell.tf_gcnet = r.gcnet.arrival_time;
  if (!cell.tf_diffgc && cell.error.empty()) cell.error = "diffgc: no arrival";
  if (!cell.tf_gcnet) cell.error += std::string(cell.error.empty() ? "" : "; ") + "gcnet: no arrival";
  cell.sigma = Sigma(cell.tf_diffgc, cell.tf_gcnet);
  return cell;
}

std::vector<ComparisonCell> SigmaGrid(const BenchmarkSpec& spec, const MlpParams& net,
                                      const QuadParams& p) {
  const std::vector<Target> targets = spec.Targets();
  const int n = static_cast<int>(targets.size());
  std::vector<ComparisonCell> grid(n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) grid[i] = CompareCell(spec, targets[i], net, p);
  };
  const int nw = std::max(1, std::min(spec.workers, n));
  if (nw == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return grid;
}

GridSummary Summarize(const std::vector<ComparisonCell>& grid) {
  GridSummary s;
  s.cells = static_cast<int>(grid.size());
  double sum = 0.0;
  for (int i = 0; i < s.cells; ++i) {
    const auto& c = grid[i];
    if (!c.sigma) {
      s.failed.push_back(i);
      continue;
    }
    ++s.available;
    if (*c.sigma > 0.0) ++s.positive;
    sum += *c.sigma;
    s.min_sigma = s.min_sigma ? std::min(*s.min_sigma, *c.sigma) : *c.sigma;
    s.max_sigma = s.max_sigma ? std::max(*s.max_sigma, *c.sigma) : *c.sigma;
  }
  if (s.available > 0) s.mean_sigma = sum / s.available;
  return s;
}

namespace {

constexpr const char* kGridHeader = "x_f,z_f,tf_diffgc,tf_gcnet,sigma";

std::string Opt(const std::optional<double>& v) { return v ? FormatDouble(*v) : ""; }

nlohmann::json OptJson(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json();
}

}  // namespace

void WriteGridCsv(const std::vector<ComparisonCell>& grid, const std::string& path) {
  auto out = OpenForWrite(path);
  out << kGridHeader << "\n";
  for (const auto& c : grid) {
    out << FormatDouble(c.x_f) << "," << FormatDouble(c.z_f) << "," << Opt(c.tf_diffgc) << ","
        << Opt(c.tf_gcnet) << "," << Opt(c.sigma) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ComparisonCell> ReadGridCsv(const std::string& path) {
  auto in = OpenForRead(path);
  std::string line;
  if (!std::getline(in, line) || line != kGridHeader)
    throw SchemaError("row 0: unexpected grid header");
  std::vector<ComparisonCell> grid;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = SplitCsvLine(line);
    if (f.size() != 5) throw SchemaError("row " + std::to_string(row) + ": expected 5 fields");
    auto opt = [&](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return ParseField(s, row);
    };
    ComparisonCell c;
    c.x_f = ParseField(f[0], row);
    c.z_f = ParseField(f[1], row);
    c.tf_diffgc = opt(f[2]);
    c.tf_gcnet = opt(f[3]);
    c.sigma = opt(f[4]);
    grid.push_back(c);
  }
  return grid;
}

std::string SummaryToJson(const GridSummary& s, const std::vector<ComparisonCell>& grid) {
  nlohmann::json failed = nlohmann::json::array();
  for (int i : s.failed) {
    const auto& c = grid[i];
    failed.push_back({{"index", i}, {"x_f", c.x_f}, {"z_f", c.z_f}, {"error", c.error}});
  }
  nlohmann::json j = {{"cells", s.cells},
                      {"available", s.available},
                      {"positive", s.positive},
                      {"min_sigma", OptJson(s.min_sigma)},
                      {"max_sigma", OptJson(s.max_sigma)},
                      {"mean_sigma", OptJson(s.mean_sigma)},
                      {"failed_cells", failed}};
  return j.dump(2);
}

void EmitReport(const std::vector<ComparisonCell>& grid, const std::string& csv_path,
                const std::string& json_path) {
  WriteGridCsv(grid, csv_path);
  auto out = OpenForWrite(json_path);
  out << SummaryToJson(Summarize(grid), grid) << "\n";
}

FlightMetrics ArrivalStats(const std::vector<SimResult>& runs, const std::vector<Target>& targets,
                           const ArrivalCriteria& c) {
  if (runs.size() != targets.size())
    throw std::invalid_argument("ArrivalStats: one target per run required");
  FlightMetrics m;
  for (size_t i = 0; i < runs.size(); ++i) {
    const auto t = ArrivalTime(runs[i], targets[i], c);
    if (t)
      m.arrival_times.push_back(*t);
    else
      ++m.missing;
  }
  const double n = static_cast<double>(m.arrival_times.size());
  if (n > 0) {
    double sum = 0.0;
    for (double t : m.arrival_times) sum += t;
    m.mean_arrival = sum / n;
  }
  if (n > 1) {
    double ss = 0.0;
    for (double t : m.arrival_times) ss += (t - m.mean_arrival) * (t - m.mean_arrival);
    m.std_arrival = std::sqrt(ss / (n - 1));
  }
  return m;
}

double TrackingError(const SimResult& run, const std::vector<PlanarState>& reference) {
  if (run.samples.size() != reference.size() || reference.empty())
    throw std::invalid_argument("TrackingError: reference length does not match the run");
  double sum = 0.0;
  for (size_t i = 0; i < reference.size(); ++i)
    sum += std::hypot(run.samples[i].state.x - reference[i].x,
                      run.samples[i].state.z - reference[i].z);
  return sum / reference.size();
}

CampaignResult RunCampaign(const FlightCampaign& c, const MlpParams& net, double epsilon,
                           const QuadParams& p) {
  CampaignResult res;
  const MinTimeResult plan = MinTimeSearchAuto(RestAt(c.start.x, c.start.z),
                                               RestAt(c.target.x, c.target.z), p);
  res.tf_plan = plan.tf;

  OcpConfig cfg;
  cfg.epsilon = epsilon;
  cfg.x0.x = c.start.x - c.target.x;
  cfg.x0.z = c.start.z - c.target.z;
  OcpSolution ocp;
  if (!SolveDraw(cfg.x0, epsilon, p, GenerationOptions{}, &ocp))
    throw std::runtime_error("RunCampaign: reference optimal control did not converge");
  res.tf_ocp = ocp.tf;

  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<SimResult> dg_runs, gc_runs;
  for (int k = 0; k < c.repetitions; ++k) {
    PlanarState x0;
    x0.x = c.start.x + c.sigma_pos * normal(rng);
    x0.z = c.start.z + c.sigma_pos * normal(rng);
    x0.vx = c.sigma_vel * normal(rng);
    x0.vz = c.sigma_vel * normal(rng);
    SimResult dg = SimulateDiffgc(plan.traj, p, c.gains, c.sim, x0);
    SimResult gc = SimulateGcnet(net, x0, c.target, c.sim, p);
    std::vector<PlanarState> ref_dg, ref_gc;
    for (const auto& s : dg.samples) ref_dg.push_back(ReferenceState(plan.traj, p, s.t));
    for (const auto& s : gc.samples) {
      PlanarState r = InterpolateState(ocp, std::min(s.t, ocp.tf));
      r.x += c.target.x;
      r.z += c.target.z;
      ref_gc.push_back(r);
    }
    res.diffgc.tracking_errors.push_back(TrackingError(dg, ref_dg));
    res.gcnet.tracking_errors.push_back(TrackingError(gc, ref_gc));
    dg_runs.push_back(std::move(dg));
    gc_runs.push_back(std::move(gc));
  }
  const std::vector<Target> targets(c.repetitions, c.target);
  auto fill = [&](const std::vector<SimResult>& runs, FlightMetrics* m) {
    std::vector<double> track = std::move(m->tracking_errors);
    *m = ArrivalStats(runs, targets, c.sim.arrival);
    m->tracking_errors = std::move(track);
    double sum = 0.0;
    for (double e : m->tracking_errors) sum += e;
    m->mean_tracking = m->tracking_errors.empty() ? 0.0 : sum / m->tracking_errors.size();
  };
  fill(dg_runs, &res.diffgc);
  fill(gc_runs, &res.gcnet);
  return res;
}

std::string MetricsToJson(const CampaignResult& r) {
  auto one = [](const FlightMetrics& m) {
    return nlohmann::json{{"mean_arrival", m.mean_arrival},
                          {"std_arrival", m.std_arrival},
                          {"arrived", m.arrival_times.size()},
                          {"missing", m.missing},
                          {"arrival_times", m.arrival_times},
                          {"mean_tracking_error", m.mean_tracking},
                          {"tracking_errors", m.tracking_errors}};
  };
  nlohmann::json j = {{"tf_plan", r.tf_plan},
                      {"tf_ocp", r.tf_ocp},
                      {"diffgc", one(r.diffgc)},
                      {"gcnet", one(r.gcnet)}};
  return j.dump(2);
}

}  // namespace gcnet
