// Head-to-head comparison of the network controller and the min-snap
// baseline: arrival-time advantage over a target grid, and arrival/tracking
// statistics over perturbed repeated flights.

#ifndef GCNET_BENCH_H_
#define GCNET_BENCH_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gcnet/diffgc.h"
#include "gcnet/mlp.h"
#include "gcnet/sim.h"

namespace gcnet {

// (tf_diffgc - tf_gcnet) / tf_diffgc. Throws std::invalid_argument unless
// tf_diffgc > 0.
double Sigma(double tf_diffgc, double tf_gcnet);
// Empty when either time is missing.
std::optional<double> Sigma(const std::optional<double>& tf_diffgc,
                            const std::optional<double>& tf_gcnet);

// Default flight config for point-to-point comparisons.
inline SimConfig LongHorizon() {
  SimConfig c;
  c.horizon = 20.0;
  return c;
}

struct BenchmarkSpec {
  Target start{0.0, 2.5};
  double x_lo = 1.0;
  double x_hi = 10.0;
  int nx = 10;
  double z_lo = 0.0;
  double z_hi = 5.0;
  int nz = 6;
  SimConfig sim = LongHorizon();
  TrackingGains gains;
  double dt_step = 0.05;  // min-time search decrement
  int workers = 1;

  std::vector<Target> Targets() const;  // x-major order
};

struct ComparisonCell {
  double x_f = 0.0;
  double z_f = 0.0;
  std::optional<double> tf_diffgc;
  std::optional<double> tf_gcnet;
  std::optional<double> sigma;
  std::string error;  // non-empty when the cell failed
};

struct CellRuns {
  MinTimeResult plan;
  SimResult diffgc;
  SimResult gcnet;
};

// Runs one cell; `runs` (optional) receives the flights for overlays.
ComparisonCell CompareCell(const BenchmarkSpec& spec, const Target& target, const MlpParams& net,
                           const QuadParams& p, CellRuns* runs = nullptr);

std::vector<ComparisonCell> SigmaGrid(const BenchmarkSpec& spec, const MlpParams& net,
                                      const QuadParams& p);

struct GridSummary {
  int cells = 0;
  int available = 0;
  int positive = 0;
  std::optional<double> min_sigma;
  std::optional<double> max_sigma;
  std::optional<double> mean_sigma;
  std::vector<int> failed;  // indices of cells without sigma
};

GridSummary Summarize(const std::vector<ComparisonCell>& grid);

// `x_f,z_f,tf_diffgc,tf_gcnet,sigma` with empty fields for missing values,
// plus a JSON summary.
void WriteGridCsv(const std::vector<ComparisonCell>& grid, const std::string& path);
std::vector<ComparisonCell> ReadGridCsv(const std::string& path);
std::string SummaryToJson(const GridSummary& s, const std::vector<ComparisonCell>& grid);
void EmitReport(const std::vector<ComparisonCell>& grid, const std::string& csv_path,
                const std::string& json_path);

struct FlightMetrics {
  std::vector<double> arrival_times;  // runs that arrived
  int missing = 0;
  double mean_arrival = 0.0;
  double std_arrival = 0.0;  // sample standard deviation
  std::vector<double> tracking_errors;
  double mean_tracking = 0.0;
};

// Mean and sample standard deviation of arrival times; runs without arrival
// are excluded and counted.
FlightMetrics ArrivalStats(const std::vector<SimResult>& runs, const std::vector<Target>& targets,
                           const ArrivalCriteria& c);

// Mean position distance to a reference sampled on the run's grid. Throws
// std::invalid_argument on length mismatch.
double TrackingError(const SimResult& run, const std::vector<PlanarState>& reference);

struct FlightCampaign {
  Target start{0.0, 2.5};
  Target target{5.0, 2.5};
  int repetitions = 10;
  double sigma_pos = 0.02;
  double sigma_vel = 0.02;
  uint64_t seed = 0;
  SimConfig sim = LongHorizon();
  TrackingGains gains;
};

struct CampaignResult {
  FlightMetrics diffgc;
  FlightMetrics gcnet;
  double tf_plan = 0.0;  // min-time polynomial duration
  double tf_ocp = 0.0;   // optimal-control reference duration
};

// Repeated flights of both controllers from randomly perturbed starts. The
// network's tracking reference is the optimal trajectory for the nominal start
// (solved with `epsilon`); the baseline's is its polynomial.
CampaignResult RunCampaign(const FlightCampaign& c, const MlpParams& net, double epsilon,
                           const QuadParams& p);

std::string MetricsToJson(const CampaignResult& r);

}  // namespace gcnet

#endif  // GCNET_BENCH_H_
