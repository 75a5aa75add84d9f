// Mass production of optimal trajectories from a box of initial states, and
// the trajectory-level train/validation/test packaging used for training.

#ifndef GCNET_DATASET_H_
#define GCNET_DATASET_H_

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gcnet/dynamics.h"
#include "gcnet/ocp.h"

namespace gcnet {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct SampleSpec {
  // Order (x, z, vx, vz, theta, q).
  std::array<Range, 6> ranges = {{{-10.0, 10.0},
                                  {-10.0, 10.0},
                                  {-5.0, 5.0},
                                  {-5.0, 5.0},
                                  {-1.0471975511965976, 1.0471975511965976},
                                  {-0.01, 0.01}}};
  int num_requested = 2000;
  uint64_t seed = 0;

  void Validate() const;
};

// Uniform draw from the box, a pure function of (spec.seed, draw_index).
// Throws std::out_of_range unless 0 <= draw_index < num_requested.
PlanarState SampleInitial(const SampleSpec& spec, int draw_index);

enum class Split { kNone, kTrain, kVal, kTest };

std::string ToString(Split s);
Split SplitFromString(const std::string& s);

struct TrajectoryRecord {
  int id = 0;  // draw index
  double epsilon = 0.0;
  OcpSolution solution;
  Split split = Split::kNone;
};

using Pair = std::pair<PlanarState, RotorCommand>;

struct Dataset {
  std::vector<TrajectoryRecord> records;

  int CountTrajectories(Split s) const;
  // Every (node state, node control) of the records in split s.
  std::vector<Pair> Pairs(Split s) const;
  std::vector<Pair> AllPairs() const;
  int NumPairs() const;
};

struct GenerationOptions {
  int workers = 1;
  int num_nodes = 81;
  SolveOptions solve;
  // Retry failures once from a perturbed starting point.
  bool retry = true;
};

struct GenerationReport {
  int attempted = 0;
  int converged = 0;
  int retried = 0;
  double rate = 0.0;
  double wall_time = 0.0;
  double epsilon = 0.0;
  SampleSpec spec;

  std::string ToJson() const;
};

struct GenerationResult {
  Dataset dataset;
  GenerationReport report;
};

// One OCP per draw; only converged solutions are kept, ordered by draw index.
GenerationResult Generate(const SampleSpec& spec, double epsilon, const QuadParams& p,
                          const GenerationOptions& opts = {});

// Solves a single draw (with the retry policy). Returns false when both
// attempts fail.
bool SolveDraw(const PlanarState& x0, double epsilon, const QuadParams& p,
               const GenerationOptions& opts, OcpSolution* out, bool* retried = nullptr);

// Random trajectory-level assignment; counts are round(f * n) for train and
// validation, the rest go to test. Throws std::invalid_argument unless the
// fractions are non-negative and sum to 1.
Dataset AssignSplits(Dataset ds, const std::array<double, 3>& fractions, uint64_t seed);

void SaveDataset(const Dataset& ds, const std::string& path);
// Throws SchemaError (naming the row) on malformed input.
Dataset LoadDataset(const std::string& path);

}  // namespace gcnet

#endif  // GCNET_DATASET_H_
