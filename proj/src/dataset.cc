#include "gcnet/dataset.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "gcnet/csv.h"
#include "json.hpp"

namespace gcnet {

using Eigen::VectorXd;

void SampleSpec::Validate() const {
  for (const Range& r : ranges) {
    if (!(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi))
      throw std::invalid_argument("SampleSpec: bad range");
  }
  if (num_requested < 0) throw std::invalid_argument("SampleSpec: negative count");
}

PlanarState SampleInitial(const SampleSpec& spec, int draw_index) {
  if (draw_index < 0 || draw_index >= spec.num_requested)
    throw std::out_of_range("SampleInitial: draw index out of range");
  std::seed_seq seq{static_cast<uint32_t>(spec.seed), static_cast<uint32_t>(spec.seed >> 32),
                    static_cast<uint32_t>(draw_index)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec6 v;
  for (int i = 0; i < 6; ++i) {
    const Range& r = spec.ranges[i];
    v[i] = r.lo + (r.hi - r.lo) * unit(rng);
  }
  return PlanarState::FromVec(v);
}

std::string ToString(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kNone: break;
  }
  return "none";
}

Split SplitFromString(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  if (s == "none") return Split::kNone;
  throw std::invalid_argument("unknown split '" + s + "'");
}

int Dataset::CountTrajectories(Split s) const {
  return static_cast<int>(std::count_if(records.begin(), records.end(),
                                        [s](const TrajectoryRecord& r) { return r.split == s; }));
}

std::vector<Pair> Dataset::Pairs(Split s) const {
  std::vector<Pair> out;
  for (const auto& r : records) {
    if (r.split != s) continue;
    for (const auto& n : r.solution.nodes) out.emplace_back(n.state, n.control);
  }
  return out;
}

std::vector<Pair> Dataset::AllPairs() const {
  std::vector<Pair> out;
  for (const auto& r : records)
    for (const auto& n : r.solution.nodes) out.emplace_back(n.state, n.control);
  return out;
}

int Dataset::NumPairs() const {
  int n = 0;
  for (const auto& r : records) n += static_cast<int>(r.solution.nodes.size());
  return n;
}

std::string GenerationReport::ToJson() const {
  nlohmann::json ranges = nlohmann::json::array();
  for (const Range& r : spec.ranges) ranges.push_back({r.lo, r.hi});
  nlohmann::json j = {
      {"attempted", attempted},
      {"converged", converged},
      {"retried", retried},
      {"rate", rate},
      {"wall_time", wall_time},
      {"epsilon", epsilon},
      {"seed", spec.seed},
      {"spec", {{"ranges", ranges}, {"num_requested", spec.num_requested}, {"seed", spec.seed}}},
  };
  return j.dump(2);
}

bool SolveDraw(const PlanarState& x0, double epsilon, const QuadParams& p,
               const GenerationOptions& opts, OcpSolution* out, bool* retried) {
  OcpConfig cfg;
  cfg.epsilon = epsilon;
  cfg.num_nodes = opts.num_nodes;
  cfg.x0 = x0;
  const NlpProblem problem(cfg, p);
  if (retried) *retried = false;
  try {
    *out = Solve(problem, std::nullopt, opts.solve);
    return true;
  } catch (const NotConverged&) {
  }
  if (!opts.retry) return false;
  if (retried) *retried = true;
  // Longer horizon and a throttle bias break the symmetry of the default guess.
  VectorXd w = problem.InitialGuess();
  const int tf = problem.tf_index();
  w[tf] = std::clamp(1.7 * w[tf] + 0.5, cfg.tf_min, cfg.tf_max);
  w.segment(problem.control_index(0), tf - problem.control_index(0)).array() += 0.1;
  try {
    *out = Solve(problem, w, opts.solve);
    return true;
  } catch (const NotConverged&) {
  }
  return false;
}

GenerationResult Generate(const SampleSpec& spec, double epsilon, const QuadParams& p,
                          const GenerationOptions& opts) {
  spec.Validate();
  const auto start = std::chrono::steady_clock::now();
  const int n = spec.num_requested;
  std::vector<OcpSolution> sols(n);
  std::vector<char> ok(n, 0), retried(n, 0);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      bool r = false;
      ok[i] = SolveDraw(SampleInitial(spec, i), epsilon, p, opts, &sols[i], &r);
      retried[i] = r;
    }
  };
  const int nw = std::max(1, std::min(opts.workers, n));
  if (nw == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  GenerationResult res;
  for (int i = 0; i < n; ++i) {
    res.report.retried += retried[i];
    if (!ok[i]) continue;
    TrajectoryRecord rec;
    rec.id = i;
    rec.epsilon = epsilon;
    rec.solution = std::move(sols[i]);
    res.dataset.records.push_back(std::move(rec));
  }
  res.report.attempted = n;
  res.report.converged = static_cast<int>(res.dataset.records.size());
  res.report.rate = n > 0 ? static_cast<double>(res.report.converged) / n : 0.0;
  res.report.epsilon = epsilon;
  res.report.spec = spec;
  res.report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

Dataset AssignSplits(Dataset ds, const std::array<double, 3>& fractions, uint64_t seed) {
  for (double f : fractions)
    if (!(f >= 0.0)) throw std::invalid_argument("split fractions must be non-negative");
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must sum to 1");
  const int n = static_cast<int>(ds.records.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Explicit Fisher-Yates so the assignment does not depend on the library's shuffle.
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  const int n_train = static_cast<int>(std::lround(fractions[0] * n));
  const int n_val = std::min(n - n_train, static_cast<int>(std::lround(fractions[1] * n)));
  for (int i = 0; i < n; ++i) {
    Split s = i < n_train ? Split::kTrain : (i < n_train + n_val ? Split::kVal : Split::kTest);
    ds.records[order[i]].split = s;
  }
  return ds;
}

namespace {

constexpr const char* kHeader = "traj_id,split,epsilon,node_idx,t,x,z,vx,vz,theta,q,u1,u2";

}  // namespace

void SaveDataset(const Dataset& ds, const std::string& path) {
  auto out = OpenForWrite(path);
  out << kHeader << "\n";
  for (const auto& r : ds.records) {
    const std::string prefix =
        std::to_string(r.id) + "," + ToString(r.split) + "," + FormatDouble(r.epsilon) + ",";
    for (size_t k = 0; k < r.solution.nodes.size(); ++k) {
      const OcpNode& n = r.solution.nodes[k];
      out << prefix << k << "," << FormatDouble(n.t);
      const Vec6 s = n.state.vec();
      for (int i = 0; i < 6; ++i) out << "," << FormatDouble(s[i]);
      out << "," << FormatDouble(n.control.u1) << "," << FormatDouble(n.control.u2) << "\n";
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset LoadDataset(const std::string& path) {
  auto in = OpenForRead(path);
  std::string line;
  if (!std::getline(in, line) || (line != kHeader && line != std::string(kHeader) + "\r"))
    throw SchemaError("row 0: unexpected dataset header");
  Dataset ds;
  int row = 0;
  auto fail = [&](const std::string& msg) -> SchemaError {
    return SchemaError("row " + std::to_string(row) + ": " + msg);
  };
  // Every trajectory must carry as many nodes as the first one.
  size_t expected = 0;
  auto check_complete = [&] {
    if (ds.records.empty()) return;
    const size_t have = ds.records.back().solution.nodes.size();
    if (expected == 0) expected = have;
    if (have < 2 || have != expected)
      throw fail("trajectory " + std::to_string(ds.records.back().id) + " ends after " +
                 std::to_string(have) + " nodes, expected " + std::to_string(expected));
  };
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = SplitCsvLine(line);
    if (f.size() != 13) throw fail("expected 13 fields, got " + std::to_string(f.size()));
    const double id_d = ParseField(f[0], row);
    const double node_d = ParseField(f[3], row);
    const int id = static_cast<int>(id_d);
    const int node = static_cast<int>(node_d);
    if (id != id_d || node != node_d || node < 0) throw fail("non-integer index");
    Split split;
    try {
      split = SplitFromString(f[1]);
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
    const double eps = ParseField(f[2], row);
    if (node == 0) {
      check_complete();
      TrajectoryRecord rec;
      rec.id = id;
      rec.epsilon = eps;
      rec.split = split;
      rec.solution.epsilon = eps;
      rec.solution.converged = true;
      ds.records.push_back(std::move(rec));
    } else if (ds.records.empty() || ds.records.back().id != id ||
               static_cast<int>(ds.records.back().solution.nodes.size()) != node) {
      throw fail("node index out of sequence");
    } else if (ds.records.back().epsilon != eps || ds.records.back().split != split) {
      throw fail("inconsistent trajectory fields");
    }
    OcpNode n;
    n.t = ParseField(f[4], row);
    Vec6 s;
    for (int i = 0; i < 6; ++i) s[i] = ParseField(f[5 + i], row);
    n.state = PlanarState::FromVec(s);
    n.control = {ParseField(f[11], row), ParseField(f[12], row)};
    ds.records.back().solution.nodes.push_back(n);
    ds.records.back().solution.tf = n.t;
  }
  check_complete();
  return ds;
}

}  // namespace gcnet
