#include "gcnet/bench.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gcnet/csv.h"
#include "gtest/gtest.h"
#include "test_nets.h"

namespace gcnet {
namespace {

namespace fs = std::filesystem;

std::string TempFile(const std::string& name) { return (fs::temp_directory_path() / name).string(); }

SimResult Hold(const PlanarState& s, double duration, double dt = 0.01) {
  SimResult r;
  for (int i = 0; i * dt <= duration + 1e-12; ++i) r.samples.push_back({i * dt, s, {}});
  return r;
}

// At rest far away until t_in, then at rest on the target.
SimResult ArriveAt(double t_in, const Target& tgt, double duration = 5.0) {
  SimResult r;
  const double dt = 0.01;
  for (int i = 0; i * dt <= duration + 1e-12; ++i) {
    const double t = i * dt;
    PlanarState s;
    s.x = tgt.x + (t < t_in - 1e-12 ? 1.0 : 0.0);
    s.z = tgt.z;
    r.samples.push_back({t, s, {}});
  }
  return r;
}

TEST(Sigma, Arithmetic) {
  EXPECT_EQ(Sigma(3.0, 3.0), 0.0);
  EXPECT_DOUBLE_EQ(Sigma(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(Sigma(2.0, 3.0), -0.5);
  // not antisymmetric: the baseline time is the denominator
  EXPECT_DOUBLE_EQ(Sigma(1.0, 2.0), -1.0);
  EXPECT_THROW(Sigma(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(Sigma(-1.0, 1.0), std::invalid_argument);
  EXPECT_FALSE(Sigma(std::optional<double>(), std::optional<double>(1.0)).has_value());
  EXPECT_FALSE(Sigma(std::optional<double>(1.0), std::optional<double>()).has_value());
  EXPECT_DOUBLE_EQ(*Sigma(std::optional<double>(4.0), std::optional<double>(3.0)), 0.25);
}

TEST(Grid, TargetsAreXMajor) {
  BenchmarkSpec spec;
  const auto t = spec.Targets();
  ASSERT_EQ(t.size(), 60u);
  EXPECT_EQ(t[0].x, 1.0);
  EXPECT_EQ(t[0].z, 0.0);
  EXPECT_EQ(t[1].x, 1.0);
  EXPECT_EQ(t[1].z, 1.0);
  EXPECT_EQ(t[6].x, 2.0);
  EXPECT_EQ(t[59].x, 10.0);
  EXPECT_EQ(t[59].z, 5.0);
}

TEST(GridIo, RoundTripWithMissingFields) {
  std::vector<ComparisonCell> grid(3);
  grid[0] = {1.0, 0.0, 2.5, 2.0, Sigma(2.5, 2.0), ""};
  grid[1] = {1.0, 1.0, std::nullopt, 1.7, std::nullopt, "diffgc: no arrival"};
  grid[2] = {2.0, 0.0, 3.0, std::nullopt, std::nullopt, "gcnet: no arrival"};
  const std::string path = TempFile("gcnet_grid_io.csv");
  WriteGridCsv(grid, path);
  const auto back = ReadGridCsv(path);
  ASSERT_EQ(back.size(), 3u);
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].x_f, grid[i].x_f);
    EXPECT_EQ(back[i].z_f, grid[i].z_f);
    EXPECT_EQ(back[i].tf_diffgc, grid[i].tf_diffgc);
    EXPECT_EQ(back[i].tf_gcnet, grid[i].tf_gcnet);
    EXPECT_EQ(back[i].sigma, grid[i].sigma);
  }
  const std::string text = ReadFile(path);
  EXPECT_NE(text.find("1,1,,1.7,\n"), std::string::npos) << text;

  WriteGridCsv({}, path);
  EXPECT_EQ(ReadFile(path), "x_f,z_f,tf_diffgc,tf_gcnet,sigma\n");
  EXPECT_TRUE(ReadGridCsv(path).empty());
  {
    std::ofstream out(path);
    out << "x,z\n";
  }
  EXPECT_THROW(ReadGridCsv(path), SchemaError);
  fs::remove(path);
}

TEST(GridSummary, CountsAndExtremes) {
  std::vector<ComparisonCell> grid(4);
  grid[0].sigma = 0.3;
  grid[1].sigma = -0.05;
  grid[3].sigma = 0.45;
  const GridSummary s = Summarize(grid);
  EXPECT_EQ(s.cells, 4);
  EXPECT_EQ(s.available, 3);
  EXPECT_EQ(s.positive, 2);
  EXPECT_EQ(*s.max_sigma, 0.45);
  EXPECT_EQ(*s.min_sigma, -0.05);
  EXPECT_NEAR(*s.mean_sigma, 0.7 / 3, 1e-15);
  EXPECT_EQ(s.failed, std::vector<int>{2});

  const GridSummary none = Summarize({});
  EXPECT_EQ(none.cells, 0);
  EXPECT_FALSE(none.max_sigma.has_value());
  EXPECT_FALSE(none.mean_sigma.has_value());
}

TEST(ArrivalStats, MeanAndSampleStd) {
  const Target tgt{1.0, 2.0};
  ArrivalCriteria c;
  const std::vector<SimResult> same(3, ArriveAt(1.0, tgt));
  const FlightMetrics a = ArrivalStats(same, {tgt, tgt, tgt}, c);
  EXPECT_EQ(a.arrival_times.size(), 3u);
  EXPECT_NEAR(a.mean_arrival, 1.0, 1e-12);
  EXPECT_EQ(a.std_arrival, 0.0);

  const std::vector<SimResult> spread = {ArriveAt(1.0, tgt), ArriveAt(2.0, tgt), ArriveAt(3.0, tgt),
                                         Hold(PlanarState{}, 5.0)};
  const FlightMetrics b = ArrivalStats(spread, {tgt, tgt, tgt, tgt}, c);
  EXPECT_EQ(b.missing, 1);
  EXPECT_NEAR(b.mean_arrival, 2.0, 1e-9);
  EXPECT_NEAR(b.std_arrival, 1.0, 1e-9);
  EXPECT_THROW(ArrivalStats(spread, {tgt}, c), std::invalid_argument);
}

TEST(TrackingError, MeanPositionDistance) {
  const SimResult run = Hold(PlanarState{1, 2, 0, 0, 0, 0}, 1.0);
  std::vector<PlanarState> ref;
  for (const auto& s : run.samples) ref.push_back(s.state);
  EXPECT_EQ(TrackingError(run, ref), 0.0);
  for (auto& r : ref) r.z += 0.1;
  EXPECT_NEAR(TrackingError(run, ref), 0.1, 1e-12);
  ref.pop_back();
  EXPECT_THROW(TrackingError(run, ref), std::invalid_argument);
}

BenchmarkSpec SmallSpec() {
  BenchmarkSpec spec;
  spec.x_lo = 1.0;
  spec.x_hi = 1.5;
  spec.nx = 2;
  spec.z_lo = 2.5;
  spec.z_hi = 3.0;
  spec.nz = 2;
  spec.sim.horizon = 8.0;
  return spec;
}

TEST(CompareCell, BothControllersUseTheSameArrivalRule) {
  QuadParams p;
  const MlpParams net = testing::HoverNet(p);
  const BenchmarkSpec spec = SmallSpec();
  const Target tgt{1.0, 3.0};
  CellRuns runs;
  const ComparisonCell cell = CompareCell(spec, tgt, net, p, &runs);
  ASSERT_TRUE(cell.tf_diffgc.has_value()) << cell.error;
  ASSERT_TRUE(cell.tf_gcnet.has_value()) << cell.error;
  EXPECT_EQ(cell.tf_diffgc, ArrivalTime(runs.diffgc, tgt, spec.sim.arrival));
  EXPECT_EQ(cell.tf_gcnet, ArrivalTime(runs.gcnet, tgt, spec.sim.arrival));
  EXPECT_EQ(cell.sigma, Sigma(*cell.tf_diffgc, *cell.tf_gcnet));
  EXPECT_TRUE(cell.error.empty());
  EXPECT_EQ(runs.gcnet.samples.front().state.x, spec.start.x);
  EXPECT_EQ(runs.gcnet.samples.front().state.z, spec.start.z);
}

TEST(SigmaGrid, OneCellGridEqualsCompareCellAndParallelIsDeterministic) {
  QuadParams p;
  const MlpParams net = testing::HoverNet(p);
  BenchmarkSpec one = SmallSpec();
  one.nx = one.nz = 1;
  const auto g1 = SigmaGrid(one, net, p);
  ASSERT_EQ(g1.size(), 1u);
  const ComparisonCell c = CompareCell(one, Target{one.x_lo, one.z_lo}, net, p);
  EXPECT_EQ(g1[0].tf_diffgc, c.tf_diffgc);
  EXPECT_EQ(g1[0].tf_gcnet, c.tf_gcnet);
  EXPECT_EQ(g1[0].sigma, c.sigma);

  BenchmarkSpec spec = SmallSpec();
  const auto serial = SigmaGrid(spec, net, p);
  spec.workers = 3;
  const auto parallel = SigmaGrid(spec, net, p);
  const std::string a = TempFile("gcnet_grid_a.csv"), b = TempFile("gcnet_grid_b.csv");
  WriteGridCsv(serial, a);
  WriteGridCsv(parallel, b);
  EXPECT_EQ(ReadFile(a), ReadFile(b));
  fs::remove(a);
  fs::remove(b);
}

}  // namespace
}  // namespace gcnet
