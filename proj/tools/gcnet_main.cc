// gcnet: command-line entry point for the optimal-control / policy-network /
// min-snap comparison pipeline. See README.md for the subcommands.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "gcnet/bench.h"
#include "gcnet/csv.h"
#include "gcnet/dataset.h"
#include "gcnet/diffgc.h"
#include "gcnet/dynamics.h"
#include "gcnet/mlp.h"
#include "gcnet/ocp.h"
#include "gcnet/sim.h"
#include "json.hpp"

#ifndef GCNET_VERSION
#define GCNET_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace gcnet {
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<double> ParseList(const std::string& text, size_t n, const std::string& flag) {
  std::vector<double> out;
  for (const auto& f : SplitCsvLine(text)) {
    try {
      out.push_back(ParseField(f, 0));
    } catch (const SchemaError&) {
      throw UsageError(flag + ": bad number '" + f + "'");
    }
  }
  if (n > 0 && out.size() != n)
    throw UsageError(flag + ": expected " + std::to_string(n) + " comma-separated values");
  return out;
}

PlanarState ParseState(const std::string& text, const std::string& flag) {
  const auto v = ParseList(text, 6, flag);
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

Target ParseTarget(const std::string& text, const std::string& flag) {
  const auto v = ParseList(text, 2, flag);
  return {v[0], v[1]};
}

json StateJson(const PlanarState& s) { return {s.x, s.z, s.vx, s.vz, s.theta, s.q}; }

void WriteJson(const json& j, const std::string& path) {
  auto out = OpenForWrite(path);
  out << j.dump(2) << "\n";
}

// Options shared by every subcommand.
struct Common {
  std::string out;
  std::string params_path;
  uint64_t seed = 0;
  int workers = std::max(1u, std::thread::hardware_concurrency());
  QuadParams params;
};

void AddCommon(CLI::App* app, Common* c, const std::string& default_out, bool seeded = false,
               bool parallel = false) {
  c->out = default_out;
  app->add_option("--out", c->out, "output directory")->capture_default_str();
  app->add_option("--params", c->params_path, "vehicle parameter JSON (default: built-in)");
  if (seeded) app->add_option("--seed", c->seed, "random seed")->capture_default_str();
  if (parallel) app->add_option("--workers", c->workers, "worker threads")->capture_default_str();
}

void Prepare(Common* c) {
  if (!c->params_path.empty()) c->params = LoadParams(c->params_path);
  c->params.Validate();
  fs::create_directories(c->out);
}

void WriteManifest(const Common& c, const std::string& command, const json& config,
                   const std::vector<std::string>& argv) {
  json j = {{"tool", "gcnet"},
            {"version", GCNET_VERSION},
            {"command", command},
            {"argv", argv},
            {"seed", c.seed},
            {"workers", c.workers},
            {"params_file", c.params_path},
            {"params", json::parse(ParamsToJson(c.params))},
            {"config", config}};
  WriteJson(j, c.out + "/manifest.json");
}

std::string Join(const std::string& dir, const std::string& name) { return dir + "/" + name; }

std::vector<double> ParseFractions(const std::string& text) {
  return ParseList(text, 3, "--fractions");
}

}  // namespace
}  // namespace gcnet

int main(int argc, char** argv) {
  using namespace gcnet;
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Optimal-control policy network toolkit"};
  app.set_version_flag("--version", GCNET_VERSION);
  app.require_subcommand(1);
  std::function<void()> action;

  // ocp solve
  auto* ocp = app.add_subcommand("ocp", "optimal control problems")->require_subcommand(1);
  Common ocp_c;
  std::string ocp_x0 = "-5,-2.5,0,0,0,0";
  double ocp_eps = 0.2;
  int ocp_nodes = 81;
  auto* ocp_solve = ocp->add_subcommand("solve", "solve one OCP to the origin");
  AddCommon(ocp_solve, &ocp_c, "runs/ocp");
  ocp_solve->add_option("--x0", ocp_x0, "initial state x,z,vx,vz,theta,q")->capture_default_str();
  ocp_solve->add_option("--eps", ocp_eps, "power weight epsilon in [0,1]")->capture_default_str();
  ocp_solve->add_option("--nodes", ocp_nodes, "collocation nodes")->capture_default_str();
  ocp_solve->callback([&] {
    action = [&] {
      const PlanarState x0 = ParseState(ocp_x0, "--x0");
      Prepare(&ocp_c);
      GenerationOptions opts;
      opts.num_nodes = ocp_nodes;
      OcpSolution sol;
      const bool ok = SolveDraw(x0, ocp_eps, ocp_c.params, opts, &sol);
      WriteManifest(ocp_c, "ocp solve",
                    {{"x0", StateJson(x0)}, {"eps", ocp_eps}, {"nodes", ocp_nodes}}, args);
      if (!ok) throw std::runtime_error("OCP did not converge");
      WriteSolutionCsv(sol, Join(ocp_c.out, "trajectory.csv"));
      WriteSolutionMeta(sol, Join(ocp_c.out, "meta.json"));
      const VerificationReport v = Verify(sol, ocp_c.params);
      WriteJson({{"terminal_pos_err", v.terminal_pos_err},
                 {"terminal_vel_err", v.terminal_vel_err},
                 {"max_bound_violation", v.max_bound_violation},
                 {"recomputed_cost", v.recomputed_cost},
                 {"cost_rel_err", v.cost_rel_err}},
                Join(ocp_c.out, "verify.json"));
      std::printf("tf %.6f  J %.6f  iterations %d\n", sol.tf, sol.cost, sol.iterations);
    };
  });

  // dataset gen / split
  auto* dataset = app.add_subcommand("dataset", "trajectory datasets")->require_subcommand(1);
  Common gen_c;
  int gen_num = 2000;
  double gen_eps = 0.2;
  int gen_nodes = 81;
  auto* gen = dataset->add_subcommand("gen", "generate optimal trajectories");
  AddCommon(gen, &gen_c, "runs/dataset", true, true);
  gen->add_option("--num", gen_num, "initial states to draw")->capture_default_str();
  gen->add_option("--eps", gen_eps, "power weight epsilon")->capture_default_str();
  gen->add_option("--nodes", gen_nodes, "collocation nodes")->capture_default_str();
  gen->callback([&] {
    action = [&] {
      Prepare(&gen_c);
      SampleSpec spec;
      spec.num_requested = gen_num;
      spec.seed = gen_c.seed;
      GenerationOptions opts;
      opts.workers = gen_c.workers;
      opts.num_nodes = gen_nodes;
      WriteManifest(gen_c, "dataset gen",
                    {{"num", gen_num}, {"eps", gen_eps}, {"nodes", gen_nodes}}, args);
      const GenerationResult r = Generate(spec, gen_eps, gen_c.params, opts);
      SaveDataset(r.dataset, Join(gen_c.out, "dataset.csv"));
      auto out = OpenForWrite(Join(gen_c.out, "report.json"));
      out << r.report.ToJson() << "\n";
      std::printf("converged %d/%d (%.1f%%) in %.1f s\n", r.report.converged, r.report.attempted,
                  100.0 * r.report.rate, r.report.wall_time);
    };
  });

  Common split_c;
  std::string split_in;
  std::string split_fractions = "0.8,0.1,0.1";
  auto* split = dataset->add_subcommand("split", "assign train/val/test by trajectory");
  AddCommon(split, &split_c, "runs/split", true);
  split->add_option("--data", split_in, "dataset CSV")->required();
  split->add_option("--fractions", split_fractions, "train,val,test")->capture_default_str();
  split->callback([&] {
    action = [&] {
      const auto f = ParseFractions(split_fractions);
      Prepare(&split_c);
      WriteManifest(split_c, "dataset split", {{"data", split_in}, {"fractions", f}}, args);
      Dataset ds = AssignSplits(LoadDataset(split_in), {f[0], f[1], f[2]}, split_c.seed);
      SaveDataset(ds, Join(split_c.out, "dataset.csv"));
      json counts;
      for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
        counts[ToString(s)] = {{"trajectories", ds.CountTrajectories(s)},
                               {"pairs", ds.Pairs(s).size()}};
      }
      WriteJson(counts, Join(split_c.out, "split.json"));
      std::printf("%s\n", counts.dump().c_str());
    };
  });

  // train
  Common tr_c;
  std::string tr_data;
  TrainConfig tr_cfg;
  auto* train = app.add_subcommand("train", "train the policy network");
  AddCommon(train, &tr_c, "runs/train", true);
  train->add_option("--data", tr_data, "split dataset CSV")->required();
  train->add_option("--epochs", tr_cfg.epochs, "epochs")->capture_default_str();
  train->add_option("--minibatch", tr_cfg.minibatch, "minibatch size")->capture_default_str();
  train->add_option("--lr", tr_cfg.lr0, "initial learning rate")->capture_default_str();
  train->add_option("--patience", tr_cfg.patience, "epochs before decay")->capture_default_str();
  train->add_flag("--verbose", tr_cfg.verbose, "per-epoch progress on stderr");
  train->callback([&] {
    action = [&] {
      Prepare(&tr_c);
      tr_cfg.seed = tr_c.seed;
      WriteManifest(tr_c, "train",
                    {{"data", tr_data},
                     {"epochs", tr_cfg.epochs},
                     {"minibatch", tr_cfg.minibatch},
                     {"lr", tr_cfg.lr0},
                     {"patience", tr_cfg.patience},
                     {"decay", tr_cfg.decay},
                     {"lr_floor", tr_cfg.lr_floor}},
                    args);
      const Dataset ds = LoadDataset(tr_data);
      TrainReport rep;
      const MlpParams net = Train(InitMlp(tr_c.seed), ds, tr_cfg, &rep);
      SaveMlp(net, Join(tr_c.out, "net.json"));
      auto out = OpenForWrite(Join(tr_c.out, "train_report.json"));
      out << rep.ToJson() << "\n";
      auto log = OpenForWrite(Join(tr_c.out, "train_log.csv"));
      log << "epoch,train_loss,val_loss,lr\n";
      for (const auto& e : rep.epochs)
        log << e.epoch << "," << FormatDouble(e.train_loss) << "," << FormatDouble(e.val_loss)
            << "," << FormatDouble(e.lr) << "\n";
      std::printf("best epoch %d  test MAE u1 %.4f u2 %.4f\n", rep.best_epoch, rep.test_mae[0],
                  rep.test_mae[1]);
    };
  });

  // eval
  Common ev_c;
  std::string ev_net, ev_data, ev_split = "test";
  auto* eval = app.add_subcommand("eval", "per-output MAE of a network on a split");
  AddCommon(eval, &ev_c, "runs/eval");
  eval->add_option("--net", ev_net, "network JSON")->required();
  eval->add_option("--data", ev_data, "split dataset CSV")->required();
  eval->add_option("--split", ev_split, "train|val|test")->capture_default_str();
  eval->callback([&] {
    action = [&] {
      Split s;
      try {
        s = SplitFromString(ev_split);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      Prepare(&ev_c);
      WriteManifest(ev_c, "eval", {{"net", ev_net}, {"data", ev_data}, {"split", ev_split}},
                    args);
      const auto mae = EvaluateMae(LoadMlp(ev_net), LoadDataset(ev_data).Pairs(s));
      WriteJson({{"split", ev_split}, {"mae_u1", mae[0]}, {"mae_u2", mae[1]}},
                Join(ev_c.out, "eval.json"));
      std::printf("MAE u1 %.5f u2 %.5f\n", mae[0], mae[1]);
    };
  });

  // sim gcnet / diffgc
  auto* sim = app.add_subcommand("sim", "closed-loop flights")->require_subcommand(1);
  SimConfig sim_cfg;
  sim_cfg.horizon = 10.0;
  auto add_sim = [&](CLI::App* a) {
    a->add_option("--dt", sim_cfg.dt, "control/integration step [s]")->capture_default_str();
    a->add_option("--horizon", sim_cfg.horizon, "simulated time [s]")->capture_default_str();
    a->add_option("--pos-tol", sim_cfg.arrival.pos_tol, "arrival radius [m]")
        ->capture_default_str();
    a->add_option("--speed-tol", sim_cfg.arrival.speed_tol, "arrival speed [m/s]")
        ->capture_default_str();
    a->add_option("--hold", sim_cfg.arrival.hold, "arrival hold [s]")->capture_default_str();
  };
  auto sim_json = [&] {
    return json{{"dt", sim_cfg.dt},
                {"tau", sim_cfg.tau},
                {"horizon", sim_cfg.horizon},
                {"pos_tol", sim_cfg.arrival.pos_tol},
                {"speed_tol", sim_cfg.arrival.speed_tol},
                {"hold", sim_cfg.arrival.hold}};
  };
  auto summary = [](const SimResult& r, const Target& t) {
    json j = {{"diverged", r.diverged},
              {"final_state", StateJson(r.final_state)},
              {"final_pos_err", PositionError(r.final_state, t)}};
    j["arrival_time"] = r.arrival_time ? json(*r.arrival_time) : json();
    return j;
  };

  Common sg_c;
  std::string sg_net, sg_x0 = "0,2.5,0,0,0,0", sg_target = "5,2.5";
  auto* sim_g = sim->add_subcommand("gcnet", "fly the network");
  AddCommon(sim_g, &sg_c, "runs/sim_gcnet");
  sim_g->add_option("--net", sg_net, "network JSON")->required();
  sim_g->add_option("--x0", sg_x0, "initial state")->capture_default_str();
  sim_g->add_option("--target", sg_target, "target x,z")->capture_default_str();
  sim_g->add_option("--tau", sim_cfg.tau, "actuation delay [s]")->capture_default_str();
  add_sim(sim_g);
  sim_g->callback([&] {
    action = [&] {
      const PlanarState x0 = ParseState(sg_x0, "--x0");
      const Target tgt = ParseTarget(sg_target, "--target");
      Prepare(&sg_c);
      json cfg = sim_json();
      cfg["net"] = sg_net;
      cfg["x0"] = StateJson(x0);
      cfg["target"] = {tgt.x, tgt.z};
      WriteManifest(sg_c, "sim gcnet", cfg, args);
      const SimResult r = SimulateGcnet(LoadMlp(sg_net), x0, tgt, sim_cfg, sg_c.params);
      WriteSimCsv(r, Join(sg_c.out, "sim.csv"));
      WriteJson(summary(r, tgt), Join(sg_c.out, "summary.json"));
      std::printf("%s\n", summary(r, tgt).dump().c_str());
    };
  });

  Common sd_c;
  std::string sd_start = "0,2.5", sd_target = "5,2.5";
  double sd_step = 0.05, sd_tf_init = 0.0;
  TrackingGains sd_gains;
  auto* sim_d = sim->add_subcommand("diffgc", "plan a min-time min-snap path and track it");
  AddCommon(sim_d, &sd_c, "runs/sim_diffgc");
  sim_d->add_option("--start", sd_start, "start x,z (at rest)")->capture_default_str();
  sim_d->add_option("--target", sd_target, "target x,z (at rest)")->capture_default_str();
  sim_d->add_option("--dt-step", sd_step, "min-time search decrement [s]")->capture_default_str();
  sim_d->add_option("--tf-init", sd_tf_init, "search start [s] (0: heuristic)")
      ->capture_default_str();
  sim_d->add_option("--kp", sd_gains.kp, "position gain")->capture_default_str();
  sim_d->add_option("--kd", sd_gains.kd, "velocity gain")->capture_default_str();
  sim_d->add_option("--ki", sd_gains.ki, "integral gain")->capture_default_str();
  add_sim(sim_d);
  sim_d->callback([&] {
    action = [&] {
      const Target a = ParseTarget(sd_start, "--start");
      const Target b = ParseTarget(sd_target, "--target");
      Prepare(&sd_c);
      json cfg = sim_json();
      cfg["start"] = {a.x, a.z};
      cfg["target"] = {b.x, b.z};
      cfg["dt_step"] = sd_step;
      cfg["tf_init"] = sd_tf_init;
      cfg["gains"] = {{"kp", sd_gains.kp}, {"kd", sd_gains.kd}, {"ki", sd_gains.ki},
                      {"k_theta", sd_gains.k_theta}, {"k_q", sd_gains.k_q}};
      WriteManifest(sd_c, "sim diffgc", cfg, args);
      const MinTimeResult mt =
          sd_tf_init > 0.0
              ? MinTimeSearch(RestAt(a.x, a.z), RestAt(b.x, b.z), sd_c.params, sd_step, sd_tf_init)
              : MinTimeSearchAuto(RestAt(a.x, a.z), RestAt(b.x, b.z), sd_c.params, sd_step);
      auto out = OpenForWrite(Join(sd_c.out, "trajectory.json"));
      out << PolyToJson(mt.traj) << "\n";
      const SimResult r = SimulateDiffgc(mt.traj, sd_c.params, sd_gains, sim_cfg);
      WriteSimCsv(r, Join(sd_c.out, "sim.csv"));
      json s = summary(r, b);
      s["tf_plan"] = mt.tf;
      WriteJson(s, Join(sd_c.out, "summary.json"));
      std::printf("%s\n", s.dump().c_str());
    };
  });

  // stability
  Common st_c;
  std::string st_net;
  double st_lo = 0.0, st_hi = 0.2;
  StabilityTest st_test;
  auto* stab = app.add_subcommand("stability", "hover delay margin by bisection");
  AddCommon(stab, &st_c, "runs/stability");
  stab->add_option("--net", st_net, "network JSON")->required();
  stab->add_option("--tau-lo", st_lo, "stable bracket end [s]")->capture_default_str();
  stab->add_option("--tau-hi", st_hi, "unstable bracket end [s]")->capture_default_str();
  stab->add_option("--duration", st_test.duration, "hover test length [s]")
      ->capture_default_str();
  stab->add_option("--max-excursion", st_test.max_excursion, "allowed excursion [m]")
      ->capture_default_str();
  stab->callback([&] {
    action = [&] {
      Prepare(&st_c);
      WriteManifest(st_c, "stability",
                    {{"net", st_net},
                     {"tau_lo", st_lo},
                     {"tau_hi", st_hi},
                     {"duration", st_test.duration},
                     {"max_excursion", st_test.max_excursion},
                     {"dt", st_test.dt}},
                    args);
      const StabilityReport rep = StabilityMargin(LoadMlp(st_net), st_c.params, st_lo, st_hi,
                                                  st_test);
      auto out = OpenForWrite(Join(st_c.out, "stability.json"));
      out << rep.ToJson() << "\n";
      std::printf("tau_s = %.1f ms\n", rep.tau_s * 1000.0);
    };
  });

  // compare grid / flights
  auto* compare = app.add_subcommand("compare", "network vs min-snap baseline")
                      ->require_subcommand(1);
  BenchmarkSpec bspec;
  auto add_grid = [&](CLI::App* a) {
    a->add_option("--nx", bspec.nx, "targets along x")->capture_default_str();
    a->add_option("--nz", bspec.nz, "targets along z")->capture_default_str();
    a->add_option("--x-min", bspec.x_lo, "lowest target x")->capture_default_str();
    a->add_option("--x-max", bspec.x_hi, "highest target x")->capture_default_str();
    a->add_option("--z-min", bspec.z_lo, "lowest target z")->capture_default_str();
    a->add_option("--z-max", bspec.z_hi, "highest target z")->capture_default_str();
    a->add_option("--horizon", bspec.sim.horizon, "flight time limit [s]")->capture_default_str();
    a->add_option("--dt-step", bspec.dt_step, "min-time search decrement [s]")
        ->capture_default_str();
  };
  auto grid_json = [&] {
    return json{{"start", {bspec.start.x, bspec.start.z}},
                {"x", {bspec.x_lo, bspec.x_hi, bspec.nx}},
                {"z", {bspec.z_lo, bspec.z_hi, bspec.nz}},
                {"horizon", bspec.sim.horizon},
                {"dt", bspec.sim.dt},
                {"dt_step", bspec.dt_step}};
  };

  Common cg_c;
  std::string cg_net;
  auto* cgrid = compare->add_subcommand("grid", "arrival-time advantage over a target grid");
  AddCommon(cgrid, &cg_c, "runs/grid", true, true);
  cgrid->add_option("--net", cg_net, "network JSON")->required();
  add_grid(cgrid);
  cgrid->callback([&] {
    action = [&] {
      Prepare(&cg_c);
      bspec.workers = cg_c.workers;
      json cfg = grid_json();
      cfg["net"] = cg_net;
      WriteManifest(cg_c, "compare grid", cfg, args);
      const auto grid = SigmaGrid(bspec, LoadMlp(cg_net), cg_c.params);
      EmitReport(grid, Join(cg_c.out, "grid.csv"), Join(cg_c.out, "summary.json"));
      std::printf("%s\n", SummaryToJson(Summarize(grid), grid).c_str());
    };
  });

  Common cf_c;
  std::string cf_net, cf_target = "5,2.5";
  double cf_eps = 0.2;
  FlightCampaign camp;
  auto* cflights = compare->add_subcommand("flights", "repeated perturbed flights, both controllers");
  AddCommon(cflights, &cf_c, "runs/flights", true);
  cflights->add_option("--net", cf_net, "network JSON")->required();
  cflights->add_option("--eps", cf_eps, "epsilon the network was trained on")
      ->capture_default_str();
  cflights->add_option("--target", cf_target, "target x,z")->capture_default_str();
  cflights->add_option("--reps", camp.repetitions, "flights per controller")
      ->capture_default_str();
  cflights->add_option("--sigma-pos", camp.sigma_pos, "start position noise [m]")
      ->capture_default_str();
  cflights->add_option("--sigma-vel", camp.sigma_vel, "start velocity noise [m/s]")
      ->capture_default_str();
  cflights->callback([&] {
    action = [&] {
      camp.target = ParseTarget(cf_target, "--target");
      Prepare(&cf_c);
      camp.seed = cf_c.seed;
      WriteManifest(cf_c, "compare flights",
                    {{"net", cf_net},
                     {"eps", cf_eps},
                     {"target", {camp.target.x, camp.target.z}},
                     {"reps", camp.repetitions},
                     {"sigma_pos", camp.sigma_pos},
                     {"sigma_vel", camp.sigma_vel}},
                    args);
      const CampaignResult r = RunCampaign(camp, LoadMlp(cf_net), cf_eps, cf_c.params);
      auto out = OpenForWrite(Join(cf_c.out, "metrics.json"));
      out << MetricsToJson(r) << "\n";
      std::printf("%s\n", MetricsToJson(r).c_str());
    };
  });

  // figures
  auto* figures = app.add_subcommand("figures", "plot-ready data for the standard figures")
                      ->require_subcommand(1);
  Common f2_c;
  std::string f2_net, f2_x0 = "-5,-2.5,0,0,0,0", f2_taus = "0,0.018,0.036";
  SimConfig f2_cfg;
  double f2_eps = 0.2;
  auto* fig2 = figures->add_subcommand("fig2", "delay sweep of the network");
  AddCommon(fig2, &f2_c, "runs/fig2");
  fig2->add_option("--net", f2_net, "network JSON")->required();
  fig2->add_option("--x0", f2_x0, "initial state relative to the target")->capture_default_str();
  fig2->add_option("--taus", f2_taus, "delays [s]")->capture_default_str();
  fig2->add_option("--eps", f2_eps, "epsilon of the optimal reference (sets the terminal phase)")
      ->capture_default_str();
  fig2->add_option("--horizon", f2_cfg.horizon, "simulated time [s]")->capture_default_str();
  fig2->callback([&] {
    action = [&] {
      const PlanarState x0 = ParseState(f2_x0, "--x0");
      const auto taus = ParseList(f2_taus, 0, "--taus");
      Prepare(&f2_c);
      WriteManifest(f2_c, "figures fig2",
                    {{"net", f2_net}, {"x0", StateJson(x0)}, {"taus", taus}, {"eps", f2_eps},
                     {"horizon", f2_cfg.horizon}, {"dt", f2_cfg.dt}},
                    args);
      OcpSolution ref;
      if (!SolveDraw(x0, f2_eps, f2_c.params, GenerationOptions{}, &ref))
        throw std::runtime_error("optimal reference for --x0 did not converge");
      const DelaySweep sw = RunDelaySweep(LoadMlp(f2_net), x0, Target{}, taus, f2_cfg,
                                          f2_c.params, ref.tf);
      WriteDelaySweep(sw, f2_c.out);
      std::printf("optimal tf %.3f s\n", ref.tf);
      for (size_t i = 0; i < sw.runs.size(); ++i)
        std::printf("tau %.3f s  pitch deviation after tf %.3g rad\n", sw.taus[i],
                    TerminalPitchDeviation(sw.runs[i], ref.tf));
    };
  });

  Common f5_c;
  std::vector<std::string> f5_nets;
  auto* fig5 = figures->add_subcommand("fig5", "sigma grids, one per network");
  AddCommon(fig5, &f5_c, "runs/fig5", false, true);
  fig5->add_option("--net", f5_nets, "network JSON (repeatable)")->required();
  add_grid(fig5);
  fig5->callback([&] {
    action = [&] {
      Prepare(&f5_c);
      bspec.workers = f5_c.workers;
      json cfg = grid_json();
      cfg["nets"] = f5_nets;
      WriteManifest(f5_c, "figures fig5", cfg, args);
      json index = json::array();
      for (size_t i = 0; i < f5_nets.size(); ++i) {
        const auto grid = SigmaGrid(bspec, LoadMlp(f5_nets[i]), f5_c.params);
        const std::string stem = "grid_" + std::to_string(i);
        EmitReport(grid, Join(f5_c.out, stem + ".csv"), Join(f5_c.out, stem + ".json"));
        index.push_back({{"net", f5_nets[i]}, {"csv", stem + ".csv"}, {"summary", stem + ".json"}});
        std::printf("%s: %s\n", f5_nets[i].c_str(),
                    SummaryToJson(Summarize(grid), grid).c_str());
      }
      WriteJson(index, Join(f5_c.out, "index.json"));
    };
  });

  Common f6_c;
  std::string f6_net, f6_target = "5,2.5";
  double f6_eps = 0.2;
  auto* fig6 = figures->add_subcommand("fig6", "one-target trajectory overlay");
  AddCommon(fig6, &f6_c, "runs/fig6");
  fig6->add_option("--net", f6_net, "network JSON")->required();
  fig6->add_option("--eps", f6_eps, "epsilon of the optimal reference")->capture_default_str();
  fig6->add_option("--target", f6_target, "target x,z")->capture_default_str();
  fig6->callback([&] {
    action = [&] {
      const Target tgt = ParseTarget(f6_target, "--target");
      Prepare(&f6_c);
      json cfg = grid_json();
      cfg["net"] = f6_net;
      cfg["eps"] = f6_eps;
      cfg["target"] = {tgt.x, tgt.z};
      WriteManifest(f6_c, "figures fig6", cfg, args);
      CellRuns runs;
      const ComparisonCell cell = CompareCell(bspec, tgt, LoadMlp(f6_net), f6_c.params, &runs);
      WriteSimCsv(runs.gcnet, Join(f6_c.out, "gcnet.csv"));
      WriteSimCsv(runs.diffgc, Join(f6_c.out, "diffgc.csv"));
      auto out = OpenForWrite(Join(f6_c.out, "polynomial.json"));
      out << PolyToJson(runs.plan.traj) << "\n";
      PlanarState x0;
      x0.x = bspec.start.x - tgt.x;
      x0.z = bspec.start.z - tgt.z;
      OcpSolution sol;
      if (SolveDraw(x0, f6_eps, f6_c.params, GenerationOptions{}, &sol)) {
        for (auto& n : sol.nodes) {
          n.state.x += tgt.x;
          n.state.z += tgt.z;
        }
        WriteSolutionCsv(sol, Join(f6_c.out, "optimal.csv"));
      }
      WriteGridCsv({cell}, Join(f6_c.out, "cell.csv"));
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  try {
    if (action) action();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
