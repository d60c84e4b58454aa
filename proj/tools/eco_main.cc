// Command-line entry point: cost-map build, single solves, closed-loop
// episodes, Monte-Carlo batches and paired comparisons.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eco/config.h"
#include "eco/errors.h"
#include "eco/eval.h"
#include "eco/planner.h"
#include "eco/sim.h"

namespace {

namespace fs = std::filesystem;
using eco::Json;

struct CommonOptions {
  std::string config;
  std::string out_dir = ".";
  std::string cost_map;
  bool allow_violations = false;
};

void AddCommon(CLI::App* cmd, CommonOptions* o) {
  cmd->add_option("--config", o->config, "corridor config JSON");
  cmd->add_option("--out-dir", o->out_dir, "output directory");
  cmd->add_option("--cost-map", o->cost_map, "cost-map artifact path");
  cmd->add_flag("--allow-violations", o->allow_violations,
                "exit 0 even when the safety monitor fires");
}

eco::AppConfig Load(const CommonOptions& o) {
  eco::AppConfig c = o.config.empty() ? eco::DefaultConfig()
                                      : eco::LoadConfig(o.config);
  if (!o.cost_map.empty()) c.cost_map_path = o.cost_map;
  c.Validate();
  return c;
}

fs::path OutPath(const CommonOptions& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return fs::path(o.out_dir) / name;
}

void WriteJson(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw eco::Error(eco::ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

// Loads the cost map when its parameters match the config; otherwise builds
// it and stores it next to the other outputs.
eco::CostMap ObtainCostMap(const eco::AppConfig& c, const CommonOptions& o) {
  const auto hash = eco::CostMapParamsHash(c.powertrain, c.vehicle);
  if (fs::exists(c.cost_map_path)) {
    eco::CostMap map = eco::CostMap::Load(c.cost_map_path);
    if (map.params_hash() == hash) return map;
    std::cerr << "cost map " << c.cost_map_path
              << " was built for other parameters; rebuilding\n";
  }
  eco::CostMap map = eco::BuildCostMap(c.powertrain, c.vehicle, c.cost_map_grids);
  const fs::path path = OutPath(o, "costmap.bin");
  map.Save(path.string());
  std::cerr << "built cost map " << path.string() << "\n";
  return map;
}

struct Runtime {
  eco::AppConfig config;
  eco::CostMap cost_map;
  std::unique_ptr<eco::TerminalCostCache> cache;
  eco::SimArtifacts artifacts;

  explicit Runtime(const CommonOptions& o)
      : config(Load(o)), cost_map(ObtainCostMap(config, o)) {
    artifacts.route = &config.route;
    artifacts.vehicle = &config.vehicle;
    artifacts.powertrain = &config.powertrain;
    artifacts.cost_map = &cost_map;
    artifacts.hist = &config.hist;
    artifacts.acc = &config.acc;
    artifacts.planner = &config.planner;
    artifacts.global_planner = &config.global_planner;
    cache = std::make_unique<eco::TerminalCostCache>(
        eco::PlanContext{&config.route, &config.vehicle, &cost_map,
                         &config.planner},
        config.hist);
    artifacts.terminal_cache = cache.get();
  }
};

std::vector<std::uint64_t> Seeds(std::uint64_t first, int n) {
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
  std::iota(seeds.begin(), seeds.end(), first);
  return seeds;
}

int ExitCode(int violations, const CommonOptions& o) {
  if (violations > 0) {
    std::cerr << violations << " safety violation(s)\n";
    return o.allow_violations ? 0 : 3;
  }
  return 0;
}

int RunCostmapBuild(const CommonOptions& o, const std::string& out) {
  const eco::AppConfig c = Load(o);
  const eco::CostMap map =
      eco::BuildCostMap(c.powertrain, c.vehicle, c.cost_map_grids);
  fs::path path = out;
  if (out.empty()) {
    path = OutPath(o, "costmap.bin");
  } else if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  map.Save(path.string());
  int admissible = 0;
  const auto& g = map.grids();
  for (int s = 0; s < g.soc.count; ++s) {
    for (int v = 0; v < g.speed.count; ++v) {
      for (int t = 0; t < g.torque.count; ++t) admissible += map.admissible(v, t, s);
    }
  }
  std::cout << "cost map " << path.string() << " params "
            << eco::HashToHex(map.params_hash()) << " admissible cells "
            << admissible << "\n";
  return 0;
}

struct PlanOptions {
  std::string spat;
  double position = 0.0;
  double speed = 10.0;
  double time = 0.0;
  double soc = 0.92;
  bool global = false;
};

int RunPlan(const CommonOptions& o, const PlanOptions& p) {
  Runtime rt(o);
  const auto& c = rt.config;
  double position = p.position;
  double speed = p.speed;
  double time = p.time;
  double soc = p.soc;
  eco::LiveSpat live;
  live.intersection = -1;
  if (!p.spat.empty()) {
    std::ifstream in(p.spat);
    if (!in) throw eco::Error(eco::ErrorCode::kIo, "cannot open " + p.spat);
    const Json j = Json::parse(in);
    live.intersection = j.value("intersection", -1);
    live.phase = eco::PhaseFromString(j.value("phase", "green"));
    live.remaining = j.value("remaining", 0.0);
    position = j.value("position", position);
    speed = j.value("speed", speed);
    time = j.value("time", time);
    soc = j.value("soc", soc);
  }
  const eco::PlannerConfig& pc = p.global ? c.global_planner : c.planner;
  const eco::PlanContext ctx{&c.route, &c.vehicle, &rt.cost_map, &pc};
  const double horizon = p.global ? c.route.length : pc.horizon;
  const int n = eco::HorizonSteps(c.route, pc, position, horizon);
  std::vector<eco::LightConstraint> lights;
  std::shared_ptr<const eco::TerminalCostTable> terminal;
  if (p.global) {
    // Without realized signals, nominal timing with percentile reds.
    std::vector<eco::SignalTiming> signals;
    for (std::size_t k = 0; k < c.hist.intersections.size(); ++k) {
      signals.push_back(c.hist.NominalTiming(k, eco::EstimateRed(c.hist, k)));
    }
    lights = eco::ExactLights(c.route, position, pc.step, n, signals);
  } else {
    lights = eco::RecedingLights(c.route, position, pc.step, n, live, time, c.hist);
    const double end = position + n * pc.step;
    if (end < c.route.length - 1e-9) terminal = rt.cache->Lookup(end, soc);
  }
  const eco::PolicyMap policy =
      eco::SolveDp(position, eco::State{speed, time}, soc, lights,
                   terminal.get(), ctx, n,
                   p.global ? pc.route_max_delay : pc.max_delay);
  const auto traj = eco::RolloutPolicy(policy, ctx);

  std::ofstream csv(OutPath(o, "plan_trajectory.csv"));
  csv << "step,position,v,t,wheel_torque,stage_cost\n";
  csv.precision(17);
  for (const auto& pt : traj) {
    csv << pt.step << ',' << pt.position << ',' << pt.v << ',' << pt.t << ','
        << pt.torque << ',' << pt.stage_cost << "\n";
  }
  int feasible = 0;
  for (int k = 0; k < policy.num_steps; ++k) {
    for (int i = 0; i < policy.speeds.count; ++i) {
      for (int j = 0; j < policy.num_times; ++j) feasible += policy.feasible(k, i, j);
    }
  }
  const Json summary = {{"anchor_position", policy.anchor_position},
                        {"anchor_speed", policy.anchor_state.v},
                        {"anchor_time", policy.anchor_state.t},
                        {"anchor_soc", policy.anchor_soc},
                        {"num_steps", policy.num_steps},
                        {"step", policy.step},
                        {"speeds", policy.speeds.count},
                        {"times", policy.num_times},
                        {"feasible_cells", feasible},
                        {"lights", policy.lights.size()},
                        {"anchor_value", policy.AnchorValue()}};
  WriteJson(OutPath(o, "plan_summary.json"), summary);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

struct SimulateOptions {
  std::string mode;
  std::uint64_t seed = 1;
  std::string scenario_file;
  std::string trace_out;
};

int RunSimulate(const CommonOptions& o, const SimulateOptions& s) {
  Runtime rt(o);
  eco::SimConfig cfg = rt.config.sim;
  if (!s.mode.empty()) cfg.mode = eco::ControllerModeFromString(s.mode);
  cfg.seed = s.seed;
  const eco::Scenario scenario =
      s.scenario_file.empty()
          ? eco::SampleScenario(rt.config.hist, rt.config.traffic, s.seed)
          : eco::LoadScenario(s.scenario_file);
  eco::SaveScenario(scenario, OutPath(o, "scenario.json").string());
  const eco::SimTrace trace = eco::RunEpisode(cfg, scenario, rt.artifacts);
  const fs::path trace_path =
      s.trace_out.empty() ? OutPath(o, "trace.csv") : fs::path(s.trace_out);
  {
    std::ofstream out(trace_path);
    if (!out) {
      throw eco::Error(eco::ErrorCode::kIo, "cannot write " + trace_path.string());
    }
    eco::WriteTraceCsv(trace, out);
  }
  const eco::EpisodeMetrics m = eco::ComputeMetrics(trace);
  Json violations = Json::array();
  for (const auto& v : trace.violations) {
    violations.push_back({{"kind", std::string(eco::ToString(v.kind))},
                          {"time", v.time},
                          {"position", v.position},
                          {"intersection", v.intersection},
                          {"value", v.value}});
  }
  const Json summary = {{"seed", m.seed},
                        {"mode", m.mode},
                        {"mpge", m.mpge},
                        {"fuel_gal", m.fuel_gal},
                        {"elec_kwh", m.elec_kwh},
                        {"distance_mi", m.distance_mi},
                        {"travel_time", m.travel_time},
                        {"final_soc", m.final_soc},
                        {"red_violations", m.red_violations},
                        {"gap_violations", m.gap_violations},
                        {"accel_violations", m.accel_violations},
                        {"replans", trace.activations.size()}};
  Json full = summary;
  full["violations"] = violations;
  WriteJson(OutPath(o, "episode.json"), full);
  std::cout << summary.dump(2) << "\n";
  return ExitCode(m.violations(), o);
}

struct BatchOptions {
  int n = 10;
  std::string mode = "eco-acc-receding";
  std::string a = "eco-acc-receding";
  std::string b = "acc-only";
  std::uint64_t seed_start = 1;
};

eco::MonteCarloResult Batch(Runtime& rt, const std::string& mode,
                            const BatchOptions& b) {
  eco::SimConfig cfg = rt.config.sim;
  cfg.mode = eco::ControllerModeFromString(mode);
  return eco::MonteCarlo(cfg, rt.artifacts, rt.config.hist, rt.config.traffic,
                         Seeds(b.seed_start, b.n));
}

int RunMonteCarlo(const CommonOptions& o, const BatchOptions& b) {
  Runtime rt(o);
  const auto result = Batch(rt, b.mode, b);
  {
    std::ofstream csv(OutPath(o, "montecarlo_episodes.csv"));
    eco::WriteMetricsCsv(result.episodes, csv);
  }
  const Json summary = eco::SummaryJson(result.summary);
  WriteJson(OutPath(o, "montecarlo_summary.json"), summary);
  std::cout << summary.dump(2) << "\n";
  return ExitCode(result.summary.violations, o);
}

int RunCompare(const CommonOptions& o, const BatchOptions& b) {
  Runtime rt(o);
  const auto ra = Batch(rt, b.a, b);
  const auto rb = Batch(rt, b.b, b);
  const auto cmp = eco::Compare(ra, rb);
  {
    std::ofstream csv(OutPath(o, "compare_pairs.csv"));
    eco::WriteCompareCsv(cmp, csv);
  }
  Json summary = eco::CompareJson(cmp);
  summary["mode_a"] = b.a;
  summary["mode_b"] = b.b;
  WriteJson(OutPath(o, "compare_summary.json"), summary);
  std::cout << summary.dump(2) << "\n";
  return ExitCode(cmp.violations_a + cmp.violations_b, o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eco-driving planner and closed-loop simulator"};
  app.require_subcommand(1);

  CommonOptions costmap_opts;
  auto* costmap = app.add_subcommand("costmap", "cost-map artifact tools");
  auto* costmap_build = costmap->add_subcommand("build", "build the cost map");
  costmap->require_subcommand(1);
  AddCommon(costmap_build, &costmap_opts);
  std::string costmap_out;
  costmap_build->add_option("--params", costmap_opts.config,
                            "parameter JSON (same as --config)");
  costmap_build->add_option("--out", costmap_out,
                            "artifact path (default <out-dir>/costmap.bin)");

  CommonOptions plan_opts;
  PlanOptions plan;
  auto* plan_cmd = app.add_subcommand("plan", "one solve from a SPaT snapshot");
  AddCommon(plan_cmd, &plan_opts);
  plan_cmd->add_option("--spat", plan.spat, "live SPaT snapshot JSON");
  plan_cmd->add_option("--position", plan.position, "anchor position, m");
  plan_cmd->add_option("--speed", plan.speed, "anchor speed, m/s");
  plan_cmd->add_option("--time", plan.time, "anchor time, s");
  plan_cmd->add_option("--soc", plan.soc, "anchor state of charge");
  plan_cmd->add_flag("--global", plan.global, "solve to the destination");

  CommonOptions sim_opts;
  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "run one closed-loop episode");
  AddCommon(sim_cmd, &sim_opts);
  sim_cmd->add_option("--mode", sim.mode,
                      "eco-acc-receding | eco-acc-global | acc-only");
  sim_cmd->add_option("--seed", sim.seed, "scenario seed");
  sim_cmd->add_option("--scenario-file", sim.scenario_file, "scenario JSON");
  sim_cmd->add_option("--trace-out", sim.trace_out, "trace CSV path");

  CommonOptions mc_opts;
  BatchOptions mc;
  auto* mc_cmd = app.add_subcommand("montecarlo", "seeded batch of episodes");
  AddCommon(mc_cmd, &mc_opts);
  mc_cmd->add_option("--n", mc.n, "number of episodes")->check(CLI::PositiveNumber);
  mc_cmd->add_option("--mode", mc.mode, "controller mode");
  mc_cmd->add_option("--seed-start", mc.seed_start, "first seed");

  CommonOptions cmp_opts;
  BatchOptions cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "paired comparison of modes");
  AddCommon(cmp_cmd, &cmp_opts);
  cmp_cmd->add_option("--a", cmp.a, "mode A");
  cmp_cmd->add_option("--b", cmp.b, "mode B");
  cmp_cmd->add_option("--n", cmp.n, "number of shared seeds")
      ->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--seed-start", cmp.seed_start, "first seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (costmap_build->parsed()) return RunCostmapBuild(costmap_opts, costmap_out);
    if (plan_cmd->parsed()) return RunPlan(plan_opts, plan);
    if (sim_cmd->parsed()) return RunSimulate(sim_opts, sim);
    if (mc_cmd->parsed()) return RunMonteCarlo(mc_opts, mc);
    if (cmp_cmd->parsed()) return RunCompare(cmp_opts, cmp);
  } catch (const eco::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
