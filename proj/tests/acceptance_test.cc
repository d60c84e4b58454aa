// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Closed-loop episodes are shared between criteria where the seeds
// coincide.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dp_oracle.h"
#include "eco/config.h"
#include "eco/errors.h"
#include "eco/eval.h"

namespace {

using eco::AppConfig;
using Clock = std::chrono::steady_clock;

constexpr double kInf = std::numeric_limits<double>::infinity();

int g_failures = 0;

void Report(bool pass, const char* name, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string Format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

std::vector<std::uint64_t> Seeds(int n) {
  std::vector<std::uint64_t> s(static_cast<std::size_t>(n));
  std::iota(s.begin(), s.end(), 1);
  return s;
}

// Artifacts for one planner profile; owns its terminal cache.
struct Runner {
  const AppConfig* config = nullptr;
  eco::SimArtifacts artifacts;
  std::unique_ptr<eco::TerminalCostCache> cache;

  Runner(const AppConfig& c, const eco::CostMap& map) : config(&c) {
    artifacts.route = &c.route;
    artifacts.vehicle = &c.vehicle;
    artifacts.powertrain = &c.powertrain;
    artifacts.cost_map = &map;
    artifacts.hist = &c.hist;
    artifacts.acc = &c.acc;
    artifacts.planner = &c.planner;
    artifacts.global_planner = &c.global_planner;
    cache = std::make_unique<eco::TerminalCostCache>(
        eco::PlanContext{&c.route, &c.vehicle, &map, &c.planner}, c.hist);
    artifacts.terminal_cache = cache.get();
  }

  eco::MonteCarloResult Batch(eco::ControllerMode mode, int n) const {
    eco::SimConfig sim = config->sim;
    sim.mode = mode;
    return eco::MonteCarlo(sim, artifacts, config->hist, config->traffic, Seeds(n));
  }

  std::string TraceCsv(eco::ControllerMode mode, std::uint64_t seed) const {
    eco::SimConfig sim = config->sim;
    sim.mode = mode;
    sim.seed = seed;
    std::ostringstream out;
    eco::WriteTraceCsv(
        eco::RunEpisode(sim, eco::SampleScenario(config->hist, config->traffic, seed),
                        artifacts),
        out);
    return out.str();
  }
};

// First `n` episodes of a batch sorted by seed.
eco::MonteCarloResult Head(const eco::MonteCarloResult& r, std::size_t n) {
  eco::MonteCarloResult out;
  out.episodes.assign(r.episodes.begin(),
                      r.episodes.begin() + std::min(n, r.episodes.size()));
  out.summary = eco::SummarizeEpisodes(out.episodes);
  return out;
}

void DpVersusOracle(const eco::CostMap& map) {
  const auto start = Clock::now();
  const eco::VehicleParams vehicle;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int instances = 0;
  int matched = 0;
  int anchors = 0;
  double worst = 0.0;
  // Draw until 24 instances have a finite anchor; all-infeasible instances
  // must still agree but are not counted.
  int trivial_mismatch = 0;
  for (int inst = 0; instances < 24 && inst < 500; ++inst) {
    const int steps = 4 + inst % 5;  // 4..8
    const double step = 25.0;
    const double length = steps * step;
    const int light_step = 1 + static_cast<int>(unit(rng) * (steps - 1));
    const eco::RouteSpec route =
        eco::RouteSpec::Uniform(length, 1.0, 15.0, {light_step * step});
    eco::PlannerConfig c;
    c.step = step;
    c.num_speeds = 5;
    c.num_times = 5;
    c.num_torques = 7;
    c.torque_min = -1500.0;
    c.torque_max = 1500.0;
    c.time_weight = 1000.0 + 9000.0 * unit(rng);
    c.desired_time = length / 9.0;
    c.max_delay = 20.0 + 30.0 * unit(rng);
    c.min_time_window = 10.0;
    c.corners = inst % 3 == 0 ? eco::CornerRule::kReject : eco::CornerRule::kRenormalize;
    eco::SignalTiming timing{40.0 + 50.0 * unit(rng), 0.0, 0.0, 0.0};
    timing.red = timing.cycle * (0.3 + 0.3 * unit(rng));
    timing.offset = timing.cycle * unit(rng);
    const double t0 = 10.0 * unit(rng);
    const double soc = 0.85 + 0.1 * unit(rng);
    const eco::PlanContext ctx{&route, &vehicle, &map, &c};
    const int n = eco::HorizonSteps(route, c, 0.0, length);
    const auto lights = eco::ExactLights(route, 0.0, step, n, {timing});
    eco::testing::DpOracle oracle(
        {ctx, 0.0, n, t0, c.max_delay, soc, lights, nullptr});
    bool ok = true;
    int compared = 0;
    for (int i = 0; i < c.num_speeds; ++i) {
      const double expected = oracle.Value(0, i, 0);
      double got = kInf;
      try {
        got = eco::SolveDp(0.0, eco::State{oracle.speeds().at(i), t0}, soc, lights,
                           nullptr, ctx, n, c.max_delay)
                  .AnchorValue();
      } catch (const eco::Error& e) {
        if (e.code() != eco::ErrorCode::kNoFeasiblePath) throw;
      }
      if (expected == kInf || got == kInf) {
        ok = ok && expected == got;
        continue;
      }
      ++compared;
      const double diff = std::abs(got - expected);
      worst = std::max(worst, diff);
      ok = ok && diff <= 1e-9;
    }
    anchors += compared;
    if (compared > 0) {
      ++instances;
      if (ok) ++matched;
    } else if (!ok) {
      ++trivial_mismatch;
    }
  }
  const double secs = Seconds(start);
  Report(instances >= 20 && matched == instances && trivial_mismatch == 0 &&
             secs < 10.0,
         "dp_vs_oracle",
         Format("%d/%d instances match (%d finite anchors), max |dV| %.3g, "
                "%d infeasibility disagreements, %.2f s",
                matched, instances, anchors, worst, trivial_mismatch, secs));
}

void CostMapStructure(const eco::CostMap& map) {
  const auto& g = map.grids();
  const int plane = map.SocPlane(0.92);
  double lowest = kInf;
  double engine_jump = 0.0;
  std::vector<double> jumps;
  auto visit = [&](int iv, int it, int jv, int jt) {
    if (!map.admissible(iv, it, plane) || !map.admissible(jv, jt, plane)) return;
    const double j = std::abs(map.cell(jv, jt, plane) - map.cell(iv, it, plane));
    jumps.push_back(j);
    if (map.engine_on(iv, it, plane) != map.engine_on(jv, jt, plane)) {
      engine_jump = std::max(engine_jump, j);
    }
  };
  for (int iv = 0; iv < g.speed.count; ++iv) {
    for (int it = 0; it < g.torque.count; ++it) {
      if (map.admissible(iv, it, plane)) lowest = std::min(lowest, map.cell(iv, it, plane));
      if (it + 1 < g.torque.count) visit(iv, it, iv, it + 1);
      if (iv + 1 < g.speed.count) visit(iv, it, iv + 1, it);
    }
  }
  std::nth_element(jumps.begin(), jumps.begin() + jumps.size() / 2, jumps.end());
  const double median = jumps[jumps.size() / 2];
  Report(lowest < 0.0 && engine_jump > 10.0 * median, "cost_map_structure",
         Format("min cell %.1f W, engine-on boundary jump %.1f W = %.1fx median %.2f W",
                lowest, engine_jump, engine_jump / median, median));
}

void BatteryIdentities(const AppConfig& c) {
  const eco::BatteryParams& b = c.powertrain.battery;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> power(-60000.0, 90000.0);
  std::uniform_real_distribution<double> soc(0.05, 0.95);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const double pb = power(rng);
    const auto out = eco::BatteryStep(pb, soc(rng), b, 0.2);
    const double rhs = pb + out.current * out.current * b.internal_resistance;
    worst = std::max(worst, std::abs(out.elec_power - rhs) / std::max(1.0, std::abs(rhs)));
  }
  bool zero_ok = true;
  for (double s : {0.05, 0.3, 0.92, 0.95}) {
    zero_ok = zero_ok && eco::BatteryStep(0.0, s, b, 1.0).soc == s;
  }
  Report(worst <= 1e-6 && zero_ok, "battery_identities",
         Format("max relative residual %.3g over 1000 draws; zero power keeps SOC: %s",
                worst, zero_ok ? "yes" : "no"));
}

void SolvePerformance(const AppConfig& c, const eco::CostMap& map) {
  const eco::PlannerConfig nominal;  // n_v 30, n_t 60, 101 torques, 1 m
  const eco::PlanContext ctx{&c.route, &c.vehicle, &map, &nominal};
  const int n = eco::HorizonSteps(c.route, nominal, 0.0, nominal.horizon);
  const auto live = eco::LiveSpatAt(eco::SignalTiming{60.0, 30.0, 3.0, 0.0}, 0.0, 0);
  const auto lights =
      eco::RecedingLights(c.route, 0.0, nominal.step, n, live, 0.0, c.hist);
  const auto start = Clock::now();
  const auto policy = eco::SolveDp(0.0, eco::State{10.0, 0.0}, 0.92, lights, nullptr,
                                   ctx, n, nominal.max_delay);
  const double secs = Seconds(start);
  Report(secs < 4.0, "solve_performance",
         Format("%d steps x %dx%d cells x %d torques in %.2f s (V0 %.4g)", n,
                nominal.num_speeds, nominal.num_times, nominal.num_torques, secs,
                policy.AnchorValue()));
}

void TerminalVariance(const AppConfig& c, const eco::CostMap& map) {
  const auto start = Clock::now();
  const eco::PlanContext ctx{&c.route, &c.vehicle, &map, &c.planner};
  const double position = 1700.0;  // tail with two lights
  const int reps = 100;
  std::vector<eco::TerminalCostTable> one;
  std::vector<eco::TerminalCostTable> sixteen;
  for (int r = 0; r < reps; ++r) {
    one.push_back(eco::TerminalCost(position, 0.92, c.hist, 1, 1000 + r, ctx));
    sixteen.push_back(eco::TerminalCost(position, 0.92, c.hist, 16, 5000 + r, ctx));
  }
  const std::size_t cells = one[0].values.size();
  std::vector<std::size_t> usable;
  for (std::size_t q = 0; q < cells; ++q) {
    bool finite = true;
    for (int r = 0; r < reps && finite; ++r) {
      finite = std::isfinite(one[r].values[q]) && std::isfinite(sixteen[r].values[q]);
    }
    if (finite) usable.push_back(q);
  }
  if (usable.size() < 50) {
    Report(false, "terminal_variance",
           Format("only %zu cells finite in every replication", usable.size()));
    return;
  }
  auto variance = [&](const std::vector<eco::TerminalCostTable>& t, std::size_t q) {
    double mean = 0.0;
    for (const auto& x : t) mean += x.values[q];
    mean /= reps;
    double ss = 0.0;
    for (const auto& x : t) ss += (x.values[q] - mean) * (x.values[q] - mean);
    return ss / (reps - 1);
  };
  // 50 cells spread evenly over the usable ones.
  double v1 = 0.0;
  double v16 = 0.0;
  for (int m = 0; m < 50; ++m) {
    const std::size_t q = usable[m * usable.size() / 50];
    v1 += variance(one, q) / 50.0;
    v16 += variance(sixteen, q) / 50.0;
  }
  const double ratio = v1 / v16;
  Report(ratio >= 8.0 && ratio <= 32.0, "terminal_variance",
         Format("mean variance M=1 %.4g, M=16 %.4g, ratio %.2f (%d replications, "
                "%zu usable cells, %.1f s)",
                v1, v16, ratio, reps, usable.size(), Seconds(start)));
}

std::string Counts(const eco::MonteCarloResult& r) {
  int red = 0;
  int gap = 0;
  int accel = 0;
  for (const auto& e : r.episodes) {
    red += e.red_violations;
    gap += e.gap_violations;
    accel += e.accel_violations;
  }
  return Format("%d episodes, %d failed, red %d, gap %d, accel %d",
                r.summary.episodes, r.summary.failed, red, gap, accel);
}

bool CleanRun(const eco::MonteCarloResult& r, int expected) {
  int red = 0;
  int gap = 0;
  for (const auto& e : r.episodes) {
    red += e.red_violations;
    gap += e.gap_violations;
  }
  return r.summary.episodes == expected && r.summary.failed == 0 && red == 0 &&
         gap == 0;
}

}  // namespace

int main() {
  try {
    const auto start = Clock::now();
    const AppConfig config = eco::DefaultConfig();
    const eco::CostMap map =
        eco::BuildCostMap(config.powertrain, config.vehicle, config.cost_map_grids);

    DpVersusOracle(map);
    CostMapStructure(map);
    BatteryIdentities(config);
    SolvePerformance(config, map);
    TerminalVariance(config, map);

    const Runner power(config, map);
    {
      const auto t = Clock::now();
      const std::string a = power.TraceCsv(eco::ControllerMode::kEcoReceding, 42);
      const std::string b = power.TraceCsv(eco::ControllerMode::kEcoReceding, 42);
      Report(!a.empty() && a == b, "determinism",
             Format("two receding runs of seed 42: %zu bytes each, identical: %s, %.1f s",
                    a.size(), a == b ? "yes" : "no", Seconds(t)));
    }

    auto t = Clock::now();
    const auto receding = power.Batch(eco::ControllerMode::kEcoReceding, 200);
    Report(CleanRun(receding, 200), "signal_compliance",
           Counts(receding) + Format(", %.0f s", Seconds(t)));

    t = Clock::now();
    const auto global = power.Batch(eco::ControllerMode::kEcoGlobal, 20);
    {
      const auto cmp = eco::Compare(global, Head(receding, 20));
      Report(cmp.pairs.size() >= 20 && cmp.mean_mpge_a > cmp.mean_mpge_b,
             "information_ordering",
             Format("%zu pairs, mean MPGe global %.2f vs receding %.2f (%+.2f%%), %.0f s",
                    cmp.pairs.size(), cmp.mean_mpge_a, cmp.mean_mpge_b, cmp.mpge_gain_pct,
                    Seconds(t)));
    }

    t = Clock::now();
    AppConfig wheel_config = config;
    wheel_config.planner.energy = eco::EnergyCost::kWheelEnergy;
    wheel_config.global_planner.energy = eco::EnergyCost::kWheelEnergy;
    const Runner wheel(wheel_config, map);
    const auto wheel_runs = wheel.Batch(eco::ControllerMode::kEcoReceding, 20);
    {
      const auto cmp = eco::Compare(Head(receding, 20), wheel_runs);
      double kwh_power = 0.0;
      double kwh_wheel = 0.0;
      int soc_higher = 0;
      for (const auto& p : cmp.pairs) {
        kwh_power += p.elec_kwh_a;
        kwh_wheel += p.elec_kwh_b;
        if (p.final_soc_a > p.final_soc_b) ++soc_higher;
      }
      const std::size_t n = cmp.pairs.size();
      Report(n >= 20 && kwh_power < kwh_wheel && soc_higher >= 0.8 * n,
             "cost_map_ordering",
             Format("%zu pairs, battery energy power-map %.4f kWh vs wheel %.4f kWh "
                    "(mean), final SOC higher in %d/%zu, %.0f s",
                    n, kwh_power / n, kwh_wheel / n, soc_higher, n, Seconds(t)));
    }

    t = Clock::now();
    const auto acc_only = power.Batch(eco::ControllerMode::kAccOnly, 30);
    {
      const auto cmp = eco::Compare(Head(receding, 30), acc_only);
      Report(cmp.pairs.size() >= 30 && cmp.mean_mpge_a > cmp.mean_mpge_b &&
                 cmp.mean_travel_time_a > cmp.mean_travel_time_b,
             "controller_ordering",
             Format("%zu pairs, MPGe eco %.2f vs acc-only %.2f (%+.2f%%), travel time "
                    "%.1f s vs %.1f s (%+.2f%%), %.1f s",
                    cmp.pairs.size(), cmp.mean_mpge_a, cmp.mean_mpge_b,
                    cmp.mpge_gain_pct, cmp.mean_travel_time_a, cmp.mean_travel_time_b,
                    cmp.travel_time_change_pct, Seconds(t)));
    }
    std::printf("info: auxiliary batches %s | %s | %s | %s\n", Counts(global).c_str(),
                Counts(wheel_runs).c_str(), Counts(acc_only).c_str(),
                Format("total %.0f s", Seconds(start)).c_str());
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance: %s\n", e.what());
    return 1;
  }
  std::printf("%s: %d criteria failed\n", g_failures == 0 ? "OK" : "NOT OK", g_failures);
  return g_failures == 0 ? 0 : 1;
}
