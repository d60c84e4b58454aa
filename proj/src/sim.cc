#include "eco/sim.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>

#include "eco/config.h"
#include "eco/errors.h"

namespace eco {

std::string_view ToString(ControllerMode mode) {
  switch (mode) {
    case ControllerMode::kEcoReceding: return "eco-acc-receding";
    case ControllerMode::kEcoGlobal: return "eco-acc-global";
    case ControllerMode::kAccOnly: return "acc-only";
  }
  return "unknown";
}

ControllerMode ControllerModeFromString(std::string_view name) {
  if (name == "eco-acc-receding" || name == "receding" || name == "eco-acc") {
    return ControllerMode::kEcoReceding;
  }
  if (name == "eco-acc-global" || name == "global") {
    return ControllerMode::kEcoGlobal;
  }
  if (name == "acc-only" || name == "acc") return ControllerMode::kAccOnly;
  throw Error(ErrorCode::kInvalidParams,
              "unknown controller mode " + std::string(name));
}

void SimConfig::Validate() const {
  if (!(control_period > 0.0) || control_period > replan_period) {
    throw Error(ErrorCode::kInvalidParams,
                "need 0 < control period <= replan period");
  }
  if (latency < 0.0 || latency > replan_period) {
    throw Error(ErrorCode::kInvalidParams,
                "planner latency must be within the replan period");
  }
  if (!(initial_soc > 0.0 && initial_soc <= 1.0) || initial_speed < 0.0) {
    throw Error(ErrorCode::kInvalidParams, "bad initial SOC or speed");
  }
  if (!(timeout > 0.0)) {
    throw Error(ErrorCode::kInvalidParams, "timeout must be positive");
  }
}

double PlantStep(PlantState* s, double wheel_torque, double grade,
                 const VehicleParams& vehicle, double dt) {
  double a = Acceleration(s->v, wheel_torque, grade, vehicle);
  if (s->v <= 0.0 && a <= 0.0) {
    // Standstill holds under braking or insufficient drive torque.
    s->v = 0.0;
    return 0.0;
  }
  const double v_next = s->v + a * dt;
  if (v_next < 0.0) {
    // Stops within the period: advance to the stopping point only.
    s->position += s->v * s->v / (2.0 * -a);
    s->v = 0.0;
    return a;
  }
  s->position += s->v * dt + 0.5 * a * dt * dt;
  s->v = v_next;
  return a;
}

double IdmEquilibriumGap(double v, const IdmParams& b) {
  const double free = 1.0 - std::pow(v / b.desired_speed, b.exponent);
  return (b.min_gap + v * b.time_headway) / std::sqrt(free);
}

LeadState LeadVehicleUpdate(const LeadState& lead, double dt,
                            const IdmParams& b,
                            const std::optional<LeadObservation>& leader,
                            std::optional<double> stop_line) {
  const double v = lead.v;
  double interaction = 0.0;
  auto add_obstacle = [&](double gap, double speed) {
    const double s = std::max(gap, 0.01);
    const double s_star =
        b.min_gap + std::max(0.0, v * b.time_headway +
                                      v * (v - speed) /
                                          (2.0 * std::sqrt(b.max_accel *
                                                           b.comfort_decel)));
    interaction = std::max(interaction, (s_star / s) * (s_star / s));
  };
  if (leader) add_obstacle(leader->gap, leader->speed);
  // The stop line is a standing obstacle placed min_gap beyond the line so
  // the lead halts at the line itself.
  if (stop_line) add_obstacle(*stop_line + b.min_gap, 0.0);
  double a = b.max_accel *
             (1.0 - std::pow(std::max(v, 0.0) / b.desired_speed, b.exponent) -
              interaction);
  a = std::clamp(a, -b.max_decel, b.max_accel);
  LeadState out = lead;
  if (v + a * dt < 0.0) {
    out.position += a < 0.0 ? v * v / (2.0 * -a) : 0.0;
    out.v = 0.0;
  } else {
    out.position += v * dt + 0.5 * a * dt * dt;
    out.v = v + a * dt;
  }
  return out;
}

namespace {

constexpr double kSensorRange = 150.0;  // m, lead detection range

int NextIntersection(const RouteSpec& route, double position) {
  for (std::size_t n = 0; n < route.intersections.size(); ++n) {
    if (route.intersection_position(n) >= position) return static_cast<int>(n);
  }
  return -1;
}

// Distance to a stop line the lead must respect, if any.
std::optional<double> LeadStopLine(const LeadState& lead, const IdmParams& b,
                                   const RouteSpec& route,
                                   const std::vector<SignalTiming>& signals,
                                   double t) {
  const int n = NextIntersection(route, lead.position + 1e-9);
  if (n < 0 || static_cast<std::size_t>(n) >= signals.size()) return std::nullopt;
  const double d = route.intersection_position(static_cast<std::size_t>(n)) -
                   lead.position;
  if (d > kSensorRange) return std::nullopt;
  const Phase phase = PhaseAt(signals[static_cast<std::size_t>(n)], t);
  if (phase == Phase::kGreen) return std::nullopt;
  if (phase == Phase::kYellow && lead.v * lead.v > b.max_decel * d) {
    return std::nullopt;  // too close to stop: proceed
  }
  return d;
}

struct Traffic {
  std::vector<LeadState> leads;
  std::vector<IdmParams> behavior;
  std::vector<bool> active;

  // Advances every active lead one period; index 0 is the farthest ahead.
  void Step(double t, double dt, const RouteSpec& route,
            const std::vector<SignalTiming>& signals) {
    std::vector<LeadState> next = leads;
    for (std::size_t q = 0; q < leads.size(); ++q) {
      if (!active[q]) continue;
      std::optional<LeadObservation> leader;
      for (std::size_t p = q; p-- > 0;) {
        if (!active[p]) continue;
        leader = LeadObservation{
            leads[p].position - behavior[p].length - leads[q].position,
            leads[p].v};
        break;
      }
      next[q] = LeadVehicleUpdate(
          leads[q], dt, behavior[q], leader,
          LeadStopLine(leads[q], behavior[q], route, signals, t));
    }
    leads = next;
  }

  std::optional<LeadObservation> Observe(double ego_position) const {
    // The nearest active lead ahead of the ego (leads never reorder).
    for (std::size_t q = leads.size(); q-- > 0;) {
      if (!active[q] || leads[q].position <= ego_position) continue;
      const double gap = leads[q].position - behavior[q].length - ego_position;
      if (gap > kSensorRange) return std::nullopt;
      return LeadObservation{gap, leads[q].v};
    }
    return std::nullopt;
  }
};

// Leads that entered before t = 0 are simulated up to t = 0 so the episode
// starts with them already ahead of the ego.
Traffic SpawnTraffic(const Scenario& scenario, const RouteSpec& route,
                     double dt) {
  std::vector<LeadSpawn> spawns = scenario.leads;
  std::stable_sort(spawns.begin(), spawns.end(),
                   [](const LeadSpawn& a, const LeadSpawn& b) {
                     return a.entry_time < b.entry_time;
                   });
  Traffic traffic;
  for (const auto& s : spawns) {
    traffic.leads.push_back({0.0, s.entry_speed});
    traffic.behavior.push_back(s.behavior);
    traffic.active.push_back(false);
  }
  if (spawns.empty()) return traffic;
  const long ticks =
      static_cast<long>(std::ceil(-spawns.front().entry_time / dt - 1e-9));
  for (long i = 0; i <= ticks; ++i) {
    const double t = (i - ticks) * dt;
    for (std::size_t q = 0; q < spawns.size(); ++q) {
      if (!traffic.active[q] && spawns[q].entry_time <= t + 1e-9) {
        traffic.active[q] = true;
        traffic.leads[q] = {0.0, spawns[q].entry_speed};
      }
    }
    if (i < ticks) traffic.Step(t, dt, route, scenario.signals);
  }
  return traffic;
}

std::string PhaseLetters(const std::vector<SignalTiming>& signals, double t) {
  std::string out;
  for (const auto& s : signals) {
    switch (PhaseAt(s, t)) {
      case Phase::kRed: out += 'R'; break;
      case Phase::kGreen: out += 'G'; break;
      case Phase::kYellow: out += 'Y'; break;
    }
  }
  return out;
}

// Realized split for a commanded wheel torque; reduces a positive demand the
// powertrain cannot meet at this SOC.
SplitEvaluation RealizeSplit(double v, double torque, double soc,
                             const PowertrainParams& pt,
                             const VehicleParams& vehicle, double* realized) {
  SplitEvaluation eval;
  double demand = torque;
  for (int attempt = 0; attempt < 60; ++attempt) {
    if (TryEcmsSplit(v, demand, soc, pt, vehicle, &eval)) {
      *realized = demand;
      return eval;
    }
    demand *= 0.9;
    if (std::abs(demand) < 1e-3) demand = 0.0;
  }
  if (!TryEcmsSplit(v, 0.0, soc, pt, vehicle, &eval)) {
    throw Error(ErrorCode::kInfeasibleDemand, "powertrain cannot idle");
  }
  *realized = 0.0;
  return eval;
}

struct PendingPolicy {
  std::shared_ptr<const PolicyMap> policy;  // null: fallback (brake to stop)
  long activation_tick = 0;
  int id = 0;
};

}  // namespace

SimTrace RunEpisode(const SimConfig& config, const Scenario& scenario,
                    const SimArtifacts& art) {
  config.Validate();
  const RouteSpec& route = *art.route;
  const VehicleParams& vehicle = *art.vehicle;
  const PowertrainParams& pt = *art.powertrain;
  const AccConfig& acc = *art.acc;
  if (scenario.signals.size() < route.intersections.size()) {
    throw Error(ErrorCode::kInvalidParams,
                "scenario lacks signal timings for some intersections");
  }
  const double dt = config.control_period;
  const long replan_ticks = std::max(1L, std::lround(config.replan_period / dt));
  const long latency_ticks = std::lround(config.latency / dt);
  const bool planned = config.mode != ControllerMode::kAccOnly;
  const bool global = config.mode == ControllerMode::kEcoGlobal;
  const PlannerConfig& pcfg = global ? *art.global_planner : *art.planner;
  const PlanContext ctx{&route, &vehicle, art.cost_map, &pcfg};
  std::unique_ptr<TerminalCostCache> own_cache;
  TerminalCostCache* cache = art.terminal_cache;
  if (planned && !global && cache == nullptr) {
    own_cache = std::make_unique<TerminalCostCache>(ctx, *art.hist);
    cache = own_cache.get();
  }

  SimTrace trace;
  trace.mode = config.mode;
  trace.seed = config.seed;
  PlantState ego{0.0, config.initial_speed, config.initial_soc};
  Traffic traffic = SpawnTraffic(scenario, route, dt);
  AccState acc_state;
  std::shared_ptr<const PolicyMap> active;
  bool active_fallback = false;
  int active_id = -1;
  std::optional<PendingPolicy> pending;
  int next_policy_id = 0;
  trace.totals.initial_soc = ego.soc;

  for (long tick = 0;; ++tick) {
    const double t = tick * dt;
    if (ego.position >= route.length) {
      trace.totals.travel_time = t;
      break;
    }
    if (t > config.timeout) {
      throw Error(ErrorCode::kTimeout,
                  "episode exceeded " + std::to_string(config.timeout) + " s");
    }
    const int next_light = NextIntersection(route, ego.position);

    if (planned && tick % replan_ticks == 0) {
      PendingPolicy p;
      p.id = next_policy_id++;
      const auto wall_start = std::chrono::steady_clock::now();
      const State state{ego.v, t};
      try {
        if (global) {
          const int n = HorizonSteps(route, pcfg, ego.position, route.length);
          const auto lights =
              ExactLights(route, ego.position, pcfg.step, n, scenario.signals);
          p.policy = std::make_shared<const PolicyMap>(
              SolveDp(ego.position, state, ego.soc, lights, nullptr, ctx, n,
                      pcfg.route_max_delay));
        } else {
          const int n = HorizonSteps(route, pcfg, ego.position, pcfg.horizon);
          const double end = ego.position + n * pcfg.step;
          std::shared_ptr<const TerminalCostTable> terminal;
          if (end < route.length - 1e-9) terminal = cache->Lookup(end, ego.soc);
          LiveSpat live;
          live.intersection = -1;
          if (next_light >= 0) {
            live = LiveSpatAt(scenario.signals[static_cast<std::size_t>(next_light)],
                              t, next_light);
          }
          const auto lights = RecedingLights(route, ego.position, pcfg.step, n,
                                             live, t, *art.hist);
          p.policy = std::make_shared<const PolicyMap>(
              SolveDp(ego.position, state, ego.soc, lights, terminal.get(), ctx,
                      n, pcfg.max_delay));
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoFeasiblePath) throw;
        p.policy = nullptr;
      }
      long delay = latency_ticks;
      if (config.measured_latency) {
        const double wall = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - wall_start)
                                .count();
        delay = static_cast<long>(std::ceil(wall / dt));
      }
      // The very first plan is available before the vehicle moves.
      p.activation_tick = tick == 0 ? 0 : tick + delay;
      trace.activations.push_back(
          {p.id, t, p.activation_tick, ego.position, p.policy == nullptr});
      pending = p;
    }
    if (pending && tick >= pending->activation_tick) {
      active = pending->policy;
      active_fallback = pending->policy == nullptr;
      active_id = pending->id;
      pending.reset();
    }

    const double limit = route.SpeedLimitAt(ego.position);
    double v_ref = limit;
    if (planned) {
      v_ref = 0.0;
      if (active && !active_fallback) {
        try {
          v_ref = QueryPolicy(*active, ego.position, ego.v, t, vehicle).v_ref;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kStalePolicyBeyondHorizon) throw;
        }
      }
      v_ref = std::min(v_ref, limit);
    }

    std::optional<LightObservation> light;
    if (next_light >= 0) {
      const auto live = LiveSpatAt(
          scenario.signals[static_cast<std::size_t>(next_light)], t, next_light);
      light = LightObservation{
          route.intersection_position(static_cast<std::size_t>(next_light)) -
              ego.position,
          live.phase, live.remaining};
    }
    const auto lead = traffic.Observe(ego.position);
    const double grade = route.GradeAt(ego.position);
    const WheelTorqueLimits limits = WheelLimits(ego.v, pt, vehicle);
    const AccOutput cmd = AccCommand(v_ref, ego.v, grade, lead, light, acc,
                                     vehicle, limits, dt, &acc_state);

    double realized = 0.0;
    const SplitEvaluation split =
        RealizeSplit(ego.v, cmd.torque, ego.soc, pt, vehicle, &realized);
    const double voc = pt.battery.open_circuit_voltage(ego.soc);
    const BatteryStepResult bat =
        BatteryStep(split.battery_power, ego.soc, pt.battery, dt);

    TraceRow row;
    row.tick = tick;
    row.time = t;
    row.position = ego.position;
    row.speed = ego.v;
    row.v_ref = v_ref;
    row.torque_cmd = cmd.torque;
    row.wheel_torque = realized;
    row.motor_torque = split.split.motor_torque;
    row.engine_torque = split.split.engine_torque;
    row.brake_torque = split.split.brake_torque;
    row.engine_on = split.split.engine_on;
    row.soc = ego.soc;
    row.fuel_power = split.fuel_power;
    row.elec_power = bat.elec_power;
    row.battery_power = split.battery_power;
    row.current = bat.current;
    if (lead) {
      row.lead_gap = lead->gap;
      row.lead_speed = lead->speed;
    }
    row.next_light = next_light;
    row.phases = PhaseLetters(scenario.signals, t);
    row.policy_id = active_id;

    row.accel = PlantStep(&ego, realized, grade, vehicle, dt);
    ego.soc = bat.soc;
    trace.totals.fuel_energy += split.fuel_power * dt;
    trace.totals.battery_energy += bat.elec_power * dt;
    trace.totals.battery_charge += bat.current * dt;
    trace.totals.oc_energy += voc * bat.current * dt;
    traffic.Step(t, dt, route, scenario.signals);
    trace.rows.push_back(row);

    MonitorSample sample;
    sample.time = (tick + 1) * dt;
    sample.position = ego.position;
    sample.speed = ego.v;
    sample.accel = row.accel;
    sample.lead = traffic.Observe(ego.position);
    for (const auto& v : SafetyMonitor(sample, route, scenario.signals, acc)) {
      trace.violations.push_back(v);
    }
  }
  trace.totals.distance = ego.position;
  trace.totals.final_soc = ego.soc;
  return trace;
}

const std::vector<std::string>& TraceColumns() {
  static const std::vector<std::string> kColumns{
      "tick",         "time",          "position",     "speed",
      "accel",        "v_ref",         "torque_cmd",   "wheel_torque",
      "motor_torque", "engine_torque", "brake_torque", "engine_on",
      "soc",          "fuel_power",    "elec_power",   "battery_power",
      "current",      "lead_gap",      "lead_speed",   "next_light",
      "phases",       "policy_id"};
  return kColumns;
}

void WriteTraceCsv(const SimTrace& trace, std::ostream& out) {
  const auto& cols = TraceColumns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out << (c ? "," : "") << cols[c];
  }
  out << "\n";
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out << buf << ',';
  };
  for (const auto& r : trace.rows) {
    out << r.tick << ',';
    num(r.time);
    num(r.position);
    num(r.speed);
    num(r.accel);
    num(r.v_ref);
    num(r.torque_cmd);
    num(r.wheel_torque);
    num(r.motor_torque);
    num(r.engine_torque);
    num(r.brake_torque);
    out << (r.engine_on ? 1 : 0) << ',';
    num(r.soc);
    num(r.fuel_power);
    num(r.elec_power);
    num(r.battery_power);
    num(r.current);
    num(r.lead_gap);
    num(r.lead_speed);
    out << r.next_light << ',' << r.phases << ',' << r.policy_id << "\n";
  }
}

void SaveScenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write scenario " + path);
  out << ToJson(scenario).dump(2) << "\n";
}

Scenario LoadScenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open scenario " + path);
  Scenario sc;
  try {
    FromJson(Json::parse(in), &sc);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIo, "malformed scenario " + path + ": " + e.what());
  }
  return sc;
}

}  // namespace eco
