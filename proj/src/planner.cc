#include "eco/planner.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "eco/errors.h"

namespace eco {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Discretized spatial lattice of one backward sweep.
struct Lattice {
  double origin = 0.0;  // position of step 0
  double step = 1.0;
  int num_steps = 0;
  UniformGrid speeds;
  int num_times = 0;
  std::vector<double> time_lo;     // k = 0..N
  std::vector<double> time_hi;
  std::vector<double> grade;       // k = 0..N-1
  std::vector<double> next_limit;  // speed limit at step k+1
  CornerRule corners = CornerRule::kRenormalize;

  UniformGrid TimeGrid(int k) const {
    return UniformGrid{time_lo[static_cast<std::size_t>(k)],
                       time_hi[static_cast<std::size_t>(k)], num_times};
  }
  std::size_t Index(int k, int i, int j) const {
    return (static_cast<std::size_t>(k) * speeds.count + i) * num_times + j;
  }
};

// One admissible (speed node, torque) transition; independent of time.
struct Transition {
  double torque = 0.0;
  double cost = 0.0;
  double dt = 0.0;
  int iv = 0;
  double fv = 0.0;
};

struct StageTable {
  std::vector<std::vector<Transition>> by_speed;  // candidate order kept
  std::vector<double> lowest_torque;              // per speed node
};

std::vector<double> CandidatesByMagnitude(const PlannerConfig& config) {
  std::vector<double> c = config.TorqueCandidates();
  std::stable_sort(c.begin(), c.end(), [](double a, double b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
    return a < b;
  });
  return c;
}

StageTable BuildStageTable(const Lattice& lat, double grade, double next_limit,
                           int plane, const std::vector<double>& candidates,
                           const PlanContext& ctx) {
  const PlannerConfig& cfg = *ctx.config;
  StageTable table;
  table.by_speed.resize(static_cast<std::size_t>(lat.speeds.count));
  table.lowest_torque.assign(static_cast<std::size_t>(lat.speeds.count),
                             cfg.torque_min);
  std::vector<double> starts;
  for (int i = 0; i < lat.speeds.count; ++i) {
    const double v = lat.speeds.at(i);
    double lowest = kInf;
    for (double torque : candidates) {
      const double a = Acceleration(v, torque, grade, *ctx.vehicle);
      if (!AccelBoundsCheck(a, cfg.accel)) continue;
      double g = 0.0;
      if (!ctx.cost_map->TryLookup(v, torque, plane, &g)) continue;
      lowest = std::min(lowest, torque);
      State next;
      if (!TryPlannerStep(State{v, 0.0}, torque, lat.step, cfg.integration_step,
                          grade, *ctx.vehicle, cfg.speed_floor, &next,
                          &starts)) {
        continue;
      }
      if (next.v > next_limit + 1e-9) continue;
      Transition tr;
      if (!lat.speeds.Locate(next.v, &tr.iv, &tr.fv)) continue;
      tr.torque = torque;
      tr.dt = next.t;
      const double ds = lat.step / static_cast<double>(starts.size());
      bool inside = true;
      for (double u : starts) {
        double e = 0.0;
        if (cfg.energy == EnergyCost::kPowerMap) {
          if (!ctx.cost_map->TryLookup(u, torque, plane, &e)) {
            inside = false;
            break;
          }
          e *= ds;
        } else {
          e = WheelEnergyCost(u, torque, *ctx.vehicle, ds);
        }
        tr.cost += e + cfg.time_weight * ds / u;
      }
      if (!inside) continue;
      table.by_speed[static_cast<std::size_t>(i)].push_back(tr);
    }
    if (lowest < kInf) table.lowest_torque[static_cast<std::size_t>(i)] = lowest;
  }
  return table;
}

// Bilinear interpolation of one value slice; +inf corners are handled per
// `rule`.
double InterpolateSlice(const double* slice, int num_speeds, int num_times,
                        int iv, double fv, int jt, double ft, CornerRule rule) {
  const int iv1 = std::min(iv + 1, num_speeds - 1);
  const int jt1 = std::min(jt + 1, num_times - 1);
  const double w[4] = {(1 - fv) * (1 - ft), (1 - fv) * ft, fv * (1 - ft),
                       fv * ft};
  const double c[4] = {slice[iv * num_times + jt], slice[iv * num_times + jt1],
                       slice[iv1 * num_times + jt], slice[iv1 * num_times + jt1]};
  if (fv == 0.0 && ft == 0.0) return c[0];
  double sum = 0.0;
  double weight = 0.0;
  for (int q = 0; q < 4; ++q) {
    if (w[q] == 0.0) continue;
    if (c[q] == kInf) {
      if (rule == CornerRule::kReject) return kInf;
      continue;
    }
    sum += w[q] * c[q];
    weight += w[q];
  }
  if (weight == 0.0) return kInf;
  return rule == CornerRule::kReject ? sum : sum / weight;
}

// Backward induction from the values already stored at step N down to
// `k_begin`. `torque` may be null when the policy is not needed.
void Backward(const Lattice& lat, const std::vector<LightConstraint>& lights,
              int plane, int k_begin, const PlanContext& ctx,
              std::vector<double>* value, std::vector<double>* torque) {
  const int nv = lat.speeds.count;
  const int nt = lat.num_times;
  const std::vector<double> candidates = CandidatesByMagnitude(*ctx.config);
  std::vector<std::vector<const LightConstraint*>> at_step(
      static_cast<std::size_t>(lat.num_steps) + 1);
  for (const auto& l : lights) {
    if (l.step >= 1 && l.step <= lat.num_steps) {
      at_step[static_cast<std::size_t>(l.step)].push_back(&l);
    }
  }

  StageTable table;
  double table_grade = std::numeric_limits<double>::quiet_NaN();
  double table_limit = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> best(static_cast<std::size_t>(nt));
  std::vector<double> best_torque(static_cast<std::size_t>(nt));

  for (int k = lat.num_steps - 1; k >= k_begin; --k) {
    const double grade = lat.grade[static_cast<std::size_t>(k)];
    const double limit = lat.next_limit[static_cast<std::size_t>(k)];
    if (grade != table_grade || limit != table_limit) {
      table = BuildStageTable(lat, grade, limit, plane, candidates, ctx);
      table_grade = grade;
      table_limit = limit;
    }
    const UniformGrid tk = lat.TimeGrid(k);
    const UniformGrid tn = lat.TimeGrid(k + 1);
    const double* next = value->data() + lat.Index(k + 1, 0, 0);
    const auto& step_lights = at_step[static_cast<std::size_t>(k + 1)];

    for (int i = 0; i < nv; ++i) {
      std::fill(best.begin(), best.end(), kInf);
      std::fill(best_torque.begin(), best_torque.end(),
                table.lowest_torque[static_cast<std::size_t>(i)]);
      for (const Transition& tr : table.by_speed[static_cast<std::size_t>(i)]) {
        for (int j = 0; j < nt; ++j) {
          const double arrival = tk.at(j) + tr.dt;
          bool blocked = false;
          for (const LightConstraint* l : step_lights) {
            if (l->Infeasible(arrival)) {
              blocked = true;
              break;
            }
          }
          if (blocked) continue;
          // Arrivals past the window edge are held at the edge; rejecting
          // them would erode the top time nodes one per step.
          int jt = 0;
          double ft = 0.0;
          if (!LocateOnAxis(std::clamp(arrival, tn.lo, tn.hi), tn.lo, tn.hi, nt,
                            &jt, &ft)) {
            continue;
          }
          const double tail =
              InterpolateSlice(next, nv, nt, tr.iv, tr.fv, jt, ft,
                               ctx.config->corners);
          if (tail == kInf) continue;
          const double total = tr.cost + tail;
          if (total < best[static_cast<std::size_t>(j)]) {
            best[static_cast<std::size_t>(j)] = total;
            best_torque[static_cast<std::size_t>(j)] = tr.torque;
          }
        }
      }
      std::copy(best.begin(), best.end(), value->begin() + lat.Index(k, i, 0));
      if (torque != nullptr) {
        std::copy(best_torque.begin(), best_torque.end(),
                  torque->begin() + lat.Index(k, i, 0));
      }
    }
  }
}

Lattice MakeLattice(const PlanContext& ctx, double origin, int num_steps,
                    double t0, double window_origin, double max_delay) {
  const PlannerConfig& cfg = *ctx.config;
  const RouteSpec& route = *ctx.route;
  Lattice lat;
  lat.origin = origin;
  lat.step = cfg.step;
  lat.num_steps = num_steps;
  lat.corners = cfg.corners;
  const double v_max = route.MaxSpeedLimit();
  lat.speeds = cfg.SpeedGrid(v_max);
  lat.num_times = cfg.num_times;
  lat.time_lo.resize(static_cast<std::size_t>(num_steps) + 1);
  lat.time_hi.resize(static_cast<std::size_t>(num_steps) + 1);
  for (int k = 0; k <= num_steps; ++k) {
    TimeWindow(cfg, v_max, t0, origin - window_origin + k * cfg.step, max_delay,
               &lat.time_lo[static_cast<std::size_t>(k)],
               &lat.time_hi[static_cast<std::size_t>(k)]);
  }
  lat.grade.resize(static_cast<std::size_t>(num_steps));
  lat.next_limit.resize(static_cast<std::size_t>(num_steps));
  for (int k = 0; k < num_steps; ++k) {
    lat.grade[static_cast<std::size_t>(k)] = route.GradeAt(origin + k * cfg.step);
    lat.next_limit[static_cast<std::size_t>(k)] =
        route.SpeedLimitAt(origin + (k + 1) * cfg.step);
  }
  return lat;
}

int NearestIndex(const UniformGrid& g, double x) {
  if (g.count <= 1) return 0;
  const long i = std::lround((x - g.lo) / g.step());
  return static_cast<int>(std::clamp<long>(i, 0, g.count - 1));
}

int StepOfPosition(double position, double origin, double step) {
  return static_cast<int>(std::ceil((position - origin) / step - 1e-9));
}

}  // namespace

void PlannerConfig::Validate() const {
  if (!(horizon > 0.0) || !(step > 0.0)) {
    throw Error(ErrorCode::kInvalidParams, "horizon and step must be positive");
  }
  if (num_speeds < 2 || num_times < 2 || num_torques < 1) {
    throw Error(ErrorCode::kInvalidParams,
                "need at least 2 speed and time nodes and 1 torque candidate");
  }
  if (time_weight < 0.0 || slack_weight < 0.0) {
    throw Error(ErrorCode::kInvalidParams, "weights must be non-negative");
  }
  if (terminal_scenarios < 1) {
    throw Error(ErrorCode::kInvalidParams, "need at least one terminal scenario");
  }
  if (!(average_speed > 0.0) || !(speed_floor > 0.0)) {
    throw Error(ErrorCode::kInvalidParams,
                "average speed and speed floor must be positive");
  }
  if (!(torque_min < torque_max) && num_torques > 1) {
    throw Error(ErrorCode::kInvalidParams, "torque range is empty");
  }
  if (!(integration_step > 0.0)) {
    throw Error(ErrorCode::kInvalidParams, "integration step must be positive");
  }
  if (!(max_delay > 0.0) || !(route_max_delay > 0.0) || min_time_window < 0.0) {
    throw Error(ErrorCode::kInvalidParams, "time window settings must be positive");
  }
  if (!(accel.min < 0.0 && accel.max > 0.0)) {
    throw Error(ErrorCode::kInvalidParams, "acceleration box must contain zero");
  }
}

std::vector<double> PlannerConfig::TorqueCandidates() const {
  if (num_torques == 1) return {torque_min};
  std::vector<double> out(static_cast<std::size_t>(num_torques));
  const double d = (torque_max - torque_min) / (num_torques - 1);
  for (int i = 0; i < num_torques; ++i) {
    out[static_cast<std::size_t>(i)] = torque_min + i * d;
  }
  out.back() = torque_max;
  return out;
}

SignalTiming FoldYellow(const SignalTiming& timing, double red_est,
                        double* folded_red) {
  SignalTiming out = timing;
  out.offset = CycleClock(0.0, timing.offset + timing.yellow, timing.cycle);
  out.red = std::min(red_est + timing.yellow, timing.cycle);
  out.yellow = 0.0;
  if (folded_red != nullptr) *folded_red = out.red;
  return out;
}

double TerminalCostTable::Evaluate(double v, double t) const {
  int iv = 0;
  double fv = 0.0;
  if (!speeds.Locate(v, &iv, &fv)) return kInf;
  int jt = 0;
  double ft = 0.0;
  if (times.count == 1) {
    jt = 0;
  } else {
    const double tc = std::clamp(t, times.lo, times.hi);
    times.Locate(tc, &jt, &ft);
  }
  if (times.count == 1) {
    const int iv1 = std::min(iv + 1, speeds.count - 1);
    const double a = at(iv, 0);
    const double b = at(iv1, 0);
    if (fv == 0.0) return a;
    if (a == kInf || b == kInf) {
      if (corners == CornerRule::kReject) return kInf;
      return fv < 1.0 && a < kInf ? a : b;
    }
    return (1 - fv) * a + fv * b;
  }
  return InterpolateSlice(values.data(), speeds.count, times.count, iv, fv, jt,
                          ft, corners);
}

bool PolicyMap::feasible(int k, int i, int j) const {
  return value[Index(k, i, j)] < kInf;
}

double PolicyMap::AnchorValue() const {
  return value[Index(0, NearestIndex(speeds, anchor_state.v), 0)];
}

bool TryPlannerStep(const State& state, double wheel_torque, double step,
                    double integration_step, double grade,
                    const VehicleParams& vehicle, double floor, State* next,
                    std::vector<double>* starts) {
  const int n = std::max(
      1, static_cast<int>(std::ceil(step / integration_step - 1e-9)));
  const double ds = step / n;
  if (starts != nullptr) starts->clear();
  State s = state;
  for (int q = 0; q < n; ++q) {
    if (starts != nullptr) starts->push_back(s.v);
    State after;
    if (!TryStep(s, wheel_torque, ds, grade, vehicle, floor, &after)) {
      return false;
    }
    s = after;
  }
  *next = s;
  return true;
}

double StageCost(double v, double wheel_torque, double soc, const CostMap& map,
                 double time_weight, double ds) {
  return CostLookup(map, v, wheel_torque, soc) * ds + time_weight * ds / v;
}

double WheelEnergyCost(double /*v*/, double wheel_torque,
                       const VehicleParams& vehicle, double ds) {
  return std::max(wheel_torque, 0.0) * ds / vehicle.wheel_radius;
}

double SlackCost(double t, double tau_h, double d, double d_h, double d_f,
                 double desired_time, double average_speed, double weight) {
  const double gamma =
      (d_f - (d + d_h)) - (desired_time - (t + tau_h)) * average_speed;
  return gamma > 0.0 ? weight * gamma * gamma : 0.0;
}

void TimeWindow(const PlannerConfig& config, double v_max, double t0,
                double distance, double max_delay, double* lo, double* hi) {
  *lo = t0 + distance / v_max;
  const double free = t0 + distance / config.speed_floor;
  double h = std::min({free, *lo + max_delay,
                       config.desired_time + config.time_margin});
  h = std::max(h, std::min(free, *lo + config.min_time_window));
  if (h - *lo < 1e-6) h = *lo + 1e-6;
  *hi = h;
}

std::vector<LightConstraint> RecedingLights(const RouteSpec& route,
                                            double anchor, double step,
                                            int num_steps, const LiveSpat& live,
                                            double snapshot_time,
                                            const HistoricalSpat& hist) {
  std::vector<LightConstraint> out;
  for (std::size_t n = 0; n < route.intersections.size(); ++n) {
    const double p = route.intersection_position(n);
    if (p <= anchor) continue;
    const int k = StepOfPosition(p, anchor, step);
    if (k < 1 || k > num_steps) continue;
    LightConstraint c;
    c.intersection = static_cast<int>(n);
    c.step = k;
    const double red_est = EstimateRed(hist, n);
    const SignalTiming nominal = hist.NominalTiming(n, red_est);
    if (live.intersection == static_cast<int>(n)) {
      // Live SPaT carries the true remaining time; yellow is no-pass, so the
      // upcoming no-pass window after red or green spans red + yellow.
      c.use_live = true;
      c.live = live;
      c.live_origin = snapshot_time;
      c.timing = nominal;
      c.red_est = live.phase == Phase::kYellow ? red_est : red_est + nominal.yellow;
    } else {
      c.timing = FoldYellow(nominal, red_est, &c.red_est);
    }
    out.push_back(c);
  }
  return out;
}

std::vector<LightConstraint> ExactLights(const RouteSpec& route, double anchor,
                                         double step, int num_steps,
                                         const std::vector<SignalTiming>& signals) {
  std::vector<LightConstraint> out;
  for (std::size_t n = 0; n < route.intersections.size() && n < signals.size();
       ++n) {
    const double p = route.intersection_position(n);
    if (p <= anchor) continue;
    const int k = StepOfPosition(p, anchor, step);
    if (k < 1 || k > num_steps) continue;
    LightConstraint c;
    c.intersection = static_cast<int>(n);
    c.step = k;
    c.timing = FoldYellow(signals[n], signals[n].red, &c.red_est);
    out.push_back(c);
  }
  return out;
}

namespace {

bool NearestFeasible(const PolicyMap& policy, int k, double v, double t,
                     int* best_i, int* best_j) {
  const UniformGrid tg = policy.TimeGrid(k);
  const double sv = policy.speeds.step();
  const double st = tg.step();
  const double uv = sv > 0.0 ? (v - policy.speeds.lo) / sv : 0.0;
  const double ut = st > 0.0 ? (t - tg.lo) / st : 0.0;
  double best = kInf;
  for (int i = 0; i < policy.speeds.count; ++i) {
    for (int j = 0; j < policy.num_times; ++j) {
      if (!policy.feasible(k, i, j)) continue;
      const double d = (i - uv) * (i - uv) + (j - ut) * (j - ut);
      // Strict comparison in (i, j) order breaks ties toward lower v, then t.
      if (d < best) {
        best = d;
        *best_i = i;
        *best_j = j;
      }
    }
  }
  return best < kInf;
}

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::vector<Scenario> SampleTerminalScenarios(const HistoricalSpat& hist,
                                              int count, std::uint64_t seed) {
  std::vector<Scenario> out;
  for (int j = 0; j < count; ++j) {
    out.push_back(SampleSignalScenario(
        hist, SplitMix64(seed ^ (static_cast<std::uint64_t>(j) << 32))));
  }
  return out;
}

Lattice RouteLattice(const PlanContext& ctx) {
  const int n = HorizonSteps(*ctx.route, *ctx.config, 0.0, ctx.route->length);
  return MakeLattice(ctx, 0.0, n, 0.0, 0.0, ctx.config->route_max_delay);
}

// Cost-to-go to the destination under one scenario's exact signals, for
// steps k_begin..N of the route lattice.
std::vector<double> SweepScenario(const Lattice& lat, const Scenario& scenario,
                                  int plane, int k_begin,
                                  const PlanContext& ctx) {
  const PlannerConfig& cfg = *ctx.config;
  const int nv = lat.speeds.count;
  const int nt = lat.num_times;
  std::vector<double> value(lat.Index(lat.num_steps + 1, 0, 0), kInf);
  const UniformGrid tf = lat.TimeGrid(lat.num_steps);
  const double d_f = ctx.route->length;
  for (int i = 0; i < nv; ++i) {
    for (int j = 0; j < nt; ++j) {
      value[lat.Index(lat.num_steps, i, j)] =
          SlackCost(tf.at(j), 0.0, d_f, 0.0, d_f, cfg.desired_time,
                    cfg.average_speed, cfg.slack_weight);
    }
  }
  const auto lights = ExactLights(*ctx.route, lat.origin, lat.step,
                                  lat.num_steps, scenario.signals);
  Backward(lat, lights, plane, k_begin, ctx, &value, nullptr);
  return value;
}

void Accumulate(const std::vector<double>& value, std::size_t begin,
                std::size_t end, std::vector<double>* sum,
                std::vector<int>* count) {
  for (std::size_t q = begin; q < end; ++q) {
    if (value[q] < kInf) {
      (*sum)[q] += value[q];
      ++(*count)[q];
    }
  }
}

TerminalCostTable MakeTable(const Lattice& lat, int k, int plane,
                            const std::vector<double>& sum,
                            const std::vector<int>& count) {
  TerminalCostTable table;
  table.position = lat.origin + k * lat.step;
  table.soc_plane = plane;
  table.corners = lat.corners;
  table.speeds = lat.speeds;
  table.times = lat.TimeGrid(k);
  const std::size_t begin = lat.Index(k, 0, 0);
  const std::size_t n = static_cast<std::size_t>(lat.speeds.count) * lat.num_times;
  table.values.resize(n);
  for (std::size_t q = 0; q < n; ++q) {
    const int c = count[begin + q];
    table.values[q] = c > 0 ? sum[begin + q] / c : kInf;
  }
  return table;
}

}  // namespace

PolicyMap SolveDp(double anchor_position, const State& state, double soc,
                  const std::vector<LightConstraint>& lights,
                  const TerminalCostTable* terminal, const PlanContext& ctx,
                  int num_steps, double max_delay) {
  const PlannerConfig& cfg = *ctx.config;
  if (num_steps < 1) {
    throw Error(ErrorCode::kInvalidParams, "solve needs at least one step");
  }
  const Lattice lat =
      MakeLattice(ctx, anchor_position, num_steps, state.t, anchor_position,
                  max_delay);
  const int plane = ctx.cost_map->SocPlane(soc);
  const int nv = lat.speeds.count;
  const int nt = lat.num_times;

  PolicyMap policy;
  policy.value.assign(lat.Index(num_steps + 1, 0, 0), kInf);
  policy.torque.assign(lat.Index(num_steps, 0, 0), cfg.torque_min);
  const UniformGrid tf = lat.TimeGrid(num_steps);
  const double d_h = num_steps * cfg.step;
  for (int i = 0; i < nv; ++i) {
    for (int j = 0; j < nt; ++j) {
      const double v = lat.speeds.at(i);
      const double t = tf.at(j);
      const double tail = terminal != nullptr ? terminal->Evaluate(v, t) : 0.0;
      policy.value[lat.Index(num_steps, i, j)] =
          tail + SlackCost(t, 0.0, anchor_position, d_h, ctx.route->length,
                           cfg.desired_time, cfg.average_speed,
                           cfg.slack_weight);
    }
  }
  Backward(lat, lights, plane, 0, ctx, &policy.value, &policy.torque);

  policy.anchor_position = anchor_position;
  policy.anchor_state = state;
  policy.anchor_soc = soc;
  policy.soc_plane = plane;
  policy.step = cfg.step;
  policy.num_steps = num_steps;
  policy.speeds = lat.speeds;
  policy.time_lo = lat.time_lo;
  policy.time_hi = lat.time_hi;
  policy.num_times = nt;
  policy.grade = lat.grade;
  policy.lights = lights;
  policy.speed_floor = cfg.speed_floor;
  policy.integration_step = cfg.integration_step;
  if (!(policy.AnchorValue() < kInf)) {
    throw Error(ErrorCode::kNoFeasiblePath,
                "anchor cell has no feasible continuation");
  }
  return policy;
}

int HorizonSteps(const RouteSpec& route, const PlannerConfig& config,
                 double anchor, double horizon) {
  const double d = std::min(horizon, route.length - anchor);
  const int n = static_cast<int>(std::ceil(d / config.step - 1e-9));
  return std::max(n, 1);
}

PolicyQuery QueryPolicy(const PolicyMap& policy, double position, double v,
                        double t, const VehicleParams& vehicle) {
  const double slack = 1e-9 * std::max(1.0, std::abs(policy.end_position()));
  if (position < policy.anchor_position - slack ||
      position > policy.end_position() + slack) {
    throw Error(ErrorCode::kStalePolicyBeyondHorizon,
                "query position outside the active policy horizon");
  }
  const long k_raw =
      std::lround((position - policy.anchor_position) / policy.step);
  const int k = static_cast<int>(std::clamp<long>(k_raw, 0, policy.num_steps - 1));
  PolicyQuery out;
  int i = 0;
  int j = 0;
  if (!NearestFeasible(policy, k, v, t, &i, &j)) {
    // No feasible cell: maximum braking, no speed to track.
    out.torque = policy.torque[policy.Index(k, NearestIndex(policy.speeds, v),
                                            0)];
    out.v_ref = 0.0;
    return out;
  }
  out.torque = policy.torque[policy.Index(k, i, j)];
  State next;
  if (TryPlannerStep(State{std::max(v, policy.speed_floor), t}, out.torque,
                     policy.step, policy.integration_step,
                     policy.grade[static_cast<std::size_t>(k)], vehicle, 0.0,
                     &next)) {
    out.v_ref = std::min(next.v, policy.speeds.hi);
  }
  return out;
}

std::vector<PlannedPoint> RolloutPolicy(const PolicyMap& policy,
                                        const PlanContext& ctx) {
  const PlannerConfig& cfg = *ctx.config;
  std::vector<PlannedPoint> out;
  State s{std::max(policy.anchor_state.v, policy.speed_floor),
          policy.anchor_state.t};
  for (int k = 0; k < policy.num_steps; ++k) {
    int i = 0;
    int j = 0;
    if (!NearestFeasible(policy, k, s.v, s.t, &i, &j)) break;
    PlannedPoint p;
    p.step = k;
    p.position = policy.anchor_position + k * policy.step;
    p.v = s.v;
    p.t = s.t;
    p.torque = policy.torque[policy.Index(k, i, j)];
    State next;
    std::vector<double> starts;
    const bool ok = TryPlannerStep(
        s, p.torque, policy.step, policy.integration_step,
        policy.grade[static_cast<std::size_t>(k)], *ctx.vehicle,
        policy.speed_floor, &next, &starts);
    const double ds = policy.step / static_cast<double>(starts.size());
    p.stage_cost = 0.0;
    for (double u : starts) {
      double g = std::numeric_limits<double>::quiet_NaN();
      if (cfg.energy == EnergyCost::kWheelEnergy) {
        g = WheelEnergyCost(u, p.torque, *ctx.vehicle, ds);
      } else if (ctx.cost_map->TryLookup(u, p.torque, policy.soc_plane, &g)) {
        g *= ds;
      }
      p.stage_cost += g + cfg.time_weight * ds / u;
    }
    out.push_back(p);
    if (!ok) return out;
    s = next;
  }
  PlannedPoint last;
  last.step = policy.num_steps;
  last.position = policy.end_position();
  last.v = s.v;
  last.t = s.t;
  out.push_back(last);
  return out;
}

TerminalCostTable TerminalCost(double position, double soc,
                               const std::vector<Scenario>& scenarios,
                               const PlanContext& ctx) {
  const Lattice lat = RouteLattice(ctx);
  const int k = static_cast<int>(std::clamp<long>(
      std::lround(position / lat.step), 0, lat.num_steps));
  const int plane = ctx.cost_map->SocPlane(soc);
  const std::size_t n = lat.Index(lat.num_steps + 1, 0, 0);
  std::vector<double> sum(n, 0.0);
  std::vector<int> count(n, 0);
  for (const Scenario& sc : scenarios) {
    const auto value = SweepScenario(lat, sc, plane, k, ctx);
    Accumulate(value, lat.Index(k, 0, 0), lat.Index(k + 1, 0, 0), &sum, &count);
  }
  return MakeTable(lat, k, plane, sum, count);
}

TerminalCostTable TerminalCost(double position, double soc,
                               const HistoricalSpat& hist, int num_scenarios,
                               std::uint64_t seed, const PlanContext& ctx) {
  return TerminalCost(position, soc,
                      SampleTerminalScenarios(hist, num_scenarios, seed), ctx);
}

TerminalCostCache::TerminalCostCache(PlanContext ctx, const HistoricalSpat& hist)
    : ctx_(ctx),
      scenarios_(SampleTerminalScenarios(hist, ctx.config->terminal_scenarios,
                                         ctx.config->terminal_seed)),
      fields_(static_cast<std::size_t>(ctx.cost_map->grids().soc.count)) {}

std::shared_ptr<const TerminalCostTable> TerminalCostCache::Lookup(
    double position, double soc) {
  const int plane = ctx_.cost_map->SocPlane(soc);
  auto& field = fields_[static_cast<std::size_t>(plane)];
  if (!field) {
    const Lattice lat = RouteLattice(ctx_);
    const std::size_t n = lat.Index(lat.num_steps + 1, 0, 0);
    std::vector<double> sum(n, 0.0);
    std::vector<int> count(n, 0);
    for (const Scenario& sc : scenarios_) {
      Accumulate(SweepScenario(lat, sc, plane, 0, ctx_), 0, n, &sum, &count);
    }
    Field f;
    for (int k = 0; k <= lat.num_steps; ++k) {
      f.tables.push_back(std::make_shared<const TerminalCostTable>(
          MakeTable(lat, k, plane, sum, count)));
    }
    field = std::move(f);
  }
  const int last = static_cast<int>(field->tables.size()) - 1;
  const long k = std::clamp<long>(std::lround(position / ctx_.config->step), 0,
                                  last);
  return field->tables[static_cast<std::size_t>(k)];
}

}  // namespace eco
