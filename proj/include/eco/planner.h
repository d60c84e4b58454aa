#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "eco/cost_map.h"
#include "eco/interp.h"
#include "eco/signals.h"
#include "eco/vehicle_model.h"

namespace eco {

/// Energy term of the stage cost.
enum class EnergyCost {
  kPowerMap,     // precomputed powertrain cost map (W per meter-step)
  kWheelEnergy,  // positive wheel work only, no regeneration credit (J)
};

/// Treatment of infeasible (+inf) corners when interpolating a value slice.
/// kReject refuses any transition that touches one with positive weight;
/// kRenormalize averages over the finite corners and rejects only when none
/// carries weight.
enum class CornerRule { kReject, kRenormalize };

struct PlannerConfig {
  double horizon = 400.0;  // d_H, m
  double step = 1.0;       // planner position step, m
  double speed_floor = kDefaultSpeedFloor;
  int num_speeds = 30;
  int num_times = 60;
  int num_torques = 101;
  double torque_min = -3000.0;  // N·m, candidate grid end points
  double torque_max = 3000.0;
  double time_weight = 40000.0;  // λ, W-equivalent per s
  double slack_weight = 5.0;     // β
  double desired_time = 300.0;   // t_f^D, s (whole route)
  double average_speed = 9.0;    // v̂_avg, m/s
  int terminal_scenarios = 8;    // M
  std::uint64_t terminal_seed = 7919;
  double max_delay = 120.0;      // s, time window beyond free-flow arrival
  double route_max_delay = 250.0;  // s, same for whole-route sweeps
  double time_margin = 150.0;    // s, grid cap = desired_time + margin
  double min_time_window = 20.0; // s, window kept open when the cap binds
  double integration_step = 1.0; // m, sub-step of the spatial model
  AccelLimits accel;
  EnergyCost energy = EnergyCost::kPowerMap;
  CornerRule corners = CornerRule::kRenormalize;

  void Validate() const;
  UniformGrid SpeedGrid(double v_max) const {
    return UniformGrid{speed_floor, v_max, num_speeds};
  }
  std::vector<double> TorqueCandidates() const;
};

/// Shared immutable inputs of a solve.
struct PlanContext {
  const RouteSpec* route = nullptr;
  const VehicleParams* vehicle = nullptr;
  const CostMap* cost_map = nullptr;
  const PlannerConfig* config = nullptr;
};

/// How one light constrains arrivals at a given planner step.
struct LightConstraint {
  int intersection = 0;
  int step = 0;          // planner step index whose arrival time is checked
  bool use_live = false;
  LiveSpat live;         // valid when use_live
  double live_origin = 0.0;  // absolute time of the live snapshot
  SignalTiming timing;   // yellow already folded into red/offset
  double red_est = 0.0;

  bool Infeasible(double arrival) const {
    return use_live ? InfeasibleFirst(arrival - live_origin, live, timing, red_est)
                    : InfeasibleDownstream(arrival, timing, red_est);
  }
};

/// Treats yellow as no-pass: shifts the cycle clock so red + yellow form one
/// contiguous window at the start of the cycle.
SignalTiming FoldYellow(const SignalTiming& timing, double red_est,
                        double* folded_red);

/// Terminal cost over (v, t) at one position; +inf marks infeasible cells.
struct TerminalCostTable {
  double position = 0.0;
  int soc_plane = 0;
  UniformGrid speeds;
  UniformGrid times;
  std::vector<double> values;  // [speed][time]
  CornerRule corners = CornerRule::kRenormalize;

  double at(int i, int j) const {
    return values[static_cast<std::size_t>(i) * times.count + j];
  }
  /// Bilinear in (v, t); t is clamped to the table window. +inf if any corner
  /// with positive weight is infeasible or v is outside the grid.
  double Evaluate(double v, double t) const;
};

/// Optimal wheel-torque policy over the horizon of one solve.
struct PolicyMap {
  double anchor_position = 0.0;
  State anchor_state;
  double anchor_soc = 0.0;
  int soc_plane = 0;
  double step = 1.0;
  int num_steps = 0;  // N
  UniformGrid speeds;
  std::vector<double> time_lo;  // per step 0..N
  std::vector<double> time_hi;
  int num_times = 0;
  std::vector<double> grade;   // per step 0..N-1
  std::vector<double> torque;  // [k][i][j], k < N
  std::vector<double> value;   // [k][i][j], k <= N, +inf when infeasible
  std::vector<LightConstraint> lights;
  double speed_floor = kDefaultSpeedFloor;
  double integration_step = 1.0;

  UniformGrid TimeGrid(int k) const {
    return UniformGrid{time_lo[static_cast<std::size_t>(k)],
                       time_hi[static_cast<std::size_t>(k)], num_times};
  }
  std::size_t Index(int k, int i, int j) const {
    return (static_cast<std::size_t>(k) * speeds.count + i) * num_times + j;
  }
  bool feasible(int k, int i, int j) const;
  double end_position() const { return anchor_position + num_steps * step; }
  /// Value at the anchor cell (nearest speed node, first time node).
  double AnchorValue() const;
};

/// One planner step of length `step` as equal sub-steps of at most
/// `integration_step`, torque held throughout. `starts`, when given, receives
/// the speed at the start of every sub-step. False when any sub-step fails.
bool TryPlannerStep(const State& state, double wheel_torque, double step,
                    double integration_step, double grade,
                    const VehicleParams& vehicle, double floor, State* next,
                    std::vector<double>* starts = nullptr);

/// h = g_c*(v, T_w; SOC)·(ds / 1 m) + λ·ds / v. Throws OutOfHull.
double StageCost(double v, double wheel_torque, double soc, const CostMap& map,
                 double time_weight, double ds = 1.0);

/// Positive wheel work over one step: max(T_w, 0)·ds / R_w.
double WheelEnergyCost(double v, double wheel_torque,
                       const VehicleParams& vehicle, double ds = 1.0);

/// Lateness penalty β·γ² with γ the distance shortfall against the average
/// speed schedule; zero when early.
double SlackCost(double t, double tau_h, double d, double d_h, double d_f,
                 double desired_time, double average_speed, double weight);

/// Time-grid window [lo, hi] at `distance` meters past an anchor at time t0:
/// free-flow arrival up to `max_delay` later, capped by the desired route time
/// plus margin (the cap never closes the window below `min_time_window`).
void TimeWindow(const PlannerConfig& config, double v_max, double t0,
                double distance, double max_delay, double* lo, double* hi);

/// Light constraints for a receding solve: live SPaT for the first upcoming
/// light, η-percentile estimates with nominal offsets for the others.
std::vector<LightConstraint> RecedingLights(const RouteSpec& route,
                                            double anchor, double step,
                                            int num_steps, const LiveSpat& live,
                                            double snapshot_time,
                                            const HistoricalSpat& hist);

/// Light constraints with exact timing for every light.
std::vector<LightConstraint> ExactLights(const RouteSpec& route, double anchor,
                                         double step, int num_steps,
                                         const std::vector<SignalTiming>& signals);

/// Backward induction over the (v, t) grid from `anchor_position`.
/// `terminal` may be null (zero tail cost). Adds the lateness penalty at the
/// horizon end. Throws NoFeasiblePath when the anchor cell is infeasible.
PolicyMap SolveDp(double anchor_position, const State& state, double soc,
                  const std::vector<LightConstraint>& lights,
                  const TerminalCostTable* terminal, const PlanContext& ctx,
                  int num_steps, double max_delay);

/// Number of planner steps for a horizon starting at `anchor`, truncated at
/// the destination.
int HorizonSteps(const RouteSpec& route, const PlannerConfig& config,
                 double anchor, double horizon);

struct PolicyQuery {
  double torque = 0.0;
  double v_ref = 0.0;
};

/// Nearest-feasible-cell lookup. Throws StalePolicyBeyondHorizon when
/// `position` lies outside [anchor, anchor + horizon].
PolicyQuery QueryPolicy(const PolicyMap& policy, double position, double v,
                        double t, const VehicleParams& vehicle);

struct PlannedPoint {
  int step = 0;
  double position = 0.0;
  double v = 0.0;
  double t = 0.0;
  double torque = 0.0;
  double stage_cost = 0.0;
};

/// Forward rollout of the policy from its anchor with the exact dynamics.
std::vector<PlannedPoint> RolloutPolicy(const PolicyMap& policy,
                                        const PlanContext& ctx);

/// Expected tail cost at `position`: mean over scenarios of the optimal
/// cost-to-go to the destination under each scenario's exact signals, with
/// the lateness penalty at the destination. Scenario values that are
/// infeasible are left out of the mean; cells infeasible everywhere are +inf.
TerminalCostTable TerminalCost(double position, double soc,
                               const std::vector<Scenario>& scenarios,
                               const PlanContext& ctx);

/// Same with M scenarios sampled from the history.
TerminalCostTable TerminalCost(double position, double soc,
                               const HistoricalSpat& hist, int num_scenarios,
                               std::uint64_t seed, const PlanContext& ctx);

/// Terminal tables for every lattice position of the route, built with one
/// backward sweep per scenario and cached per SOC plane. Lattice spacing is
/// the planner step.
class TerminalCostCache {
 public:
  TerminalCostCache(PlanContext ctx, const HistoricalSpat& hist);

  /// Table at the lattice position nearest to `position`.
  std::shared_ptr<const TerminalCostTable> Lookup(double position, double soc);

 private:
  struct Field {
    std::vector<std::shared_ptr<const TerminalCostTable>> tables;
  };
  PlanContext ctx_;
  std::vector<Scenario> scenarios_;
  std::vector<std::optional<Field>> fields_;  // by SOC plane
};

}  // namespace eco
