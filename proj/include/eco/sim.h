#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eco/acc.h"
#include "eco/cost_map.h"
#include "eco/planner.h"
#include "eco/powertrain.h"
#include "eco/signals.h"
#include "eco/vehicle_model.h"

namespace eco {

enum class ControllerMode { kEcoReceding, kEcoGlobal, kAccOnly };

std::string_view ToString(ControllerMode mode);
/// Accepts "eco-acc-receding", "eco-acc-global", "acc-only" (and the short
/// forms "receding", "global").
ControllerMode ControllerModeFromString(std::string_view name);

struct SimConfig {
  double control_period = 0.2;  // s
  double replan_period = 4.0;   // s
  double latency = 2.0;         // s, modeled planner compute time
  bool measured_latency = false;  // use wall-clock solve time instead
  ControllerMode mode = ControllerMode::kEcoReceding;
  double initial_soc = 0.92;
  double initial_speed = 0.0;   // m/s
  std::uint64_t seed = 1;
  double timeout = 1200.0;      // s of simulated time

  void Validate() const;
};

/// Plant state of the ego vehicle in the time domain.
struct PlantState {
  double position = 0.0;
  double v = 0.0;
  double soc = 0.0;
};

/// Advances position and speed under wheel torque for `dt`; standstill is
/// absorbing under braking. Returns the acceleration actually applied.
double PlantStep(PlantState* state, double wheel_torque, double grade,
                 const VehicleParams& vehicle, double dt);

struct LeadState {
  double position = 0.0;  // front bumper
  double v = 0.0;
};

/// One IDM update. `leader` is the vehicle ahead; `stop_line` the distance to
/// a red (or stoppable yellow) light the lead must respect.
LeadState LeadVehicleUpdate(const LeadState& lead, double dt,
                            const IdmParams& behavior,
                            const std::optional<LeadObservation>& leader,
                            std::optional<double> stop_line);

/// Equilibrium IDM gap at speed v (desired speed above v).
double IdmEquilibriumGap(double v, const IdmParams& behavior);

/// Shared immutable inputs of an episode. `terminal_cache` is optional; one
/// is built per episode when null.
struct SimArtifacts {
  const RouteSpec* route = nullptr;
  const VehicleParams* vehicle = nullptr;
  const PowertrainParams* powertrain = nullptr;
  const CostMap* cost_map = nullptr;
  const HistoricalSpat* hist = nullptr;
  const AccConfig* acc = nullptr;
  const PlannerConfig* planner = nullptr;         // receding horizon
  const PlannerConfig* global_planner = nullptr;  // whole-route solves
  TerminalCostCache* terminal_cache = nullptr;
};

struct TraceRow {
  long tick = 0;
  double time = 0.0;
  double position = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double v_ref = 0.0;
  double torque_cmd = 0.0;
  double wheel_torque = 0.0;  // realized
  double motor_torque = 0.0;
  double engine_torque = 0.0;
  double brake_torque = 0.0;
  bool engine_on = false;
  double soc = 0.0;
  double fuel_power = 0.0;
  double elec_power = 0.0;
  double battery_power = 0.0;
  double current = 0.0;
  double lead_gap = -1.0;  // -1 when no lead
  double lead_speed = 0.0;
  int next_light = -1;
  std::string phases;  // one letter per intersection: R, G or Y
  int policy_id = -1;
};

struct PolicyActivation {
  int id = 0;
  double solve_time = 0.0;   // simulated time of the snapshot
  long activation_tick = 0;
  double anchor = 0.0;
  bool fallback = false;     // no feasible path: brake to a stop
};

struct EpisodeTotals {
  double fuel_energy = 0.0;     // J
  double battery_energy = 0.0;  // J, ∫P_elec dt
  double battery_charge = 0.0;  // C, ∫I_b dt
  double oc_energy = 0.0;       // J, ∫V_oc·I_b dt
  double travel_time = 0.0;     // s
  double distance = 0.0;        // m
  double initial_soc = 0.0;
  double final_soc = 0.0;
};

struct SimTrace {
  ControllerMode mode = ControllerMode::kEcoReceding;
  std::uint64_t seed = 0;
  std::vector<TraceRow> rows;
  std::vector<PolicyActivation> activations;
  std::vector<Violation> violations;
  EpisodeTotals totals;
};

/// Closed loop over simulated time. Throws Timeout past `config.timeout`.
SimTrace RunEpisode(const SimConfig& config, const Scenario& scenario,
                    const SimArtifacts& artifacts);

/// Column order of the trace CSV; stable.
const std::vector<std::string>& TraceColumns();
void WriteTraceCsv(const SimTrace& trace, std::ostream& out);

void SaveScenario(const Scenario& scenario, const std::string& path);
Scenario LoadScenario(const std::string& path);

}  // namespace eco
