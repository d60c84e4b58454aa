#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eco/powertrain.h"
#include "eco/signals.h"
#include "eco/vehicle_model.h"

namespace eco {

struct AccConfig {
  double kp = 1.0;               // 1/s, on velocity error
  double ki = 0.05;              // 1/s^2
  double integral_limit = 5.0;   // m, anti-windup bound on the error integral
  AccelLimits tracking;          // clip of the tracking acceleration
  double min_gap = 3.0;          // g_min, m
  double time_headway = 1.5;     // h_t, s
  double gap_gain = 0.25;        // 1/s^2
  double gap_speed_gain = 0.6;   // 1/s
  double gap_margin = 1.0;       // m kept beyond g_min by the kinematic term
  double comfort_decel = 3.0;    // m/s^2
  double max_decel = 7.5;        // m/s^2, emergency braking
  double stop_tolerance = 0.5;   // m short of the stop line
  double approach_decel = 0.5;   // m/s^2, creep law near the stop line
  double box_length = 12.0;      // m, stop line to far edge incl. vehicle
  double physical_decel = 9.0;   // m/s^2, monitor bound
  double physical_accel = 4.0;   // m/s^2, monitor bound

  void Validate() const;
};

struct LeadObservation {
  double gap = 0.0;    // bumper to bumper, m
  double speed = 0.0;  // m/s
};

struct LightObservation {
  double distance = 0.0;  // to the stop line, m
  Phase phase = Phase::kGreen;
  double remaining = 0.0;  // s left in `phase`
};

/// Integral state of the tracking loop; owned by one control loop.
struct AccState {
  double integral = 0.0;
};

struct AccOutput {
  double torque = 0.0;
  double tracking_torque = 0.0;
  bool gap_active = false;
  bool stop_active = false;
  bool proceed_on_yellow = false;
};

/// Wheel torque holding speed v on `grade` (zero acceleration).
double BalanceTorque(double v, double grade, const VehicleParams& vehicle);

/// Stopping-branch acceleration toward the stop line `distance` ahead.
double StoppingAccel(double v, double distance, const AccConfig& config);

/// Minimum over PI tracking, gap keeping, and stop-line braking, clipped to
/// the wheel torque limits. `state` may be null (integral frozen at zero).
AccOutput AccCommand(double v_ref, double v, double grade,
                     const std::optional<LeadObservation>& lead,
                     const std::optional<LightObservation>& light,
                     const AccConfig& config, const VehicleParams& vehicle,
                     const WheelTorqueLimits& limits, double dt,
                     AccState* state);

enum class ViolationKind { kGap, kRedLight, kAccel };

std::string_view ToString(ViolationKind kind);

struct Violation {
  ViolationKind kind = ViolationKind::kGap;
  double time = 0.0;
  double position = 0.0;
  int intersection = -1;
  double value = 0.0;  // gap, or acceleration
};

/// Ego state after one control tick.
struct MonitorSample {
  double time = 0.0;
  double position = 0.0;  // front bumper
  double speed = 0.0;
  double accel = 0.0;
  std::optional<LeadObservation> lead;
};

/// Flags gap < g_min with both vehicles moving, presence inside an
/// intersection box while its light is red, and acceleration beyond the
/// physical bounds.
std::vector<Violation> SafetyMonitor(const MonitorSample& sample,
                                     const RouteSpec& route,
                                     const std::vector<SignalTiming>& signals,
                                     const AccConfig& config);

}  // namespace eco
