#pragma once

#include <vector>

#include "eco/interp.h"
#include "eco/vehicle_model.h"

namespace eco {

/// Gear ratio (transmission times final drive) scheduled on vehicle speed.
/// Gear g is used for speeds in [upshift_speeds[g-1], upshift_speeds[g]).
struct GearTable {
  std::vector<double> ratios{13.0, 8.5, 6.0, 4.6, 3.7};
  std::vector<double> upshift_speeds{6.0, 11.0, 16.0, 22.0};  // m/s

  double Ratio(double v) const;
};

/// Electric machine surrogate: torque limited by a constant-torque /
/// constant-power envelope; efficiency is a smooth quadratic bowl.
struct ElectricMachine {
  double torque_max = 260.0;         // N·m
  double power_max = 70000.0;        // W, motoring
  double regen_power_max = 50000.0;  // W, generating
  double eta_peak = 0.94;
  double eta_min = 0.70;
  double torque_ref = 260.0;  // N·m, normalizes the torque term
  double speed_ref = 600.0;   // rad/s, normalizes the speed term
  double torque_sweet = 0.4;  // normalized torque of peak efficiency
  double speed_sweet = 0.45;  // normalized speed of peak efficiency
  double k_torque = 0.12;
  double k_speed = 0.10;

  double MaxTorque(double omega) const;
  double MaxRegenTorque(double omega) const;
  double Efficiency(double torque, double omega) const;
};

/// Willans-line engine: fuel power = (T·ω + friction(ω)) / indicated efficiency.
struct Engine {
  double idle_speed = 90.0;    // rad/s; the engine cannot run coupled below it
  double max_speed = 620.0;    // rad/s
  double torque_peak = 180.0;  // N·m
  double peak_speed = 330.0;   // rad/s
  double torque_taper = 0.25;  // fractional loss at the speed extremes
  double indicated_efficiency = 0.38;
  double friction_linear = 6.0;       // N·m, friction power k1·ω
  double friction_quadratic = 0.01;   // N·m·s, friction power k2·ω²

  bool CanRun(double omega) const {
    return omega >= idle_speed && omega <= max_speed;
  }
  double MaxTorque(double omega) const;
  double FuelPower(double torque, double omega) const;
  /// T·ω / fuel power; zero at zero torque.
  double Efficiency(double torque, double omega) const;
};

struct BatteryParams {
  PiecewiseLinear open_circuit_voltage{{0.0, 0.2, 0.5, 0.8, 1.0},
                                       {330.0, 345.0, 355.0, 365.0, 375.0}};
  double internal_resistance = 0.1;  // Ω
  double capacity = 100800.0;        // A·s (28 Ah)
};

struct PowertrainParams {
  GearTable gears;
  double clutch_efficiency = 0.98;
  ElectricMachine motor;
  ElectricMachine hsg{.torque_max = 90.0,
                      .power_max = 30000.0,
                      .regen_power_max = 30000.0,
                      .torque_ref = 90.0};
  Engine engine;
  BatteryParams battery;
  double aux_power = 300.0;         // W
  double friction_brake_max = 8000.0;  // N·m at the wheel
  /// ECMS equivalence factor s(SOC).
  PiecewiseLinear equivalence_factor{{0.0, 0.3, 0.6, 0.9, 1.0},
                                     {3.5, 2.8, 2.2, 1.3, 1.0}};
  /// Number of evenly spaced motor-torque candidates for engine-on splits.
  int motor_candidates = 101;

  void Validate() const;
};

struct TorqueSplit {
  double motor_torque = 0.0;   // T_m
  double engine_torque = 0.0;  // T_e
  bool engine_on = false;
  double brake_torque = 0.0;   // T_brk >= 0
};

/// Powers associated with one evaluated split.
struct SplitEvaluation {
  TorqueSplit split;
  double cost = 0.0;            // P_f + s·P_elec, W
  double fuel_power = 0.0;      // W
  double motor_power = 0.0;     // W electrical
  double battery_power = 0.0;   // P_b terminal, W
  double elec_power = 0.0;      // P_elec = V_oc·I_b, W
  double current = 0.0;         // I_b, A
};

struct WheelTorqueLimits {
  double min = 0.0;
  double max = 0.0;
};

double ShaftSpeed(double v, const PowertrainParams& pt,
                  const VehicleParams& vehicle);

WheelTorqueLimits WheelLimits(double v, const PowertrainParams& pt,
                              const VehicleParams& vehicle);

/// Electrical power of the traction motor. Throws TorqueOutOfRange outside
/// the motor envelope.
double MotorPower(double motor_torque, double v, const PowertrainParams& pt,
                  const VehicleParams& vehicle);

/// Electrical power for a given mechanical torque/speed; the efficiency
/// always loses energy (divide when motoring, multiply when generating).
double MachineElectricalPower(const ElectricMachine& machine, double torque,
                              double omega);

struct BatteryStepResult {
  double soc = 0.0;
  double elec_power = 0.0;  // W
  double current = 0.0;     // A
};

BatteryStepResult BatteryStep(double terminal_power, double soc,
                              const BatteryParams& battery, double dt);

/// Minimum-cost admissible torque split for wheel torque demand `wheel_torque`.
/// Throws InfeasibleDemand when no admissible split exists.
SplitEvaluation EcmsSplit(double v, double wheel_torque, double soc,
                          const PowertrainParams& pt,
                          const VehicleParams& vehicle);

/// Non-throwing variant used by the cost-map builder; false when infeasible.
bool TryEcmsSplit(double v, double wheel_torque, double soc,
                  const PowertrainParams& pt, const VehicleParams& vehicle,
                  SplitEvaluation* out);

/// Evaluates an explicit split. Returns false when the split is inadmissible
/// (torque limits, engine speed window, or battery power envelope).
bool EvaluateSplit(double v, const TorqueSplit& split, double soc,
                   const PowertrainParams& pt, const VehicleParams& vehicle,
                   SplitEvaluation* out);

}  // namespace eco
