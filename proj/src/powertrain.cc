#include "eco/powertrain.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "eco/errors.h"

namespace eco {
namespace {

// Candidate ordering: cost, then smallest |T_e|, then smallest T_m.
bool Better(const SplitEvaluation& a, const SplitEvaluation& b) {
  return std::make_tuple(a.cost, std::abs(a.split.engine_torque),
                         a.split.motor_torque) <
         std::make_tuple(b.cost, std::abs(b.split.engine_torque),
                         b.split.motor_torque);
}

}  // namespace

double GearTable::Ratio(double v) const {
  std::size_t g = 0;
  while (g < upshift_speeds.size() && v >= upshift_speeds[g]) ++g;
  return ratios[std::min(g, ratios.size() - 1)];
}

double ElectricMachine::MaxTorque(double omega) const {
  if (omega <= 0.0) return torque_max;
  return std::min(torque_max, power_max / omega);
}

double ElectricMachine::MaxRegenTorque(double omega) const {
  if (omega <= 0.0) return torque_max;
  return std::min(torque_max, regen_power_max / omega);
}

double ElectricMachine::Efficiency(double torque, double omega) const {
  const double tn = std::abs(torque) / torque_ref - torque_sweet;
  const double wn = std::abs(omega) / speed_ref - speed_sweet;
  return std::clamp(eta_peak - k_torque * tn * tn - k_speed * wn * wn, eta_min,
                    1.0);
}

double Engine::MaxTorque(double omega) const {
  if (!CanRun(omega)) return 0.0;
  const double span = std::max(peak_speed - idle_speed, max_speed - peak_speed);
  const double x = (omega - peak_speed) / span;
  return torque_peak * (1.0 - torque_taper * x * x);
}

double Engine::FuelPower(double torque, double omega) const {
  const double friction =
      friction_linear * omega + friction_quadratic * omega * omega;
  return (torque * omega + friction) / indicated_efficiency;
}

double Engine::Efficiency(double torque, double omega) const {
  const double fuel = FuelPower(torque, omega);
  return fuel > 0.0 ? torque * omega / fuel : 0.0;
}

void PowertrainParams::Validate() const {
  auto fail = [](const char* what) {
    throw Error(ErrorCode::kInvalidParams, what);
  };
  if (gears.ratios.empty() ||
      gears.upshift_speeds.size() + 1 != gears.ratios.size()) {
    fail("gear table needs one more ratio than upshift speeds");
  }
  for (double r : gears.ratios) {
    if (!(r > 0.0)) fail("gear ratios must be positive");
  }
  if (!(clutch_efficiency > 0.0 && clutch_efficiency <= 1.0)) {
    fail("clutch efficiency must be in (0, 1]");
  }
  for (const ElectricMachine* m : {&motor, &hsg}) {
    if (!(m->eta_min > 0.0 && m->eta_peak <= 1.0 && m->eta_min <= m->eta_peak)) {
      fail("machine efficiencies must be in (0, 1]");
    }
    if (!(m->torque_max > 0.0 && m->power_max > 0.0 &&
          m->regen_power_max > 0.0)) {
      fail("machine limits must be positive");
    }
  }
  if (!(engine.indicated_efficiency > 0.0 &&
        engine.indicated_efficiency <= 1.0)) {
    fail("engine efficiency must be in (0, 1]");
  }
  if (!(battery.capacity > 0.0)) fail("battery capacity must be positive");
  if (!(battery.internal_resistance > 0.0)) {
    fail("internal resistance must be positive");
  }
  for (double v : battery.open_circuit_voltage.ys()) {
    if (!(v > 0.0)) fail("open-circuit voltage must be positive");
  }
  if (motor_candidates < 2) fail("need at least two motor-torque candidates");
  if (!(friction_brake_max >= 0.0)) fail("brake limit must be non-negative");
}

double ShaftSpeed(double v, const PowertrainParams& pt,
                  const VehicleParams& vehicle) {
  return pt.gears.Ratio(v) * v / vehicle.wheel_radius;
}

WheelTorqueLimits WheelLimits(double v, const PowertrainParams& pt,
                              const VehicleParams& vehicle) {
  const double r = pt.gears.Ratio(v);
  const double omega = r * v / vehicle.wheel_radius;
  double shaft_max = pt.motor.MaxTorque(omega);
  if (pt.engine.CanRun(omega)) {
    shaft_max += pt.clutch_efficiency * pt.engine.MaxTorque(omega);
  }
  return {-(r * pt.motor.MaxRegenTorque(omega) + pt.friction_brake_max),
          r * shaft_max};
}

double MachineElectricalPower(const ElectricMachine& machine, double torque,
                              double omega) {
  const double mech = torque * omega;
  if (mech == 0.0) return 0.0;
  const double eta = machine.Efficiency(torque, omega);
  return mech >= 0.0 ? mech / eta : mech * eta;
}

double MotorPower(double motor_torque, double v, const PowertrainParams& pt,
                  const VehicleParams& vehicle) {
  const double omega = ShaftSpeed(v, pt, vehicle);
  if (motor_torque > pt.motor.MaxTorque(omega) ||
      motor_torque < -pt.motor.MaxRegenTorque(omega)) {
    throw Error(ErrorCode::kTorqueOutOfRange, "motor torque outside envelope");
  }
  return MachineElectricalPower(pt.motor, motor_torque, omega);
}

BatteryStepResult BatteryStep(double terminal_power, double soc,
                              const BatteryParams& battery, double dt) {
  const double voc = battery.open_circuit_voltage(soc);
  const double r = battery.internal_resistance;
  const double disc = voc * voc - 4.0 * r * terminal_power;
  if (disc < 0.0) {
    throw Error(ErrorCode::kPowerEnvelopeExceeded,
                "battery power beyond the deliverable envelope");
  }
  BatteryStepResult out;
  out.current = (voc - std::sqrt(disc)) / (2.0 * r);
  out.elec_power = voc * out.current;
  out.soc = soc - out.current * dt / battery.capacity;
  return out;
}

bool EvaluateSplit(double v, const TorqueSplit& split, double soc,
                   const PowertrainParams& pt, const VehicleParams& vehicle,
                   SplitEvaluation* out) {
  const double omega = ShaftSpeed(v, pt, vehicle);
  if (split.motor_torque > pt.motor.MaxTorque(omega) ||
      split.motor_torque < -pt.motor.MaxRegenTorque(omega)) {
    return false;
  }
  if (split.brake_torque < 0.0 || split.brake_torque > pt.friction_brake_max) {
    return false;
  }
  double fuel = 0.0;
  if (split.engine_on) {
    if (!pt.engine.CanRun(omega)) return false;
    if (split.engine_torque < 0.0 ||
        split.engine_torque > pt.engine.MaxTorque(omega)) {
      return false;
    }
    fuel = pt.engine.FuelPower(split.engine_torque, omega);
  } else if (split.engine_torque != 0.0) {
    return false;
  }
  const double motor = MachineElectricalPower(pt.motor, split.motor_torque, omega);
  // The starter-generator idles in charge-depleting operation.
  const double hsg = MachineElectricalPower(pt.hsg, 0.0, omega);
  const double pb = motor + hsg + pt.aux_power;
  const double voc = pt.battery.open_circuit_voltage(soc);
  const double r = pt.battery.internal_resistance;
  const double disc = voc * voc - 4.0 * r * pb;
  if (disc < 0.0) return false;
  const double current = (voc - std::sqrt(disc)) / (2.0 * r);
  out->split = split;
  out->fuel_power = fuel;
  out->motor_power = motor;
  out->battery_power = pb;
  out->current = current;
  out->elec_power = voc * current;
  out->cost = fuel + pt.equivalence_factor(soc) * out->elec_power;
  return true;
}

bool TryEcmsSplit(double v, double wheel_torque, double soc,
                  const PowertrainParams& pt, const VehicleParams& vehicle,
                  SplitEvaluation* out) {
  const double r = pt.gears.Ratio(v);
  const double omega = r * v / vehicle.wheel_radius;
  const double shaft_demand = wheel_torque / r;
  const double motor_max = pt.motor.MaxTorque(omega);
  const double regen_max = pt.motor.MaxRegenTorque(omega);

  bool found = false;
  SplitEvaluation best;
  SplitEvaluation candidate;

  // Engine off: the motor covers the demand; friction brakes absorb only what
  // regeneration cannot.
  if (shaft_demand <= motor_max) {
    TorqueSplit split;
    if (shaft_demand >= -regen_max) {
      split.motor_torque = shaft_demand;
    } else {
      split.motor_torque = -regen_max;
      split.brake_torque = r * split.motor_torque - wheel_torque;
    }
    if (EvaluateSplit(v, split, soc, pt, vehicle, &candidate)) {
      best = candidate;
      found = true;
    }
  }

  // Engine on: enumerate motor torques, the clutch-coupled engine makes up
  // the remainder.
  if (pt.engine.CanRun(omega)) {
    const int n = pt.motor_candidates;
    for (int i = 0; i < n; ++i) {
      const double tm =
          i == n - 1 ? motor_max
                     : -regen_max + (motor_max + regen_max) * i / (n - 1);
      TorqueSplit split;
      split.engine_on = true;
      split.motor_torque = tm;
      split.engine_torque = (shaft_demand - tm) / pt.clutch_efficiency;
      if (!EvaluateSplit(v, split, soc, pt, vehicle, &candidate)) continue;
      if (!found || Better(candidate, best)) {
        best = candidate;
        found = true;
      }
    }
  }
  if (found) *out = best;
  return found;
}

SplitEvaluation EcmsSplit(double v, double wheel_torque, double soc,
                          const PowertrainParams& pt,
                          const VehicleParams& vehicle) {
  SplitEvaluation out;
  if (!TryEcmsSplit(v, wheel_torque, soc, pt, vehicle, &out)) {
    throw Error(ErrorCode::kInfeasibleDemand,
                "no admissible torque split for the wheel torque demand");
  }
  return out;
}

}  // namespace eco
