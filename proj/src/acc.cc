#include "eco/acc.h"

#include <algorithm>
#include <cmath>

#include "eco/errors.h"

namespace eco {

void AccConfig::Validate() const {
  if (!(min_gap > 0.0) || !(time_headway > 0.0)) {
    throw Error(ErrorCode::kInvalidParams,
                "minimum gap and time headway must be positive");
  }
  if (!(comfort_decel > 0.0) || max_decel < comfort_decel) {
    throw Error(ErrorCode::kInvalidParams,
                "need 0 < comfort braking <= maximum braking");
  }
  if (kp < 0.0 || ki < 0.0 || integral_limit < 0.0 || stop_tolerance < 0.0 ||
      box_length < 0.0) {
    throw Error(ErrorCode::kInvalidParams, "ACC gains and lengths must be >= 0");
  }
}

std::string_view ToString(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kGap: return "gap";
    case ViolationKind::kRedLight: return "red_light";
    case ViolationKind::kAccel: return "accel";
  }
  return "unknown";
}

double BalanceTorque(double v, double grade, const VehicleParams& vehicle) {
  return TorqueForAcceleration(v, 0.0, grade, vehicle);
}

double StoppingAccel(double v, double distance, const AccConfig& config) {
  const double d = distance - config.stop_tolerance;
  if (d <= 0.0) return -config.max_decel;
  // Above the creep profile brake at the constant rate that ends exactly at
  // the line. Below it, track the profile so a crawling vehicle still
  // reaches the line without ever exceeding the kinematic stopping rate.
  const double profile = std::sqrt(2.0 * config.approach_decel * d);
  if (v > profile) return -v * v / (2.0 * d);
  return std::min(config.kp * (profile - v), config.approach_decel);
}

AccOutput AccCommand(double v_ref, double v, double grade,
                     const std::optional<LeadObservation>& lead,
                     const std::optional<LightObservation>& light,
                     const AccConfig& config, const VehicleParams& vehicle,
                     const WheelTorqueLimits& limits, double dt,
                     AccState* state) {
  const double mr = vehicle.mass * vehicle.wheel_radius;
  const double balance = BalanceTorque(v, grade, vehicle);
  AccOutput out;

  const double error = v_ref - v;
  double integral = state != nullptr ? state->integral : 0.0;
  double a_track = config.kp * error + config.ki * integral;
  const double clipped =
      std::clamp(a_track, config.tracking.min, config.tracking.max);
  // Anti-windup: integrate only while the command is not saturated or the
  // error drives it back into range.
  if (state != nullptr) {
    if (clipped == a_track || (a_track > clipped) != (error > 0.0)) {
      integral = std::clamp(integral + error * dt, -config.integral_limit,
                            config.integral_limit);
      state->integral = integral;
    }
  }
  a_track = clipped;
  out.tracking_torque = balance + mr * a_track;
  double a_cmd = a_track;

  if (light && light->phase != Phase::kGreen && light->distance >= 0.0) {
    const double a_stop = StoppingAccel(v, light->distance, config);
    bool stop = true;
    if (light->phase == Phase::kYellow) {
      const double d = light->distance - config.stop_tolerance;
      const bool comfortable =
          d > 0.0 && v * v / (2.0 * d) <= config.comfort_decel;
      const bool clears =
          v > 0.0 &&
          (light->distance + config.box_length) / v <= light->remaining;
      if (!comfortable && clears) {
        stop = false;
        out.proceed_on_yellow = true;
        // Committed: never slow down inside the dilemma zone.
        a_cmd = std::max(a_cmd, 0.0);
      }
    }
    if (stop) {
      out.stop_active = true;
      a_cmd = std::min(a_cmd, std::max(a_stop, -config.max_decel));
    }
  }

  if (lead) {
    const double spacing = lead->gap - config.min_gap - config.time_headway * v;
    double a_gap = config.gap_gain * spacing +
                   config.gap_speed_gain * (lead->speed - v);
    const double room = lead->gap - (config.min_gap + config.gap_margin);
    if (lead->gap <= config.min_gap) {
      a_gap = -config.max_decel;
    } else if (v > lead->speed) {
      const double kin = room > 0.0
                             ? -(v * v - lead->speed * lead->speed) / (2.0 * room)
                             : -config.max_decel;
      a_gap = std::min(a_gap, kin);
    }
    a_gap = std::max(a_gap, -config.max_decel);
    if (a_gap < a_cmd) {
      out.gap_active = true;
      a_cmd = a_gap;
    }
  }

  double torque = out.stop_active || out.gap_active
                      ? std::min(out.tracking_torque, balance + mr * a_cmd)
                      : balance + mr * a_cmd;
  torque = std::clamp(torque, limits.min, limits.max);
  out.torque = torque;
  return out;
}

std::vector<Violation> SafetyMonitor(const MonitorSample& sample,
                                     const RouteSpec& route,
                                     const std::vector<SignalTiming>& signals,
                                     const AccConfig& config) {
  std::vector<Violation> out;
  if (sample.lead && sample.speed > 0.0 && sample.lead->speed > 0.0 &&
      sample.lead->gap < config.min_gap) {
    out.push_back({ViolationKind::kGap, sample.time, sample.position, -1,
                   sample.lead->gap});
  }
  for (std::size_t n = 0; n < route.intersections.size() && n < signals.size();
       ++n) {
    const double p = route.intersection_position(n);
    if (sample.position > p && sample.position < p + config.box_length &&
        PhaseAt(signals[n], sample.time) == Phase::kRed) {
      out.push_back({ViolationKind::kRedLight, sample.time, sample.position,
                     static_cast<int>(n), 0.0});
    }
  }
  if (sample.accel < -config.physical_decel ||
      sample.accel > config.physical_accel) {
    out.push_back({ViolationKind::kAccel, sample.time, sample.position, -1,
                   sample.accel});
  }
  return out;
}

}  // namespace eco
