#include "eco/vehicle_model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "eco/errors.h"

namespace eco {

void VehicleParams::Validate() const {
  const double fields[] = {mass,         wheel_radius,       gravity,
                           air_density,  frontal_area,       rolling_resistance,
                           drag_coefficient};
  for (double f : fields) {
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw Error(ErrorCode::kInvalidParams,
                  "vehicle parameters must be strictly positive");
    }
  }
}

double RouteSpec::GradeAt(double position) const {
  if (grade.empty()) return 0.0;
  const int k = std::clamp(static_cast<int>(std::floor(position / step)), 0,
                           num_steps() - 1);
  return grade[static_cast<std::size_t>(k)];
}

double RouteSpec::SpeedLimitAt(double position) const {
  const int k = std::clamp(static_cast<int>(std::floor(position / step)), 0,
                           num_steps() - 1);
  return speed_limit[static_cast<std::size_t>(k)];
}

double RouteSpec::MaxSpeedLimit() const {
  return *std::max_element(speed_limit.begin(), speed_limit.end());
}

void RouteSpec::Validate() const {
  if (!(step > 0.0)) {
    throw Error(ErrorCode::kInvalidParams, "route step must be positive");
  }
  if (!(length > 0.0)) {
    throw Error(ErrorCode::kInvalidParams, "route length must be positive");
  }
  const long expected = std::lround(length / step);
  if (std::abs(expected * step - length) > 1e-9 * length) {
    throw Error(ErrorCode::kInvalidParams,
                "route length must be a multiple of the step");
  }
  if (static_cast<long>(grade.size()) != expected ||
      static_cast<long>(speed_limit.size()) != expected) {
    throw Error(ErrorCode::kInvalidParams,
                "grade/speed-limit profile length must equal length/step");
  }
  for (double v : speed_limit) {
    if (!(v > 0.0)) {
      throw Error(ErrorCode::kInvalidParams, "speed limits must be positive");
    }
  }
  for (std::size_t n = 0; n < intersections.size(); ++n) {
    if (intersections[n] < 0 || intersections[n] > expected) {
      throw Error(ErrorCode::kInvalidParams,
                  "intersection outside the route");
    }
    if (n > 0 && intersections[n] <= intersections[n - 1]) {
      throw Error(ErrorCode::kInvalidParams,
                  "intersections must be strictly increasing");
    }
  }
}

RouteSpec RouteSpec::Uniform(double length, double step, double speed_limit,
                             std::vector<double> intersection_positions) {
  RouteSpec route;
  route.length = length;
  route.step = step;
  const auto n = static_cast<std::size_t>(std::lround(length / step));
  route.grade.assign(n, 0.0);
  route.speed_limit.assign(n, speed_limit);
  for (double p : intersection_positions) {
    route.intersections.push_back(static_cast<int>(std::lround(p / step)));
  }
  route.Validate();
  return route;
}

std::vector<ProfileSegment> ReadProfileCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open profile " + path);
  std::vector<ProfileSegment> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    ProfileSegment seg;
    if (!(fields >> seg.start_m >> seg.end_m >> seg.value)) {
      // Header row or malformed line; only the header is tolerated.
      if (out.empty() && line.find("start_m") != std::string::npos) continue;
      throw Error(ErrorCode::kIo, "malformed profile row in " + path);
    }
    if (seg.end_m <= seg.start_m) {
      throw Error(ErrorCode::kInvalidParams, "empty profile segment in " + path);
    }
    out.push_back(seg);
  }
  return out;
}

void ApplyProfile(const std::vector<ProfileSegment>& segments, double step,
                  std::vector<double>* samples) {
  for (const auto& seg : segments) {
    const auto lo = static_cast<long>(std::ceil(seg.start_m / step - 1e-9));
    const auto hi = static_cast<long>(std::ceil(seg.end_m / step - 1e-9));
    for (long k = std::max(0L, lo);
         k < std::min<long>(hi, static_cast<long>(samples->size())); ++k) {
      (*samples)[static_cast<std::size_t>(k)] = seg.value;
    }
  }
}

double Acceleration(double v, double wheel_torque, double grade,
                    const VehicleParams& p) {
  return wheel_torque / (p.mass * p.wheel_radius) -
         p.gravity * (std::cos(grade) * p.rolling_resistance - std::sin(grade)) -
         p.air_density * p.frontal_area * p.drag_coefficient / (2.0 * p.mass) *
             v * v;
}

double TorqueForAcceleration(double v, double accel, double grade,
                             const VehicleParams& p) {
  const double resist =
      p.gravity * (std::cos(grade) * p.rolling_resistance - std::sin(grade)) +
      p.air_density * p.frontal_area * p.drag_coefficient / (2.0 * p.mass) * v *
          v;
  return (accel + resist) * p.mass * p.wheel_radius;
}

bool TryStep(const State& state, double wheel_torque, double ds, double grade,
             const VehicleParams& params, double speed_floor, State* next) {
  const double a = Acceleration(state.v, wheel_torque, grade, params);
  const double v_next = state.v + a * ds / state.v;
  if (!(v_next > speed_floor)) return false;
  next->v = v_next;
  next->t = state.t + ds / v_next;
  return true;
}

State Step(const State& state, double wheel_torque, int k,
           const RouteSpec& route, const VehicleParams& params,
           double speed_floor) {
  if (!(state.v > 0.0)) {
    throw Error(ErrorCode::kInvalidParams,
                "spatial step requires a positive speed");
  }
  const double grade =
      route.grade.empty() ? 0.0 : route.grade[static_cast<std::size_t>(k)];
  State next;
  if (!TryStep(state, wheel_torque, route.step, grade, params, speed_floor,
               &next)) {
    throw Error(ErrorCode::kNonPositiveNextSpeed,
                "next speed at or below the speed floor");
  }
  return next;
}

bool AccelBoundsCheck(double accel, const AccelLimits& limits) {
  return limits.min <= accel && accel <= limits.max;
}

}  // namespace eco
