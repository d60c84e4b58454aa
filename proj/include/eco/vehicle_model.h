#pragma once

#include <string>
#include <vector>

namespace eco {

/// Physical parameters of the longitudinal model. All fields strictly positive.
struct VehicleParams {
  double mass = 1800.0;             // kg
  double wheel_radius = 0.32;       // m
  double gravity = 9.81;            // m/s^2
  double air_density = 1.2;         // kg/m^3
  double frontal_area = 2.25;       // m^2
  double rolling_resistance = 0.009;
  double drag_coefficient = 0.31;

  void Validate() const;
};

/// Acceleration box used by the planner and as the tracking clip in the ACC.
struct AccelLimits {
  double min = -3.0;  // m/s^2
  double max = 2.5;   // m/s^2
};

/// Lowest speed representable on the spatial planning grid.
inline constexpr double kDefaultSpeedFloor = 0.5;

/// Static corridor description sampled at a fixed position step.
struct RouteSpec {
  double length = 0.0;     // d_f, m
  double step = 1.0;       // Δs, m
  std::vector<double> grade;        // rad, one entry per step; > 0 descends
  std::vector<double> speed_limit;  // m/s, one entry per step
  std::vector<int> intersections;   // step indices, strictly increasing

  int num_steps() const { return static_cast<int>(grade.size()); }
  double position_of(int k) const { return k * step; }
  double intersection_position(std::size_t n) const {
    return intersections[n] * step;
  }
  /// Grade and speed limit at an arbitrary position (clamped to the route).
  double GradeAt(double position) const;
  double SpeedLimitAt(double position) const;
  double MaxSpeedLimit() const;

  void Validate() const;

  /// Flat route with a uniform speed limit.
  static RouteSpec Uniform(double length, double step, double speed_limit,
                           std::vector<double> intersection_positions);
};

/// A piecewise-constant profile segment [start_m, end_m) -> value.
struct ProfileSegment {
  double start_m = 0.0;
  double end_m = 0.0;
  double value = 0.0;
};

/// Reads `start_m,end_m,value` rows (header optional).
std::vector<ProfileSegment> ReadProfileCsv(const std::string& path);

/// Overwrites the per-step samples covered by the segments.
void ApplyProfile(const std::vector<ProfileSegment>& segments, double step,
                  std::vector<double>* samples);

/// Planner state on the spatial grid.
struct State {
  double v = 0.0;  // m/s
  double t = 0.0;  // s, cumulative travel time
};

/// Longitudinal acceleration under wheel torque `wheel_torque` on grade
/// `grade` (Newton's second law with rolling, grade and drag forces). The
/// grade term enters as +g·sin(grade): positive angles accelerate the car.
double Acceleration(double v, double wheel_torque, double grade,
                    const VehicleParams& params);

/// Wheel torque producing acceleration `accel` at speed v on `grade`
/// (inverse of Acceleration).
double TorqueForAcceleration(double v, double accel, double grade,
                             const VehicleParams& params);

/// Spatial-domain transition over one step of `route`. Throws
/// NonPositiveNextSpeed when the next speed falls to `speed_floor` or below.
State Step(const State& state, double wheel_torque, int k,
           const RouteSpec& route, const VehicleParams& params,
           double speed_floor = kDefaultSpeedFloor);

/// Same transition for an explicit step length and grade. Returns false for
/// an inadmissible transition instead of throwing.
bool TryStep(const State& state, double wheel_torque, double ds, double grade,
             const VehicleParams& params, double speed_floor, State* next);

bool AccelBoundsCheck(double accel, const AccelLimits& limits);

}  // namespace eco
