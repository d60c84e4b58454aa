#include "eco/vehicle_model.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "eco/errors.h"

namespace eco {
namespace {

VehicleParams Defaults() { return VehicleParams{}; }

// Hand evaluation of the longitudinal force balance, written independently of
// the library expression.
double ForceBalanceAccel(double v, double torque, double grade,
                         const VehicleParams& p) {
  const double traction = torque / p.wheel_radius;
  const double rolling = p.mass * p.gravity * std::cos(grade) * p.rolling_resistance;
  const double slope = p.mass * p.gravity * std::sin(grade);
  const double drag = 0.5 * p.air_density * p.frontal_area * p.drag_coefficient * v * v;
  return (traction - rolling + slope - drag) / p.mass;
}

TEST(Acceleration, TorqueCancellingRollingGivesZero) {
  const auto p = Defaults();
  const double torque = p.mass * p.wheel_radius * p.gravity * p.rolling_resistance;
  EXPECT_NEAR(Acceleration(0.0, torque, 0.0, p), 0.0, 1e-12);
}

TEST(Acceleration, MatchesForceBalanceAt20MetersPerSecond) {
  const auto p = Defaults();
  // 500/576 − 9.81·0.009 − 1.2·2.25·0.31·400/3600
  EXPECT_NEAR(Acceleration(20.0, 500.0, 0.0, p),
              ForceBalanceAccel(20.0, 500.0, 0.0, p), 1e-12);
  EXPECT_NEAR(Acceleration(20.0, 500.0, 0.0, p), 0.6867656, 1e-6);
}

// The model adds g·sin(θ), so a positive angle is a descent and a negative
// one a climb.
TEST(Acceleration, ClimbSlowerThanDescent) {
  const auto p = Defaults();
  EXPECT_LT(Acceleration(15.0, 300.0, -0.02, p), Acceleration(15.0, 300.0, 0.02, p));
  EXPECT_NEAR(Acceleration(15.0, 300.0, 0.02, p),
              ForceBalanceAccel(15.0, 300.0, 0.02, p), 1e-12);
}

TEST(Acceleration, MonotoneInTorqueAndSpeed) {
  const auto p = Defaults();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> speed(0.0, 30.0);
  std::uniform_real_distribution<double> torque(-3000.0, 3000.0);
  for (int n = 0; n < 500; ++n) {
    const double v = speed(rng);
    const double t = torque(rng);
    EXPECT_LT(Acceleration(v, t, 0.0, p), Acceleration(v, t + 1.0, 0.0, p));
    EXPECT_GT(Acceleration(v, t, 0.0, p), Acceleration(v + 0.1, t, 0.0, p));
  }
}

TEST(Acceleration, InverseRecoversTorque) {
  const auto p = Defaults();
  for (double v : {0.0, 3.0, 12.0, 25.0}) {
    for (double a : {-2.0, 0.0, 1.5}) {
      const double torque = TorqueForAcceleration(v, a, 0.01, p);
      EXPECT_NEAR(Acceleration(v, torque, 0.01, p), a, 1e-12);
    }
  }
}

TEST(Acceleration, SteadySpeedPowerBalance) {
  const auto p = Defaults();
  for (double v : {2.0, 10.0, 27.0}) {
    const double torque = TorqueForAcceleration(v, 0.0, 0.0, p);
    const double wheel_power = torque * v / p.wheel_radius;
    const double resist_power =
        (p.rolling_resistance * p.mass * p.gravity +
         0.5 * p.air_density * p.frontal_area * p.drag_coefficient * v * v) * v;
    EXPECT_NEAR(wheel_power, resist_power, 1e-9 * resist_power);
  }
}

RouteSpec FlatRoute() { return RouteSpec::Uniform(100.0, 1.0, 20.0, {}); }

TEST(Step, ZeroAccelerationAdvancesTimeOnly) {
  const auto p = Defaults();
  const double torque = TorqueForAcceleration(10.0, 0.0, 0.0, p);
  const State next = Step(State{10.0, 5.0}, torque, 0, FlatRoute(), p);
  EXPECT_NEAR(next.v, 10.0, 1e-12);
  EXPECT_NEAR(next.t, 5.1, 1e-12);
}

TEST(Step, AccelerationTwoFromTen) {
  const auto p = Defaults();
  const double torque = TorqueForAcceleration(10.0, 2.0, 0.0, p);
  const State next = Step(State{10.0, 3.0}, torque, 0, FlatRoute(), p);
  EXPECT_NEAR(next.v, 10.2, 1e-12);
  EXPECT_NEAR(next.t, 3.0 + 1.0 / 10.2, 1e-12);
}

TEST(Step, HardBrakingBelowFloorIsRejected) {
  const auto p = Defaults();
  try {
    Step(State{1.0, 0.0}, -3000.0, 0, FlatRoute(), p);
    FAIL() << "expected NonPositiveNextSpeed";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonPositiveNextSpeed);
  }
  State out;
  EXPECT_FALSE(TryStep(State{1.0, 0.0}, -3000.0, 1.0, 0.0, p, kDefaultSpeedFloor, &out));
}

TEST(Step, ComposedConstantSpeedTime) {
  const auto p = Defaults();
  const RouteSpec route = FlatRoute();
  const double v = 7.0;
  const double torque = TorqueForAcceleration(v, 0.0, 0.0, p);
  State s{v, 0.0};
  for (int k = 0; k < 40; ++k) s = Step(s, torque, k, route, p);
  EXPECT_NEAR(s.t, 40.0 / v, 1e-9);
  EXPECT_NEAR(s.v, v, 1e-9);
}

TEST(AccelBounds, InclusiveEnds) {
  const AccelLimits box;
  EXPECT_TRUE(AccelBoundsCheck(box.max, box));
  EXPECT_FALSE(AccelBoundsCheck(box.max + 0.01, box));
  EXPECT_TRUE(AccelBoundsCheck(0.0, box));
  EXPECT_TRUE(AccelBoundsCheck(box.min, box));
  EXPECT_FALSE(AccelBoundsCheck(box.min - 0.01, box));
}

TEST(VehicleParams, RejectsNonPositiveFields) {
  VehicleParams p;
  p.mass = 0.0;
  EXPECT_THROW(p.Validate(), Error);
  p = VehicleParams{};
  p.drag_coefficient = -1.0;
  EXPECT_THROW(p.Validate(), Error);
  EXPECT_NO_THROW(VehicleParams{}.Validate());
}

TEST(RouteSpec, UniformLayoutAndValidation) {
  const RouteSpec r = RouteSpec::Uniform(50.0, 0.5, 13.0, {10.0, 30.0});
  EXPECT_EQ(r.num_steps(), 100);
  EXPECT_EQ(r.intersections, (std::vector<int>{20, 60}));
  EXPECT_DOUBLE_EQ(r.intersection_position(1), 30.0);
  EXPECT_DOUBLE_EQ(r.MaxSpeedLimit(), 13.0);
  EXPECT_NO_THROW(r.Validate());

  RouteSpec bad = r;
  bad.intersections = {60, 20};
  EXPECT_THROW(bad.Validate(), Error);
  bad = r;
  bad.grade.pop_back();
  EXPECT_THROW(bad.Validate(), Error);
}

TEST(RouteSpec, ProfileCsvOverridesSegments) {
  const auto path = std::filesystem::temp_directory_path() / "eco_profile_test.csv";
  {
    std::ofstream out(path);
    out << "start_m,end_m,value\n10,20,0.03\n";
  }
  const auto segments = ReadProfileCsv(path.string());
  ASSERT_EQ(segments.size(), 1u);
  RouteSpec r = RouteSpec::Uniform(40.0, 1.0, 15.0, {});
  ApplyProfile(segments, r.step, &r.grade);
  EXPECT_DOUBLE_EQ(r.GradeAt(9.5), 0.0);
  EXPECT_DOUBLE_EQ(r.GradeAt(10.0), 0.03);
  EXPECT_DOUBLE_EQ(r.GradeAt(19.0), 0.03);
  EXPECT_DOUBLE_EQ(r.GradeAt(20.0), 0.0);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace eco
