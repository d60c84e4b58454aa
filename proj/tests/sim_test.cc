#include "eco/sim.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <memory>
#include <sstream>

#include "eco/config.h"
#include "eco/errors.h"

namespace eco {
namespace {

TEST(PlantStep, HandKinematics) {
  const VehicleParams vehicle;
  PlantState s{100.0, 10.0, 0.9};
  const double torque = TorqueForAcceleration(10.0, 1.0, 0.0, vehicle);
  const double a = PlantStep(&s, torque, 0.0, vehicle, 0.2);
  EXPECT_NEAR(a, 1.0, 1e-12);
  EXPECT_NEAR(s.v, 10.2, 1e-12);
  EXPECT_NEAR(s.position - 100.0, 2.02, 1e-12);
}

TEST(PlantStep, UniformMotionAndStandstill) {
  const VehicleParams vehicle;
  PlantState s{0.0, 8.0, 0.9};
  const double hold = TorqueForAcceleration(8.0, 0.0, 0.0, vehicle);
  EXPECT_NEAR(PlantStep(&s, hold, 0.0, vehicle, 0.2), 0.0, 1e-12);
  EXPECT_NEAR(s.position, 1.6, 1e-12);
  PlantState stop{50.0, 0.0, 0.9};
  EXPECT_EQ(PlantStep(&stop, -2000.0, 0.0, vehicle, 0.2), 0.0);
  EXPECT_EQ(stop.v, 0.0);
  EXPECT_EQ(stop.position, 50.0);
  // Stopping inside the period ends at the stopping point.
  PlantState slow{0.0, 0.1, 0.9};
  PlantStep(&slow, -3000.0, 0.0, vehicle, 0.2);
  EXPECT_EQ(slow.v, 0.0);
  EXPECT_GT(slow.position, 0.0);
  EXPECT_LT(slow.position, 0.1 * 0.2);
}

TEST(LeadVehicle, FreeRoadAtDesiredSpeedHolds) {
  IdmParams b;
  const LeadState next = LeadVehicleUpdate(LeadState{10.0, b.desired_speed}, 0.2, b,
                                           std::nullopt, std::nullopt);
  EXPECT_NEAR(next.v, b.desired_speed, 1e-12);
}

TEST(LeadVehicle, StopsAtRedLine) {
  IdmParams b;
  LeadState s{0.0, 12.0};
  const double line = 80.0;
  for (int n = 0; n < 1000; ++n) {
    s = LeadVehicleUpdate(s, 0.1, b, std::nullopt, line - s.position);
    ASSERT_LE(s.position, line + 0.05);
  }
  EXPECT_LT(s.v, 0.05);
  EXPECT_GT(s.position, line - 3.0);
}

TEST(LeadVehicle, PlatoonConvergesToEquilibriumGap) {
  IdmParams b;
  const double v = 10.0;
  LeadState front{60.0, v};
  LeadState back{0.0, 8.0};
  for (int n = 0; n < 6000; ++n) {
    const LeadObservation obs{front.position - b.length - back.position, front.v};
    back = LeadVehicleUpdate(back, 0.05, b, obs, std::nullopt);
    front.position += v * 0.05;
  }
  // Fixed point of the car-following law with the predecessor at v:
  // 1 − (v/v0)^δ = ((s0 + v·T)/s)²
  const double s = (b.min_gap + v * b.time_headway) /
                   std::sqrt(1.0 - std::pow(v / b.desired_speed, b.exponent));
  EXPECT_NEAR(IdmEquilibriumGap(v, b), s, 1e-9);
  EXPECT_NEAR(front.position - b.length - back.position, s, 0.05);
  EXPECT_NEAR(back.v, v, 1e-3);
}

TEST(SimConfig, Validation) {
  SimConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.control_period = 5.0;
  EXPECT_THROW(c.Validate(), Error);
  c = SimConfig{};
  c.latency = 6.0;
  EXPECT_THROW(c.Validate(), Error);
}

TEST(ControllerMode, Names) {
  for (auto m : {ControllerMode::kEcoReceding, ControllerMode::kEcoGlobal,
                 ControllerMode::kAccOnly}) {
    EXPECT_EQ(ControllerModeFromString(ToString(m)), m);
  }
  EXPECT_EQ(ControllerModeFromString("global"), ControllerMode::kEcoGlobal);
  EXPECT_THROW(ControllerModeFromString("cruise"), Error);
}

// Closed-loop runs on shortened copies of the reference corridor.
class EpisodeTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    base_ = new AppConfig(DefaultConfig());
    map_ = new CostMap(
        BuildCostMap(base_->powertrain, base_->vehicle, base_->cost_map_grids));
  }
  static void TearDownTestSuite() {
    delete map_;
    delete base_;
  }

  // First `lights` intersections of the reference corridor over `length` m.
  void Shorten(double length, std::size_t lights) {
    config_ = *base_;
    std::vector<double> positions;
    for (std::size_t n = 0; n < lights; ++n) {
      positions.push_back(base_->route.intersection_position(n));
    }
    config_.route = RouteSpec::Uniform(length, 1.0, 15.6, positions);
    config_.hist.intersections.resize(lights);
    const double scale = length / base_->route.length;
    config_.planner.desired_time = base_->planner.desired_time * scale;
    config_.global_planner.desired_time = base_->global_planner.desired_time * scale;
    config_.Validate();
  }

  SimTrace Run(ControllerMode mode, std::uint64_t seed) {
    SimArtifacts a;
    a.route = &config_.route;
    a.vehicle = &config_.vehicle;
    a.powertrain = &config_.powertrain;
    a.cost_map = map_;
    a.hist = &config_.hist;
    a.acc = &config_.acc;
    a.planner = &config_.planner;
    a.global_planner = &config_.global_planner;
    SimConfig sim = config_.sim;
    sim.mode = mode;
    sim.seed = seed;
    return RunEpisode(sim, SampleScenario(config_.hist, config_.traffic, seed), a);
  }

  static AppConfig* base_;
  static CostMap* map_;
  AppConfig config_;
};

AppConfig* EpisodeTest::base_ = nullptr;
CostMap* EpisodeTest::map_ = nullptr;

TEST_F(EpisodeTest, EmptyCorridorTakesDistanceOverSpeed) {
  Shorten(600.0, 0);
  config_.traffic.lead_probability = 0.0;
  config_.sim.initial_speed = 15.6;
  const SimTrace trace = Run(ControllerMode::kAccOnly, 3);
  EXPECT_TRUE(trace.violations.empty());
  EXPECT_NEAR(trace.totals.travel_time, 600.0 / 15.6, config_.sim.control_period);
}

TEST_F(EpisodeTest, TraceInvariantsAndBookkeeping) {
  Shorten(700.0, 2);
  const SimTrace trace = Run(ControllerMode::kEcoReceding, 11);
  ASSERT_GT(trace.rows.size(), 10u);
  EXPECT_TRUE(trace.violations.empty());
  for (std::size_t n = 1; n < trace.rows.size(); ++n) {
    const auto& a = trace.rows[n - 1];
    const auto& b = trace.rows[n];
    EXPECT_GE(b.position, a.position);
    EXPECT_NEAR(b.time - a.time, config_.sim.control_period, 1e-9);
    EXPECT_EQ(b.tick, a.tick + 1);
  }
  const auto& t = trace.totals;
  EXPECT_NEAR(t.battery_energy, t.oc_energy, 1e-6 * std::abs(t.oc_energy));
  EXPECT_NEAR(t.initial_soc - t.final_soc,
              t.battery_charge / config_.powertrain.battery.capacity, 1e-9);
  EXPECT_GE(t.distance, config_.route.length);
}

TEST_F(EpisodeTest, PoliciesActivateAfterLatency) {
  Shorten(700.0, 2);
  const SimTrace trace = Run(ControllerMode::kEcoReceding, 5);
  ASSERT_GE(trace.activations.size(), 2u);
  const long lag = std::lround(config_.sim.latency / config_.sim.control_period);
  for (const auto& act : trace.activations) {
    if (act.id == 0) continue;
    const long solve_tick =
        std::lround(act.solve_time / config_.sim.control_period);
    EXPECT_EQ(act.activation_tick, solve_tick + lag) << act.id;
  }
  // One immutable policy between consecutive activation ticks.
  std::size_t next = 1;
  int active = trace.rows.front().policy_id;
  for (const auto& row : trace.rows) {
    if (next < trace.activations.size() &&
        row.tick >= trace.activations[next].activation_tick) {
      active = trace.activations[next].id;
      ++next;
    }
    EXPECT_EQ(row.policy_id, active) << row.tick;
  }
}

TEST_F(EpisodeTest, IdenticalInputsGiveIdenticalTraces) {
  Shorten(700.0, 2);
  std::ostringstream a;
  std::ostringstream b;
  WriteTraceCsv(Run(ControllerMode::kEcoReceding, 21), a);
  WriteTraceCsv(Run(ControllerMode::kEcoReceding, 21), b);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream in(a.str());
  std::string header;
  std::getline(in, header);
  std::string expected;
  for (const auto& col : TraceColumns()) {
    expected += (expected.empty() ? "" : ",") + col;
  }
  EXPECT_EQ(header, expected);
}

TEST_F(EpisodeTest, PlantReplaysPlannedArrivalTime) {
  Shorten(400.0, 0);
  const PlannerConfig& c = config_.planner;
  const PlanContext ctx{&config_.route, &config_.vehicle, map_, &c};
  const int n = HorizonSteps(config_.route, c, 0.0, config_.route.length);
  const PolicyMap policy = SolveDp(0.0, State{10.0, 0.0}, 0.92, {}, nullptr, ctx, n,
                                   c.route_max_delay);
  const auto plan = RolloutPolicy(policy, ctx);
  ASSERT_EQ(static_cast<int>(plan.size()), n + 1);
  PlantState s{0.0, 10.0, 0.92};
  double t = 0.0;
  const double dt = 0.01;
  while (s.position < config_.route.length && t < 200.0) {
    const int k = std::min(static_cast<int>(s.position / c.step), n - 1);
    PlantStep(&s, plan[static_cast<std::size_t>(k)].torque, 0.0, config_.vehicle, dt);
    t += dt;
  }
  EXPECT_NEAR(t, plan.back().t, 0.02 * plan.back().t);
}

TEST(Scenario, SaveLoadRoundTrip) {
  const AppConfig c = DefaultConfig();
  const Scenario s = SampleScenario(c.hist, c.traffic, 77);
  const auto path = std::filesystem::temp_directory_path() / "eco_scenario_test.json";
  SaveScenario(s, path.string());
  const Scenario back = LoadScenario(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(back.id, s.id);
  ASSERT_EQ(back.signals.size(), s.signals.size());
  for (std::size_t n = 0; n < s.signals.size(); ++n) {
    EXPECT_EQ(back.signals[n].red, s.signals[n].red);
    EXPECT_EQ(back.signals[n].offset, s.signals[n].offset);
  }
  ASSERT_EQ(back.leads.size(), s.leads.size());
  for (std::size_t n = 0; n < s.leads.size(); ++n) {
    EXPECT_EQ(back.leads[n].entry_time, s.leads[n].entry_time);
  }
  EXPECT_THROW(LoadScenario("/nonexistent/scenario.json"), Error);
}

}  // namespace
}  // namespace eco
