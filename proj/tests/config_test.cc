#include "eco/config.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "eco/errors.h"

namespace eco {
namespace {

namespace fs = std::filesystem;

TEST(Config, JsonRoundTrip) {
  const AppConfig c = DefaultConfig();
  Json doc = ToJson(c);
  Json back = ToJson(ConfigFromJson(doc, "/data"));
  EXPECT_EQ(back["cost_map"]["path"], "/data/costmap.bin");
  doc["cost_map"].erase("path");
  back["cost_map"].erase("path");
  EXPECT_TRUE(back == doc);
}

TEST(Config, OverlayKeepsAbsentKeys) {
  const Json doc = Json::parse(R"({
    "vehicle": {"mass": 2000.0},
    "planner": {"step": 5.0, "corners": "reject"},
    "sim": {"mode": "acc-only"}
  })");
  const AppConfig c = ConfigFromJson(doc, ".");
  const AppConfig d = DefaultConfig();
  EXPECT_EQ(c.vehicle.mass, 2000.0);
  EXPECT_EQ(c.vehicle.wheel_radius, d.vehicle.wheel_radius);
  EXPECT_EQ(c.planner.step, 5.0);
  EXPECT_EQ(c.planner.corners, CornerRule::kReject);
  EXPECT_EQ(c.planner.num_speeds, d.planner.num_speeds);
  EXPECT_EQ(c.sim.mode, ControllerMode::kAccOnly);
  EXPECT_EQ(c.route.intersections, d.route.intersections);
}

TEST(Config, ShippedCorridorMatchesDefaults) {
  const fs::path path = fs::path(ECO_SOURCE_DIR) / "config" / "corridor.json";
  const AppConfig c = LoadConfig(path.string());
  const AppConfig d = DefaultConfig();
  Json a = ToJson(c);
  Json b = ToJson(d);
  // The path resolves against the file's directory.
  a["cost_map"].erase("path");
  b["cost_map"].erase("path");
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Config, ProfileCsvResolvesRelativeToConfig) {
  const fs::path dir = fs::temp_directory_path() / "eco_config_test";
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "grade.csv");
    csv << "start_m,end_m,value\n0,100,0.01\n100,200,-0.02\n";
    std::ofstream cfg(dir / "c.json");
    cfg << R"({"route": {"length": 200, "intersections": [], "grade_csv": "grade.csv"},
               "signals": {"intersections": []}})";
  }
  const AppConfig c = LoadConfig((dir / "c.json").string());
  fs::remove_all(dir);
  EXPECT_EQ(c.route.num_steps(), 200);
  EXPECT_DOUBLE_EQ(c.route.GradeAt(50.0), 0.01);
  EXPECT_DOUBLE_EQ(c.route.GradeAt(150.0), -0.02);
}

TEST(Config, Errors) {
  EXPECT_THROW(LoadConfig("/nonexistent/eco.json"), Error);
  // Three intersections on the route, eight signal records.
  const Json mismatch = Json::parse(R"({"route": {"intersections": [100, 200, 300]}})");
  try {
    ConfigFromJson(mismatch, ".");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidParams);
  }
  EXPECT_THROW(ConfigFromJson(Json::parse(R"({"planner": {"corners": "maybe"}})"), "."),
               Error);
  EXPECT_THROW(ConfigFromJson(Json::parse(R"({"planner": {"num_times": 1}})"), "."),
               Error);
}

TEST(Hash, Fnv1aReferenceValues) {
  EXPECT_EQ(Fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(Fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(HashToHex(0xabcULL), "0000000000000abc");
}

}  // namespace
}  // namespace eco
