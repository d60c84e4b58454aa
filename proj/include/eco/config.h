#pragma once

#include <cstdint>
#include <string>

#include "eco/acc.h"
#include "eco/cost_map.h"
#include "eco/planner.h"
#include "eco/powertrain.h"
#include "eco/signals.h"
#include "eco/sim.h"
#include "eco/vehicle_model.h"
#include "json.hpp"

namespace eco {

using Json = nlohmann::json;

std::uint64_t Fnv1a64(const std::string& bytes);
std::string HashToHex(std::uint64_t hash);

// Serialization of parameter sets. FromJson overlays: keys absent from the
// document keep the value already held by the target.
Json ToJson(const VehicleParams& p);
Json ToJson(const PowertrainParams& p);
Json ToJson(const PlannerConfig& p);
Json ToJson(const AccConfig& p);
Json ToJson(const SimConfig& p);
Json ToJson(const SignalTiming& p);
Json ToJson(const IdmParams& p);
Json ToJson(const Scenario& p);
Json ToJson(const TruncatedNormal& p);

void FromJson(const Json& j, VehicleParams* p);
void FromJson(const Json& j, PowertrainParams* p);
void FromJson(const Json& j, PlannerConfig* p);
void FromJson(const Json& j, AccConfig* p);
void FromJson(const Json& j, SimConfig* p);
void FromJson(const Json& j, SignalTiming* p);
void FromJson(const Json& j, IdmParams* p);
void FromJson(const Json& j, Scenario* p);
void FromJson(const Json& j, TruncatedNormal* p);
void FromJson(const Json& j, TrafficDistribution* p);

/// Everything a run needs besides the cost-map artifact.
struct AppConfig {
  VehicleParams vehicle;
  PowertrainParams powertrain;
  RouteSpec route;
  HistoricalSpat hist;
  TrafficDistribution traffic;
  PlannerConfig planner;         // receding-horizon closed-loop profile
  PlannerConfig global_planner;  // whole-route closed-loop profile
  AccConfig acc;
  SimConfig sim;
  CostMapGrids cost_map_grids;
  std::string cost_map_path = "costmap.bin";
  int history_samples = 720;
  std::uint64_t history_seed = 20240601;

  void Validate() const;
};

/// Reference corridor: 2500 m, 8 fixed-time intersections, flat road.
AppConfig DefaultConfig();

/// Defaults overlaid with the JSON document at `path`. Relative CSV profile
/// paths resolve against the config file's directory.
AppConfig LoadConfig(const std::string& path);
AppConfig ConfigFromJson(const Json& doc, const std::string& base_dir);

Json ToJson(const AppConfig& config);

}  // namespace eco
