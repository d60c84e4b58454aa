#include "eco/config.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "eco/errors.h"

namespace eco {
namespace {

template <typename T>
void Get(const Json& j, const char* key, T* out) {
  const auto it = j.find(key);
  if (it != j.end() && !it->is_null()) *out = it->get<T>();
}

Json TableJson(const PiecewiseLinear& f) {
  return {{"x", f.xs()}, {"y", f.ys()}};
}

void GetTable(const Json& j, const char* key, PiecewiseLinear* out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  *out = PiecewiseLinear(it->at("x").get<std::vector<double>>(),
                         it->at("y").get<std::vector<double>>());
}

Json MachineJson(const ElectricMachine& m) {
  return {{"torque_max", m.torque_max},       {"power_max", m.power_max},
          {"regen_power_max", m.regen_power_max}, {"eta_peak", m.eta_peak},
          {"eta_min", m.eta_min},             {"torque_ref", m.torque_ref},
          {"speed_ref", m.speed_ref},         {"torque_sweet", m.torque_sweet},
          {"speed_sweet", m.speed_sweet},     {"k_torque", m.k_torque},
          {"k_speed", m.k_speed}};
}

void MachineFromJson(const Json& j, ElectricMachine* m) {
  Get(j, "torque_max", &m->torque_max);
  Get(j, "power_max", &m->power_max);
  Get(j, "regen_power_max", &m->regen_power_max);
  Get(j, "eta_peak", &m->eta_peak);
  Get(j, "eta_min", &m->eta_min);
  Get(j, "torque_ref", &m->torque_ref);
  Get(j, "speed_ref", &m->speed_ref);
  Get(j, "torque_sweet", &m->torque_sweet);
  Get(j, "speed_sweet", &m->speed_sweet);
  Get(j, "k_torque", &m->k_torque);
  Get(j, "k_speed", &m->k_speed);
}

Json GridJson(const UniformGrid& g) {
  return {{"lo", g.lo}, {"hi", g.hi}, {"count", g.count}};
}

void GridFromJson(const Json& j, UniformGrid* g) {
  Get(j, "lo", &g->lo);
  Get(j, "hi", &g->hi);
  Get(j, "count", &g->count);
}

std::string Resolve(const std::string& path, const std::string& base_dir) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

std::uint64_t Fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string HashToHex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

Json ToJson(const VehicleParams& p) {
  return {{"mass", p.mass},
          {"wheel_radius", p.wheel_radius},
          {"gravity", p.gravity},
          {"air_density", p.air_density},
          {"frontal_area", p.frontal_area},
          {"rolling_resistance", p.rolling_resistance},
          {"drag_coefficient", p.drag_coefficient}};
}

void FromJson(const Json& j, VehicleParams* p) {
  Get(j, "mass", &p->mass);
  Get(j, "wheel_radius", &p->wheel_radius);
  Get(j, "gravity", &p->gravity);
  Get(j, "air_density", &p->air_density);
  Get(j, "frontal_area", &p->frontal_area);
  Get(j, "rolling_resistance", &p->rolling_resistance);
  Get(j, "drag_coefficient", &p->drag_coefficient);
}

Json ToJson(const PowertrainParams& p) {
  const Engine& e = p.engine;
  return {
      {"gear_ratios", p.gears.ratios},
      {"upshift_speeds", p.gears.upshift_speeds},
      {"clutch_efficiency", p.clutch_efficiency},
      {"motor", MachineJson(p.motor)},
      {"hsg", MachineJson(p.hsg)},
      {"engine",
       {{"idle_speed", e.idle_speed},
        {"max_speed", e.max_speed},
        {"torque_peak", e.torque_peak},
        {"peak_speed", e.peak_speed},
        {"torque_taper", e.torque_taper},
        {"indicated_efficiency", e.indicated_efficiency},
        {"friction_linear", e.friction_linear},
        {"friction_quadratic", e.friction_quadratic}}},
      {"battery",
       {{"open_circuit_voltage", TableJson(p.battery.open_circuit_voltage)},
        {"internal_resistance", p.battery.internal_resistance},
        {"capacity", p.battery.capacity}}},
      {"aux_power", p.aux_power},
      {"friction_brake_max", p.friction_brake_max},
      {"equivalence_factor", TableJson(p.equivalence_factor)},
      {"motor_candidates", p.motor_candidates}};
}

void FromJson(const Json& j, PowertrainParams* p) {
  Get(j, "gear_ratios", &p->gears.ratios);
  Get(j, "upshift_speeds", &p->gears.upshift_speeds);
  Get(j, "clutch_efficiency", &p->clutch_efficiency);
  if (j.contains("motor")) MachineFromJson(j["motor"], &p->motor);
  if (j.contains("hsg")) MachineFromJson(j["hsg"], &p->hsg);
  if (j.contains("engine")) {
    const Json& e = j["engine"];
    Get(e, "idle_speed", &p->engine.idle_speed);
    Get(e, "max_speed", &p->engine.max_speed);
    Get(e, "torque_peak", &p->engine.torque_peak);
    Get(e, "peak_speed", &p->engine.peak_speed);
    Get(e, "torque_taper", &p->engine.torque_taper);
    Get(e, "indicated_efficiency", &p->engine.indicated_efficiency);
    Get(e, "friction_linear", &p->engine.friction_linear);
    Get(e, "friction_quadratic", &p->engine.friction_quadratic);
  }
  if (j.contains("battery")) {
    const Json& b = j["battery"];
    GetTable(b, "open_circuit_voltage", &p->battery.open_circuit_voltage);
    Get(b, "internal_resistance", &p->battery.internal_resistance);
    Get(b, "capacity", &p->battery.capacity);
  }
  Get(j, "aux_power", &p->aux_power);
  Get(j, "friction_brake_max", &p->friction_brake_max);
  GetTable(j, "equivalence_factor", &p->equivalence_factor);
  Get(j, "motor_candidates", &p->motor_candidates);
}

Json ToJson(const PlannerConfig& p) {
  return {{"horizon", p.horizon},
          {"step", p.step},
          {"speed_floor", p.speed_floor},
          {"num_speeds", p.num_speeds},
          {"num_times", p.num_times},
          {"num_torques", p.num_torques},
          {"torque_min", p.torque_min},
          {"torque_max", p.torque_max},
          {"time_weight", p.time_weight},
          {"slack_weight", p.slack_weight},
          {"desired_time", p.desired_time},
          {"average_speed", p.average_speed},
          {"terminal_scenarios", p.terminal_scenarios},
          {"terminal_seed", p.terminal_seed},
          {"max_delay", p.max_delay},
          {"route_max_delay", p.route_max_delay},
          {"time_margin", p.time_margin},
          {"min_time_window", p.min_time_window},
          {"integration_step", p.integration_step},
          {"corners", p.corners == CornerRule::kReject ? "reject" : "renormalize"},
          {"accel_min", p.accel.min},
          {"accel_max", p.accel.max},
          {"energy", p.energy == EnergyCost::kPowerMap ? "power_map"
                                                       : "wheel_energy"}};
}

void FromJson(const Json& j, PlannerConfig* p) {
  Get(j, "horizon", &p->horizon);
  Get(j, "step", &p->step);
  Get(j, "speed_floor", &p->speed_floor);
  Get(j, "num_speeds", &p->num_speeds);
  Get(j, "num_times", &p->num_times);
  Get(j, "num_torques", &p->num_torques);
  Get(j, "torque_min", &p->torque_min);
  Get(j, "torque_max", &p->torque_max);
  Get(j, "time_weight", &p->time_weight);
  Get(j, "slack_weight", &p->slack_weight);
  Get(j, "desired_time", &p->desired_time);
  Get(j, "average_speed", &p->average_speed);
  Get(j, "terminal_scenarios", &p->terminal_scenarios);
  Get(j, "terminal_seed", &p->terminal_seed);
  Get(j, "max_delay", &p->max_delay);
  Get(j, "route_max_delay", &p->route_max_delay);
  Get(j, "time_margin", &p->time_margin);
  Get(j, "min_time_window", &p->min_time_window);
  Get(j, "integration_step", &p->integration_step);
  if (j.contains("corners")) {
    const auto c = j["corners"].get<std::string>();
    if (c == "reject") {
      p->corners = CornerRule::kReject;
    } else if (c == "renormalize") {
      p->corners = CornerRule::kRenormalize;
    } else {
      throw Error(ErrorCode::kInvalidParams, "unknown corner rule " + c);
    }
  }
  Get(j, "accel_min", &p->accel.min);
  Get(j, "accel_max", &p->accel.max);
  if (j.contains("energy")) {
    const auto e = j["energy"].get<std::string>();
    if (e == "power_map") {
      p->energy = EnergyCost::kPowerMap;
    } else if (e == "wheel_energy") {
      p->energy = EnergyCost::kWheelEnergy;
    } else {
      throw Error(ErrorCode::kInvalidParams, "unknown energy cost " + e);
    }
  }
}

Json ToJson(const AccConfig& p) {
  return {{"kp", p.kp},
          {"ki", p.ki},
          {"integral_limit", p.integral_limit},
          {"tracking_accel_min", p.tracking.min},
          {"tracking_accel_max", p.tracking.max},
          {"min_gap", p.min_gap},
          {"time_headway", p.time_headway},
          {"gap_gain", p.gap_gain},
          {"gap_speed_gain", p.gap_speed_gain},
          {"gap_margin", p.gap_margin},
          {"comfort_decel", p.comfort_decel},
          {"max_decel", p.max_decel},
          {"stop_tolerance", p.stop_tolerance},
          {"approach_decel", p.approach_decel},
          {"box_length", p.box_length},
          {"physical_decel", p.physical_decel},
          {"physical_accel", p.physical_accel}};
}

void FromJson(const Json& j, AccConfig* p) {
  Get(j, "kp", &p->kp);
  Get(j, "ki", &p->ki);
  Get(j, "integral_limit", &p->integral_limit);
  Get(j, "tracking_accel_min", &p->tracking.min);
  Get(j, "tracking_accel_max", &p->tracking.max);
  Get(j, "min_gap", &p->min_gap);
  Get(j, "time_headway", &p->time_headway);
  Get(j, "gap_gain", &p->gap_gain);
  Get(j, "gap_speed_gain", &p->gap_speed_gain);
  Get(j, "gap_margin", &p->gap_margin);
  Get(j, "comfort_decel", &p->comfort_decel);
  Get(j, "max_decel", &p->max_decel);
  Get(j, "stop_tolerance", &p->stop_tolerance);
  Get(j, "approach_decel", &p->approach_decel);
  Get(j, "box_length", &p->box_length);
  Get(j, "physical_decel", &p->physical_decel);
  Get(j, "physical_accel", &p->physical_accel);
}

Json ToJson(const SimConfig& p) {
  return {{"control_period", p.control_period},
          {"replan_period", p.replan_period},
          {"latency", p.latency},
          {"measured_latency", p.measured_latency},
          {"mode", std::string(ToString(p.mode))},
          {"initial_soc", p.initial_soc},
          {"initial_speed", p.initial_speed},
          {"seed", p.seed},
          {"timeout", p.timeout}};
}

void FromJson(const Json& j, SimConfig* p) {
  Get(j, "control_period", &p->control_period);
  Get(j, "replan_period", &p->replan_period);
  Get(j, "latency", &p->latency);
  Get(j, "measured_latency", &p->measured_latency);
  if (j.contains("mode")) {
    p->mode = ControllerModeFromString(j["mode"].get<std::string>());
  }
  Get(j, "initial_soc", &p->initial_soc);
  Get(j, "initial_speed", &p->initial_speed);
  Get(j, "seed", &p->seed);
  Get(j, "timeout", &p->timeout);
}

Json ToJson(const SignalTiming& p) {
  return {{"cycle", p.cycle}, {"red", p.red}, {"yellow", p.yellow},
          {"offset", p.offset}};
}

void FromJson(const Json& j, SignalTiming* p) {
  Get(j, "cycle", &p->cycle);
  Get(j, "red", &p->red);
  Get(j, "yellow", &p->yellow);
  Get(j, "offset", &p->offset);
}

Json ToJson(const IdmParams& p) {
  return {{"desired_speed", p.desired_speed}, {"max_accel", p.max_accel},
          {"comfort_decel", p.comfort_decel}, {"min_gap", p.min_gap},
          {"time_headway", p.time_headway},   {"exponent", p.exponent},
          {"max_decel", p.max_decel},         {"length", p.length}};
}

void FromJson(const Json& j, IdmParams* p) {
  Get(j, "desired_speed", &p->desired_speed);
  Get(j, "max_accel", &p->max_accel);
  Get(j, "comfort_decel", &p->comfort_decel);
  Get(j, "min_gap", &p->min_gap);
  Get(j, "time_headway", &p->time_headway);
  Get(j, "exponent", &p->exponent);
  Get(j, "max_decel", &p->max_decel);
  Get(j, "length", &p->length);
}

Json ToJson(const TruncatedNormal& p) {
  return {{"mean", p.mean}, {"std", p.std}, {"lo", p.lo}, {"hi", p.hi}};
}

void FromJson(const Json& j, TruncatedNormal* p) {
  Get(j, "mean", &p->mean);
  Get(j, "std", &p->std);
  Get(j, "lo", &p->lo);
  Get(j, "hi", &p->hi);
}

void FromJson(const Json& j, TrafficDistribution* p) {
  Get(j, "max_leads", &p->max_leads);
  Get(j, "lead_probability", &p->lead_probability);
  Get(j, "min_headway", &p->min_headway);
  Get(j, "mean_extra_headway", &p->mean_extra_headway);
  if (j.contains("desired_speed")) FromJson(j["desired_speed"], &p->desired_speed);
  if (j.contains("behavior")) FromJson(j["behavior"], &p->behavior);
}

Json ToJson(const Scenario& p) {
  Json signals = Json::array();
  for (const auto& s : p.signals) signals.push_back(ToJson(s));
  Json leads = Json::array();
  for (const auto& l : p.leads) {
    leads.push_back({{"entry_time", l.entry_time},
                     {"entry_speed", l.entry_speed},
                     {"behavior", ToJson(l.behavior)}});
  }
  return {{"id", p.id}, {"signals", signals}, {"leads", leads}};
}

void FromJson(const Json& j, Scenario* p) {
  Get(j, "id", &p->id);
  if (j.contains("signals")) {
    p->signals.clear();
    for (const auto& s : j["signals"]) {
      SignalTiming t;
      FromJson(s, &t);
      t.Validate();
      p->signals.push_back(t);
    }
  }
  if (j.contains("leads")) {
    p->leads.clear();
    for (const auto& l : j["leads"]) {
      LeadSpawn spawn;
      Get(l, "entry_time", &spawn.entry_time);
      Get(l, "entry_speed", &spawn.entry_speed);
      if (l.contains("behavior")) FromJson(l["behavior"], &spawn.behavior);
      p->leads.push_back(spawn);
    }
  }
}

void AppConfig::Validate() const {
  vehicle.Validate();
  powertrain.Validate();
  route.Validate();
  hist.Validate();
  planner.Validate();
  global_planner.Validate();
  acc.Validate();
  sim.Validate();
  if (hist.intersections.size() != route.intersections.size()) {
    throw Error(ErrorCode::kInvalidParams,
                "signal statistics must match the intersection list");
  }
}

AppConfig DefaultConfig() {
  AppConfig c;
  const std::vector<double> positions{250, 520, 800, 1080, 1350, 1650, 1950, 2250};
  c.route = RouteSpec::Uniform(2500.0, 1.0, 15.6, positions);

  const double cycles[] = {60, 80, 70, 90, 60, 100, 75, 85};
  const double reds[] = {30, 38, 33, 42, 30, 45, 35, 40};
  const double offsets[] = {0, 25, 10, 40, 15, 60, 5, 30};
  for (int n = 0; n < 8; ++n) {
    IntersectionStats s;
    s.cycle = cycles[n];
    s.yellow = 3.0;
    s.red = {reds[n], 4.0, reds[n] - 10.0,
             std::min(reds[n] + 10.0, cycles[n] - s.yellow - 5.0)};
    s.nominal_offset = offsets[n];
    s.offset_jitter = {0.0, 2.0, -6.0, 6.0};
    c.hist.intersections.push_back(s);
  }
  c.hist.eta = 90.0;
  SynthesizeHistory(&c.hist, c.history_samples, c.history_seed);

  // Closed-loop profile: coarser than the reference grid so a replan every
  // few seconds stays cheap on one core.
  c.planner.step = 10.0;
  c.planner.num_speeds = 20;
  c.planner.num_times = 30;
  c.planner.num_torques = 31;
  c.planner.torque_min = -1800.0;
  c.planner.torque_max = 1500.0;
  c.global_planner = c.planner;
  c.global_planner.num_times = 60;
  return c;
}

AppConfig ConfigFromJson(const Json& doc, const std::string& base_dir) {
  AppConfig c = DefaultConfig();
  if (doc.contains("vehicle")) FromJson(doc["vehicle"], &c.vehicle);
  if (doc.contains("powertrain")) FromJson(doc["powertrain"], &c.powertrain);
  if (doc.contains("route")) {
    const Json& r = doc["route"];
    double length = c.route.length;
    double step = c.route.step;
    double limit = 15.6;
    std::vector<double> positions;
    for (std::size_t n = 0; n < c.route.intersections.size(); ++n) {
      positions.push_back(c.route.intersection_position(n));
    }
    Get(r, "length", &length);
    Get(r, "step", &step);
    Get(r, "speed_limit", &limit);
    Get(r, "intersections", &positions);
    c.route = RouteSpec::Uniform(length, step, limit, positions);
    if (r.contains("grade_csv")) {
      ApplyProfile(ReadProfileCsv(Resolve(r["grade_csv"], base_dir)), step,
                   &c.route.grade);
    }
    if (r.contains("speed_limit_csv")) {
      ApplyProfile(ReadProfileCsv(Resolve(r["speed_limit_csv"], base_dir)),
                   step, &c.route.speed_limit);
    }
  }
  if (doc.contains("signals")) {
    const Json& s = doc["signals"];
    Get(s, "eta", &c.hist.eta);
    if (s.contains("hour_of_day") && !s["hour_of_day"].is_null()) {
      c.hist.hour_of_day = s["hour_of_day"].get<int>();
    }
    Get(s, "history_samples", &c.history_samples);
    Get(s, "history_seed", &c.history_seed);
    if (s.contains("intersections")) {
      c.hist.intersections.clear();
      for (const auto& js : s["intersections"]) {
        IntersectionStats st;
        Get(js, "cycle", &st.cycle);
        Get(js, "yellow", &st.yellow);
        if (js.contains("red")) FromJson(js["red"], &st.red);
        Get(js, "offset", &st.nominal_offset);
        if (js.contains("offset_jitter")) {
          FromJson(js["offset_jitter"], &st.offset_jitter);
        }
        Get(js, "red_samples", &st.red_samples);
        c.hist.intersections.push_back(st);
      }
    }
    // Intersections without a recorded history get a synthetic one.
    HistoricalSpat missing = c.hist;
    SynthesizeHistory(&missing, c.history_samples, c.history_seed);
    for (std::size_t n = 0; n < c.hist.intersections.size(); ++n) {
      if (c.hist.intersections[n].red_samples.empty()) {
        c.hist.intersections[n].red_samples = missing.intersections[n].red_samples;
      }
    }
  }
  if (doc.contains("traffic")) FromJson(doc["traffic"], &c.traffic);
  if (doc.contains("planner")) FromJson(doc["planner"], &c.planner);
  c.global_planner = c.planner;
  c.global_planner.num_times = DefaultConfig().global_planner.num_times;
  if (doc.contains("global_planner")) {
    FromJson(doc["global_planner"], &c.global_planner);
  }
  if (doc.contains("acc")) FromJson(doc["acc"], &c.acc);
  if (doc.contains("sim")) FromJson(doc["sim"], &c.sim);
  if (doc.contains("cost_map")) {
    const Json& m = doc["cost_map"];
    if (m.contains("path")) {
      c.cost_map_path = Resolve(m["path"].get<std::string>(), base_dir);
    }
    if (m.contains("speed")) GridFromJson(m["speed"], &c.cost_map_grids.speed);
    if (m.contains("torque")) GridFromJson(m["torque"], &c.cost_map_grids.torque);
    if (m.contains("soc")) GridFromJson(m["soc"], &c.cost_map_grids.soc);
  }
  c.Validate();
  return c;
}

AppConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIo, "malformed config " + path + ": " + e.what());
  }
  return ConfigFromJson(doc,
                        std::filesystem::path(path).parent_path().string());
}

Json ToJson(const AppConfig& c) {
  Json intersections = Json::array();
  for (const auto& s : c.hist.intersections) {
    intersections.push_back({{"cycle", s.cycle},
                             {"yellow", s.yellow},
                             {"red", ToJson(s.red)},
                             {"offset", s.nominal_offset},
                             {"offset_jitter", ToJson(s.offset_jitter)}});
  }
  std::vector<double> positions;
  for (std::size_t n = 0; n < c.route.intersections.size(); ++n) {
    positions.push_back(c.route.intersection_position(n));
  }
  Json signals = {{"eta", c.hist.eta},
                  {"history_samples", c.history_samples},
                  {"history_seed", c.history_seed},
                  {"intersections", intersections}};
  if (c.hist.hour_of_day) signals["hour_of_day"] = *c.hist.hour_of_day;
  return {{"vehicle", ToJson(c.vehicle)},
          {"powertrain", ToJson(c.powertrain)},
          {"route",
           {{"length", c.route.length},
            {"step", c.route.step},
            {"speed_limit", c.route.MaxSpeedLimit()},
            {"intersections", positions}}},
          {"signals", signals},
          {"traffic",
           {{"max_leads", c.traffic.max_leads},
            {"lead_probability", c.traffic.lead_probability},
            {"min_headway", c.traffic.min_headway},
            {"mean_extra_headway", c.traffic.mean_extra_headway},
            {"desired_speed", ToJson(c.traffic.desired_speed)},
            {"behavior", ToJson(c.traffic.behavior)}}},
          {"planner", ToJson(c.planner)},
          {"global_planner", ToJson(c.global_planner)},
          {"acc", ToJson(c.acc)},
          {"sim", ToJson(c.sim)},
          {"cost_map",
           {{"path", c.cost_map_path},
            {"speed", GridJson(c.cost_map_grids.speed)},
            {"torque", GridJson(c.cost_map_grids.torque)},
            {"soc", GridJson(c.cost_map_grids.soc)}}}};
}

}  // namespace eco
