#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "eco/sim.h"
#include "json.hpp"

namespace eco {

// Unit conversions used by every reported metric.
inline constexpr double kMetersPerMile = 1609.344;
inline constexpr double kKwhPerGallon = 33.7;  // gasoline gallon equivalent
inline constexpr double kJoulesPerKwh = 3.6e6;

/// Miles per gallon equivalent: distance / (fuel + electricity / 33.7).
/// Throws ZeroEnergy when the energy denominator is not positive and
/// InvalidParams when the distance is not positive.
double Mpge(double fuel_gal, double elec_kwh, double distance_mi);

/// Positive wheel work over one step, max(T_w, 0)·ds / R_w.
double WheelEnergyCostVariant(double v, double wheel_torque,
                              const VehicleParams& vehicle, double ds = 1.0);

struct EpisodeMetrics {
  std::uint64_t seed = 0;
  std::string mode;
  bool ok = true;          // false when the episode failed to run
  std::string error;
  double fuel_gal = 0.0;
  double elec_kwh = 0.0;
  double distance_mi = 0.0;
  double travel_time = 0.0;  // s
  double mpge = 0.0;
  double final_soc = 0.0;
  double battery_energy_j = 0.0;
  int red_violations = 0;
  int gap_violations = 0;
  int accel_violations = 0;

  int violations() const {
    return red_violations + gap_violations + accel_violations;
  }
};

EpisodeMetrics ComputeMetrics(const SimTrace& trace);

struct Distribution {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  double min = 0.0;
  double max = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
};

/// Order-independent summary; quantiles interpolate order statistics.
Distribution Summarize(std::vector<double> values);

struct MonteCarloSummary {
  int episodes = 0;
  int failed = 0;
  int violations = 0;
  Distribution mpge;
  Distribution travel_time;
  Distribution final_soc;
};

struct MonteCarloResult {
  std::vector<EpisodeMetrics> episodes;  // sorted by seed
  MonteCarloSummary summary;
};

/// Runs one episode per seed on SampleScenario(hist, traffic, seed);
/// per-episode failures are recorded, not thrown.
MonteCarloResult MonteCarlo(const SimConfig& base, const SimArtifacts& artifacts,
                            const HistoricalSpat& hist,
                            const TrafficDistribution& traffic,
                            const std::vector<std::uint64_t>& seeds);

MonteCarloSummary SummarizeEpisodes(const std::vector<EpisodeMetrics>& episodes);

void WriteMetricsCsv(const std::vector<EpisodeMetrics>& episodes,
                     std::ostream& out);
nlohmann::json SummaryJson(const MonteCarloSummary& summary);

struct PairedDelta {
  std::uint64_t seed = 0;
  double mpge_a = 0.0;
  double mpge_b = 0.0;
  double travel_time_a = 0.0;
  double travel_time_b = 0.0;
  double final_soc_a = 0.0;
  double final_soc_b = 0.0;
  double elec_kwh_a = 0.0;
  double elec_kwh_b = 0.0;
  double d_mpge = 0.0;         // a - b
  double d_travel_time = 0.0;  // a - b
};

struct CompareResult {
  std::vector<PairedDelta> pairs;  // sorted by seed; only seeds where both ran
  double mean_mpge_a = 0.0;
  double mean_mpge_b = 0.0;
  double mean_travel_time_a = 0.0;
  double mean_travel_time_b = 0.0;
  double mpge_gain_pct = 0.0;         // (mean a / mean b - 1)·100
  double travel_time_change_pct = 0.0;
  int violations_a = 0;
  int violations_b = 0;
  int failed = 0;
};

/// Paired comparison over shared seeds; per-seed deltas are a - b.
CompareResult Compare(const MonteCarloResult& a, const MonteCarloResult& b);

void WriteCompareCsv(const CompareResult& result, std::ostream& out);
nlohmann::json CompareJson(const CompareResult& result);

}  // namespace eco
