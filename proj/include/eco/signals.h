#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace eco {

enum class Phase { kRed, kGreen, kYellow };

std::string_view ToString(Phase phase);
Phase PhaseFromString(std::string_view name);

/// Timing of one fixed-time signal. Red occupies the start of the cycle
/// clock, followed by green and then the yellow tail.
struct SignalTiming {
  double cycle = 60.0;   // ℓ_c, s
  double red = 30.0;     // ℓ_r, s
  double yellow = 3.0;   // s
  double offset = 0.0;   // cycle-initiation shift ℓ_{c,O} in [0, cycle)

  void Validate() const;
  double green() const { return cycle - red - yellow; }
};

/// Live phase of the next light as broadcast at a snapshot time.
struct LiveSpat {
  Phase phase = Phase::kGreen;
  double remaining = 0.0;  // s_t, seconds left in `phase`
  int intersection = 0;
};

/// Truncated normal N(mean, std) restricted to [lo, hi].
struct TruncatedNormal {
  double mean = 0.0;
  double std = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Statistical description of one intersection: fixed cycle and yellow,
/// uncertain red duration and cycle-initiation offset (nominal + jitter).
struct IntersectionStats {
  double cycle = 60.0;
  double yellow = 3.0;
  TruncatedNormal red{30.0, 4.0, 20.0, 40.0};
  double nominal_offset = 0.0;
  TruncatedNormal offset_jitter{0.0, 0.0, 0.0, 0.0};
  /// Empirical red-duration record used for percentile estimates.
  std::vector<double> red_samples;
};

/// Historical SPaT knowledge for every intersection on the corridor.
struct HistoricalSpat {
  std::vector<IntersectionStats> intersections;
  double eta = 90.0;  // percentile level of the red estimate
  /// Optional conditioning key (hour of day) carried with the record.
  std::optional<int> hour_of_day;

  void Validate() const;
  /// Timing with the nominal offset and the given red duration.
  SignalTiming NominalTiming(std::size_t n, double red) const;
};

/// Intelligent-driver-model behavior of a lead vehicle.
struct IdmParams {
  double desired_speed = 15.0;   // m/s
  double max_accel = 1.5;        // m/s^2
  double comfort_decel = 2.0;    // m/s^2
  double min_gap = 2.0;          // m
  double time_headway = 1.5;     // s
  double exponent = 4.0;
  double max_decel = 9.0;        // physical braking limit, m/s^2
  double length = 4.5;           // m
};

struct LeadSpawn {
  double entry_time = 0.0;   // s, <= 0: entered the corridor before the ego
  double entry_speed = 0.0;  // m/s
  IdmParams behavior;
};

/// Distribution of surrounding traffic. Leads enter the corridor start ahead
/// of the ego with exponential headways counted backwards from t = 0.
struct TrafficDistribution {
  int max_leads = 3;
  double lead_probability = 0.6;  // chance that each successive lead exists
  double min_headway = 6.0;       // s
  double mean_extra_headway = 20.0;  // s, exponential
  TruncatedNormal desired_speed{14.5, 1.0, 12.0, 16.5};
  IdmParams behavior;
};

/// One sampled traffic schedule: realized signal timings plus leads.
struct Scenario {
  std::uint64_t id = 0;
  std::vector<SignalTiming> signals;
  std::vector<LeadSpawn> leads;
};

/// R(t_arr + offset, cycle) in [0, cycle).
double CycleClock(double t_arr, double offset, double cycle);

/// Downstream-light predicate: arrival inside the estimated red window.
bool InfeasibleDownstream(double arrival, const SignalTiming& spec,
                          double red_est);

/// Next-light predicate from live SPaT; `arrival` is measured from the
/// snapshot time.
bool InfeasibleFirst(double arrival, const LiveSpat& live,
                     const SignalTiming& spec, double red_est);

/// Empirical η-percentile (linear interpolation between order statistics).
double EstimateRed(const HistoricalSpat& hist, std::size_t intersection,
                   double eta);
double EstimateRed(const HistoricalSpat& hist, std::size_t intersection);

/// Ground-truth phase of a realized signal at wall time t.
Phase PhaseAt(const SignalTiming& realized, double t);

/// Live SPaT (phase and time left in it) of a realized signal at time t.
LiveSpat LiveSpatAt(const SignalTiming& realized, double t, int intersection);

/// Fills `red_samples` of every intersection with `count` draws of its red
/// distribution (deterministic in `seed`).
void SynthesizeHistory(HistoricalSpat* hist, int count, std::uint64_t seed);

/// Deterministic scenario draw; the same seed always gives the same scenario.
Scenario SampleScenario(const HistoricalSpat& hist,
                        const TrafficDistribution& traffic, std::uint64_t seed);

/// Scenario draw without lead vehicles.
Scenario SampleSignalScenario(const HistoricalSpat& hist, std::uint64_t seed);

/// Draw from a truncated normal by rejection; degenerate when std == 0.
template <typename Rng>
double SampleTruncatedNormal(const TruncatedNormal& dist, Rng& rng);

}  // namespace eco

#include "eco/signals_inl.h"
