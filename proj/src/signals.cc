#include "eco/signals.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "eco/errors.h"

namespace eco {

std::string_view ToString(Phase phase) {
  switch (phase) {
    case Phase::kRed: return "red";
    case Phase::kGreen: return "green";
    case Phase::kYellow: return "yellow";
  }
  return "unknown";
}

Phase PhaseFromString(std::string_view name) {
  if (name == "red") return Phase::kRed;
  if (name == "green") return Phase::kGreen;
  if (name == "yellow") return Phase::kYellow;
  throw Error(ErrorCode::kInvalidParams, "unknown phase " + std::string(name));
}

void SignalTiming::Validate() const {
  if (!(cycle > 0.0)) {
    throw Error(ErrorCode::kInvalidParams, "cycle length must be positive");
  }
  if (!(red + yellow > 0.0) || red < 0.0 || yellow < 0.0 ||
      red + yellow > cycle) {
    throw Error(ErrorCode::kInvalidParams,
                "need 0 < red + yellow <= cycle");
  }
  if (offset < 0.0 || offset >= cycle) {
    throw Error(ErrorCode::kInvalidParams, "offset must be in [0, cycle)");
  }
}

void HistoricalSpat::Validate() const {
  if (!(eta >= 0.0 && eta <= 100.0)) {
    throw Error(ErrorCode::kInvalidParams, "percentile level must be in [0,100]");
  }
  for (const auto& s : intersections) {
    for (double r : s.red_samples) {
      if (r < 0.0 || r >= s.cycle) {
        throw Error(ErrorCode::kInvalidParams,
                    "red samples must lie in [0, cycle)");
      }
    }
  }
}

SignalTiming HistoricalSpat::NominalTiming(std::size_t n, double red) const {
  const auto& s = intersections.at(n);
  return SignalTiming{s.cycle, red, s.yellow,
                      CycleClock(0.0, s.nominal_offset, s.cycle)};
}

double CycleClock(double t_arr, double offset, double cycle) {
  double r = std::fmod(t_arr + offset, cycle);
  if (r < 0.0) r += cycle;
  // fmod of a value a hair below a negative multiple can round up to cycle.
  if (r >= cycle) r = 0.0;
  return r;
}

bool InfeasibleDownstream(double arrival, const SignalTiming& spec,
                          double red_est) {
  return CycleClock(arrival, spec.offset, spec.cycle) <= red_est;
}

bool InfeasibleFirst(double arrival, const LiveSpat& live,
                     const SignalTiming& spec, double red_est) {
  const double st = live.remaining;
  const bool later = arrival > st;
  const double clock = later ? CycleClock(arrival - st, 0.0, spec.cycle) : 0.0;
  switch (live.phase) {
    case Phase::kRed:
      return !later || clock >= spec.cycle - red_est;
    case Phase::kGreen:
      return later && clock <= red_est;
    case Phase::kYellow:
      return !later || clock <= red_est;
  }
  return true;
}

double EstimateRed(const HistoricalSpat& hist, std::size_t intersection,
                   double eta) {
  const auto& samples = hist.intersections.at(intersection).red_samples;
  if (samples.empty()) {
    throw Error(ErrorCode::kEmptyHistory,
                "no red-duration history for intersection " +
                    std::to_string(intersection));
  }
  std::vector<double> sorted(samples);
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) *
                   std::clamp(eta, 0.0, 100.0) / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double EstimateRed(const HistoricalSpat& hist, std::size_t intersection) {
  return EstimateRed(hist, intersection, hist.eta);
}

Phase PhaseAt(const SignalTiming& s, double t) {
  const double c = CycleClock(t, s.offset, s.cycle);
  if (c < s.red) return Phase::kRed;
  if (c < s.cycle - s.yellow) return Phase::kGreen;
  return Phase::kYellow;
}

LiveSpat LiveSpatAt(const SignalTiming& s, double t, int intersection) {
  const double c = CycleClock(t, s.offset, s.cycle);
  LiveSpat live;
  live.intersection = intersection;
  if (c < s.red) {
    live.phase = Phase::kRed;
    live.remaining = s.red - c;
  } else if (c < s.cycle - s.yellow) {
    live.phase = Phase::kGreen;
    live.remaining = s.cycle - s.yellow - c;
  } else {
    live.phase = Phase::kYellow;
    live.remaining = s.cycle - c;
  }
  return live;
}

void SynthesizeHistory(HistoricalSpat* hist, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& s : hist->intersections) {
    s.red_samples.clear();
    for (int i = 0; i < count; ++i) {
      s.red_samples.push_back(SampleTruncatedNormal(s.red, rng));
    }
  }
}

Scenario SampleSignalScenario(const HistoricalSpat& hist, std::uint64_t seed) {
  // Separate streams keep signal draws identical whether or not traffic is
  // sampled as well.
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0x5157A1);
  Scenario sc;
  sc.id = seed;
  for (const auto& s : hist.intersections) {
    SignalTiming timing;
    timing.cycle = s.cycle;
    timing.yellow = s.yellow;
    timing.red = SampleTruncatedNormal(s.red, rng);
    const double jitter = SampleTruncatedNormal(s.offset_jitter, rng);
    timing.offset = CycleClock(0.0, s.nominal_offset + jitter, s.cycle);
    sc.signals.push_back(timing);
  }
  return sc;
}

Scenario SampleScenario(const HistoricalSpat& hist,
                        const TrafficDistribution& traffic, std::uint64_t seed) {
  Scenario sc = SampleSignalScenario(hist, seed);
  std::mt19937_64 rng(seed * 0xD1B54A32D192ED03ULL + 0x7EAF1C);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> extra(
      traffic.mean_extra_headway > 0.0 ? 1.0 / traffic.mean_extra_headway
                                       : 1.0);
  double entry = 0.0;
  for (int i = 0; i < traffic.max_leads; ++i) {
    if (unit(rng) >= traffic.lead_probability) break;
    entry -= traffic.min_headway +
             (traffic.mean_extra_headway > 0.0 ? extra(rng) : 0.0);
    LeadSpawn lead;
    lead.behavior = traffic.behavior;
    lead.behavior.desired_speed = SampleTruncatedNormal(traffic.desired_speed, rng);
    lead.entry_time = entry;
    lead.entry_speed = lead.behavior.desired_speed;
    sc.leads.push_back(lead);
  }
  return sc;
}

}  // namespace eco
