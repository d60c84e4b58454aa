#include "eco/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "eco/errors.h"

namespace eco {

double Mpge(double fuel_gal, double elec_kwh, double distance_mi) {
  if (!(distance_mi > 0.0)) {
    throw Error(ErrorCode::kInvalidParams, "distance must be positive");
  }
  const double gallons = fuel_gal + elec_kwh / kKwhPerGallon;
  if (!(gallons > 0.0)) {
    throw Error(ErrorCode::kZeroEnergy, "no net energy consumed");
  }
  return distance_mi / gallons;
}

double WheelEnergyCostVariant(double v, double wheel_torque,
                              const VehicleParams& vehicle, double ds) {
  return WheelEnergyCost(v, wheel_torque, vehicle, ds);
}

EpisodeMetrics ComputeMetrics(const SimTrace& trace) {
  EpisodeMetrics m;
  m.seed = trace.seed;
  m.mode = std::string(ToString(trace.mode));
  m.fuel_gal = trace.totals.fuel_energy / (kKwhPerGallon * kJoulesPerKwh);
  m.elec_kwh = trace.totals.battery_energy / kJoulesPerKwh;
  m.battery_energy_j = trace.totals.battery_energy;
  m.distance_mi = trace.totals.distance / kMetersPerMile;
  m.travel_time = trace.totals.travel_time;
  m.final_soc = trace.totals.final_soc;
  m.mpge = Mpge(m.fuel_gal, m.elec_kwh, m.distance_mi);
  for (const auto& v : trace.violations) {
    switch (v.kind) {
      case ViolationKind::kGap: ++m.gap_violations; break;
      case ViolationKind::kRedLight: ++m.red_violations; break;
      case ViolationKind::kAccel: ++m.accel_violations; break;
    }
  }
  return m;
}

namespace {

double Quantile(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

nlohmann::json DistributionJson(const Distribution& d) {
  return {{"mean", d.mean}, {"median", d.median}, {"std", d.std},
          {"min", d.min},   {"max", d.max},       {"q05", d.q05},
          {"q25", d.q25},   {"q75", d.q75},       {"q95", d.q95}};
}

std::string Num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

Distribution Summarize(std::vector<double> values) {
  Distribution d;
  if (values.empty()) return d;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  d.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - d.mean) * (v - d.mean);
  d.std = values.size() > 1 ? std::sqrt(ss / (values.size() - 1.0)) : 0.0;
  d.min = values.front();
  d.max = values.back();
  d.median = Quantile(values, 0.5);
  d.q05 = Quantile(values, 0.05);
  d.q25 = Quantile(values, 0.25);
  d.q75 = Quantile(values, 0.75);
  d.q95 = Quantile(values, 0.95);
  return d;
}

MonteCarloSummary SummarizeEpisodes(const std::vector<EpisodeMetrics>& episodes) {
  MonteCarloSummary s;
  std::vector<double> mpge;
  std::vector<double> time;
  std::vector<double> soc;
  for (const auto& e : episodes) {
    ++s.episodes;
    if (!e.ok) {
      ++s.failed;
      continue;
    }
    s.violations += e.violations();
    mpge.push_back(e.mpge);
    time.push_back(e.travel_time);
    soc.push_back(e.final_soc);
  }
  s.mpge = Summarize(mpge);
  s.travel_time = Summarize(time);
  s.final_soc = Summarize(soc);
  return s;
}

MonteCarloResult MonteCarlo(const SimConfig& base, const SimArtifacts& artifacts,
                            const HistoricalSpat& hist,
                            const TrafficDistribution& traffic,
                            const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) {
    throw Error(ErrorCode::kInvalidParams, "need at least one episode");
  }
  std::vector<std::uint64_t> order(seeds);
  std::sort(order.begin(), order.end());
  MonteCarloResult result;
  for (std::uint64_t seed : order) {
    SimConfig cfg = base;
    cfg.seed = seed;
    EpisodeMetrics m;
    try {
      m = ComputeMetrics(RunEpisode(cfg, SampleScenario(hist, traffic, seed),
                                    artifacts));
    } catch (const Error& e) {
      m = EpisodeMetrics{};
      m.seed = seed;
      m.mode = std::string(ToString(base.mode));
      m.ok = false;
      m.error = e.what();
    }
    result.episodes.push_back(m);
  }
  result.summary = SummarizeEpisodes(result.episodes);
  return result;
}

void WriteMetricsCsv(const std::vector<EpisodeMetrics>& episodes,
                     std::ostream& out) {
  out << "seed,mode,ok,fuel_gal,elec_kwh,distance_mi,travel_time,mpge,"
         "final_soc,red_violations,gap_violations,accel_violations,error\n";
  for (const auto& e : episodes) {
    std::string err = e.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << e.seed << ',' << e.mode << ',' << (e.ok ? 1 : 0) << ','
        << Num(e.fuel_gal) << ',' << Num(e.elec_kwh) << ','
        << Num(e.distance_mi) << ',' << Num(e.travel_time) << ','
        << Num(e.mpge) << ',' << Num(e.final_soc) << ',' << e.red_violations
        << ',' << e.gap_violations << ',' << e.accel_violations << ',' << err
        << "\n";
  }
}

nlohmann::json SummaryJson(const MonteCarloSummary& s) {
  return {{"episodes", s.episodes},
          {"failed", s.failed},
          {"violations", s.violations},
          {"mpge", DistributionJson(s.mpge)},
          {"travel_time", DistributionJson(s.travel_time)},
          {"final_soc", DistributionJson(s.final_soc)}};
}

CompareResult Compare(const MonteCarloResult& a, const MonteCarloResult& b) {
  CompareResult r;
  std::map<std::uint64_t, const EpisodeMetrics*> by_seed;
  for (const auto& e : b.episodes) by_seed[e.seed] = &e;
  for (const auto& ea : a.episodes) {
    const auto it = by_seed.find(ea.seed);
    if (it == by_seed.end()) continue;
    const EpisodeMetrics& eb = *it->second;
    if (!ea.ok || !eb.ok) {
      ++r.failed;
      continue;
    }
    r.violations_a += ea.violations();
    r.violations_b += eb.violations();
    PairedDelta d;
    d.seed = ea.seed;
    d.mpge_a = ea.mpge;
    d.mpge_b = eb.mpge;
    d.travel_time_a = ea.travel_time;
    d.travel_time_b = eb.travel_time;
    d.final_soc_a = ea.final_soc;
    d.final_soc_b = eb.final_soc;
    d.elec_kwh_a = ea.elec_kwh;
    d.elec_kwh_b = eb.elec_kwh;
    d.d_mpge = ea.mpge - eb.mpge;
    d.d_travel_time = ea.travel_time - eb.travel_time;
    r.pairs.push_back(d);
  }
  std::sort(r.pairs.begin(), r.pairs.end(),
            [](const PairedDelta& x, const PairedDelta& y) { return x.seed < y.seed; });
  if (!r.pairs.empty()) {
    const double n = static_cast<double>(r.pairs.size());
    for (const auto& d : r.pairs) {
      r.mean_mpge_a += d.mpge_a / n;
      r.mean_mpge_b += d.mpge_b / n;
      r.mean_travel_time_a += d.travel_time_a / n;
      r.mean_travel_time_b += d.travel_time_b / n;
    }
    r.mpge_gain_pct = (r.mean_mpge_a / r.mean_mpge_b - 1.0) * 100.0;
    r.travel_time_change_pct =
        (r.mean_travel_time_a / r.mean_travel_time_b - 1.0) * 100.0;
  }
  return r;
}

void WriteCompareCsv(const CompareResult& r, std::ostream& out) {
  out << "seed,mpge_a,mpge_b,d_mpge,travel_time_a,travel_time_b,"
         "d_travel_time,final_soc_a,final_soc_b,elec_kwh_a,elec_kwh_b\n";
  for (const auto& d : r.pairs) {
    out << d.seed << ',' << Num(d.mpge_a) << ',' << Num(d.mpge_b) << ','
        << Num(d.d_mpge) << ',' << Num(d.travel_time_a) << ','
        << Num(d.travel_time_b) << ',' << Num(d.d_travel_time) << ','
        << Num(d.final_soc_a) << ',' << Num(d.final_soc_b) << ','
        << Num(d.elec_kwh_a) << ',' << Num(d.elec_kwh_b) << "\n";
  }
}

nlohmann::json CompareJson(const CompareResult& r) {
  return {{"pairs", r.pairs.size()},
          {"failed", r.failed},
          {"mean_mpge_a", r.mean_mpge_a},
          {"mean_mpge_b", r.mean_mpge_b},
          {"mean_travel_time_a", r.mean_travel_time_a},
          {"mean_travel_time_b", r.mean_travel_time_b},
          {"mpge_gain_pct", r.mpge_gain_pct},
          {"travel_time_change_pct", r.travel_time_change_pct},
          {"violations_a", r.violations_a},
          {"violations_b", r.violations_b}};
}

}  // namespace eco
