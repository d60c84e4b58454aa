#pragma once

#include <algorithm>
#include <random>

namespace eco {

template <typename Rng>
double SampleTruncatedNormal(const TruncatedNormal& dist, Rng& rng) {
  if (dist.std <= 0.0) return std::clamp(dist.mean, dist.lo, dist.hi);
  std::normal_distribution<double> normal(dist.mean, dist.std);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double x = normal(rng);
    if (x >= dist.lo && x <= dist.hi) return x;
  }
  return std::clamp(dist.mean, dist.lo, dist.hi);
}

}  // namespace eco
