#include "eco/interp.h"

#include <algorithm>
#include <cmath>

#include "eco/errors.h"

namespace eco {

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kNonPositiveNextSpeed: return "NonPositiveNextSpeed";
    case ErrorCode::kTorqueOutOfRange: return "TorqueOutOfRange";
    case ErrorCode::kPowerEnvelopeExceeded: return "PowerEnvelopeExceeded";
    case ErrorCode::kInfeasibleDemand: return "InfeasibleDemand";
    case ErrorCode::kOutOfHull: return "OutOfHull";
    case ErrorCode::kEmptyHistory: return "EmptyHistory";
    case ErrorCode::kNoFeasiblePath: return "NoFeasiblePath";
    case ErrorCode::kStalePolicyBeyondHorizon: return "StalePolicyBeyondHorizon";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kZeroEnergy: return "ZeroEnergy";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

PiecewiseLinear::PiecewiseLinear(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  if (xs_.empty() || xs_.size() != ys_.size()) {
    throw Error(ErrorCode::kInvalidParams,
                "piecewise-linear table needs matching non-empty columns");
  }
  for (std::size_t i = 1; i < xs_.size(); ++i) {
    if (!(xs_[i] > xs_[i - 1])) {
      throw Error(ErrorCode::kInvalidParams,
                  "piecewise-linear breakpoints must be strictly increasing");
    }
  }
}

double PiecewiseLinear::operator()(double x) const {
  if (x <= xs_.front()) return ys_.front();
  if (x >= xs_.back()) return ys_.back();
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
  const double w = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
  return ys_[i - 1] + w * (ys_[i] - ys_[i - 1]);
}

UniformGrid UniformGrid::FromStep(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) {
    throw Error(ErrorCode::kInvalidParams, "bad uniform grid specification");
  }
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  return UniformGrid{lo, lo + (n - 1) * step, n};
}

std::vector<double> UniformGrid::points() const {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = at(i);
  return out;
}

bool UniformGrid::Locate(double x, int* index, double* frac) const {
  if (count == 1) {
    if (std::abs(x - lo) > 1e-12 * std::max(1.0, std::abs(lo))) return false;
    *index = 0;
    *frac = 0.0;
    return true;
  }
  return LocateOnAxis(x, lo, hi, count, index, frac);
}

}  // namespace eco
