#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace eco {

/// Piecewise-linear function of one variable, constant beyond the end points.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  /// Breakpoints must be strictly increasing and non-empty.
  PiecewiseLinear(std::vector<double> xs, std::vector<double> ys);

  double operator()(double x) const;

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  bool empty() const { return xs_.empty(); }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

/// Cell location on an evenly spaced axis [lo, hi] with `count` >= 2 nodes.
/// `u` is the continuous node coordinate (x - lo) / (hi - lo) * (count - 1).
/// Returns false outside the axis (relative slack 1e-12).
inline bool LocateOnAxis(double x, double lo, double hi, int count, int* index,
                         double* frac) {
  const double span = hi - lo;
  const double abs_lo = lo < 0 ? -lo : lo;
  const double abs_hi = hi < 0 ? -hi : hi;
  const double slack = 1e-12 * ((abs_lo + abs_hi) > 1.0 ? (abs_lo + abs_hi) : 1.0);
  if (x < lo - slack || x > hi + slack) return false;
  double u = (x - lo) / span * (count - 1);
  // Snap to a node within 1e-9 of a cell so on-node queries carry no weight
  // on neighbouring nodes.
  const double nearest = static_cast<double>(static_cast<long>(u + 0.5));
  if (u - nearest < 1e-9 && nearest - u < 1e-9) u = nearest;
  if (u < 0.0) u = 0.0;
  if (u > count - 1) u = count - 1;
  int i = static_cast<int>(u);
  if (i > count - 2) i = count - 2;
  *index = i;
  *frac = u - i;
  return true;
}

/// Evenly spaced grid lo, lo + step, ..., hi with `count` points.
struct UniformGrid {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;

  static UniformGrid FromStep(double lo, double hi, double step);

  double step() const { return count > 1 ? (hi - lo) / (count - 1) : 0.0; }
  double at(int i) const {
    // Exact end points so callers can compare against lo/hi bit-exactly.
    if (i == count - 1) return hi;
    return lo + i * step();
  }
  std::vector<double> points() const;

  /// Locates x in the grid (see LocateOnAxis). `index` is the lower cell node
  /// and `frac` in [0, 1] the position within the cell; on-node queries give
  /// frac == 0, or frac == 1 at the last node.
  bool Locate(double x, int* index, double* frac) const;
};

}  // namespace eco
