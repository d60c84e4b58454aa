#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eco/interp.h"
#include "eco/powertrain.h"

namespace eco {

struct CostMapGrids {
  UniformGrid speed{0.0, 20.0, 41};         // m/s
  UniformGrid torque{-4000.0, 4000.0, 161};  // N·m at the wheel
  UniformGrid soc{0.05, 0.95, 91};          // step 0.01
};

/// Precomputed minimum powertrain cost over (v, T_w) for each SOC plane.
/// Inadmissible cells hold NaN.
class CostMap {
 public:
  CostMap() = default;
  CostMap(CostMapGrids grids, std::vector<double> cost,
          std::vector<std::uint8_t> engine_on, std::uint64_t params_hash,
          std::string created);

  const CostMapGrids& grids() const { return grids_; }
  std::uint64_t params_hash() const { return params_hash_; }
  const std::string& created() const { return created_; }

  /// Raw cell access; NaN when inadmissible.
  double cell(int iv, int it, int is) const { return cost_[Index(iv, it, is)]; }
  bool engine_on(int iv, int it, int is) const {
    return engine_on_[Index(iv, it, is)] != 0;
  }
  bool admissible(int iv, int it, int is) const {
    return cost_[Index(iv, it, is)] == cost_[Index(iv, it, is)];
  }

  /// Index of the SOC plane nearest to `soc` (clamped to the grid).
  int SocPlane(double soc) const;

  /// Bilinear lookup in (v, T_w) on plane `plane`. Returns false outside the
  /// grid or when a corner carrying positive weight is inadmissible.
  bool TryLookup(double v, double wheel_torque, int plane, double* cost) const;

  void Save(const std::string& path) const;
  static CostMap Load(const std::string& path);

 private:
  std::size_t Index(int iv, int it, int is) const {
    return (static_cast<std::size_t>(is) * grids_.speed.count + iv) *
               grids_.torque.count +
           it;
  }

  CostMapGrids grids_;
  std::vector<double> cost_;
  std::vector<std::uint8_t> engine_on_;
  std::uint64_t params_hash_ = 0;
  std::string created_;
};

/// Stable 64-bit fingerprint of the parameters a cost map depends on.
std::uint64_t CostMapParamsHash(const PowertrainParams& pt,
                                const VehicleParams& vehicle);

CostMap BuildCostMap(const PowertrainParams& pt, const VehicleParams& vehicle,
                     const CostMapGrids& grids);

/// Interpolated cost; throws OutOfHull outside the admissible grid hull.
double CostLookup(const CostMap& map, double v, double wheel_torque, double soc);

}  // namespace eco
