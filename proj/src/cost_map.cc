#include "eco/cost_map.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <limits>

#include "eco/config.h"
#include "eco/errors.h"
#include "json.hpp"

namespace eco {
namespace {

constexpr char kMagic[8] = {'E', 'C', 'O', 'C', 'M', 'A', 'P', '1'};

std::string NowIso8601() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json GridJson(const UniformGrid& g) {
  return {{"lo", g.lo}, {"hi", g.hi}, {"count", g.count}};
}

template <typename T>
void WritePod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T ReadPod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorCode::kIo, "truncated cost map file");
  return value;
}

void WriteGrid(std::ofstream& out, const UniformGrid& g) {
  WritePod(out, g.lo);
  WritePod(out, g.hi);
  WritePod(out, static_cast<std::int32_t>(g.count));
}

UniformGrid ReadGrid(std::ifstream& in) {
  UniformGrid g;
  g.lo = ReadPod<double>(in);
  g.hi = ReadPod<double>(in);
  g.count = ReadPod<std::int32_t>(in);
  if (g.count < 1) throw Error(ErrorCode::kIo, "corrupt cost map grid");
  return g;
}

}  // namespace

CostMap::CostMap(CostMapGrids grids, std::vector<double> cost,
                 std::vector<std::uint8_t> engine_on, std::uint64_t params_hash,
                 std::string created)
    : grids_(grids),
      cost_(std::move(cost)),
      engine_on_(std::move(engine_on)),
      params_hash_(params_hash),
      created_(std::move(created)) {
  const std::size_t n = static_cast<std::size_t>(grids_.speed.count) *
                        grids_.torque.count * grids_.soc.count;
  if (cost_.size() != n || engine_on_.size() != n) {
    throw Error(ErrorCode::kInvalidParams, "cost map tensor size mismatch");
  }
}

int CostMap::SocPlane(double soc) const {
  const auto& g = grids_.soc;
  if (g.count == 1) return 0;
  const long i = std::lround((soc - g.lo) / g.step());
  return static_cast<int>(std::clamp<long>(i, 0, g.count - 1));
}

bool CostMap::TryLookup(double v, double wheel_torque, int plane,
                        double* cost) const {
  int iv = 0;
  int it = 0;
  double fv = 0.0;
  double ft = 0.0;
  if (!grids_.speed.Locate(v, &iv, &fv)) return false;
  if (!grids_.torque.Locate(wheel_torque, &it, &ft)) return false;
  const int iv1 = std::min(iv + 1, grids_.speed.count - 1);
  const int it1 = std::min(it + 1, grids_.torque.count - 1);
  const double w[4] = {(1 - fv) * (1 - ft), (1 - fv) * ft, fv * (1 - ft),
                       fv * ft};
  const double c[4] = {cell(iv, it, plane), cell(iv, it1, plane),
                       cell(iv1, it, plane), cell(iv1, it1, plane)};
  double sum = 0.0;
  for (int q = 0; q < 4; ++q) {
    if (w[q] == 0.0) continue;
    if (std::isnan(c[q])) return false;
    sum += w[q] * c[q];
  }
  // On-node queries return the stored value untouched.
  if (fv == 0.0 && ft == 0.0) sum = c[0];
  *cost = sum;
  return true;
}

void CostMap::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  WritePod(out, params_hash_);
  WriteGrid(out, grids_.speed);
  WriteGrid(out, grids_.torque);
  WriteGrid(out, grids_.soc);
  out.write(reinterpret_cast<const char*>(cost_.data()),
            static_cast<std::streamsize>(cost_.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(engine_on_.data()),
            static_cast<std::streamsize>(engine_on_.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path);

  nlohmann::json meta = {
      {"format", "ECOCMAP1"},
      {"layout", "float64 cost[soc][speed][torque], NaN = inadmissible; "
                 "uint8 engine_on[soc][speed][torque]"},
      {"params_hash", HashToHex(params_hash_)},
      {"created", created_},
      {"grids",
       {{"speed", GridJson(grids_.speed)},
        {"torque", GridJson(grids_.torque)},
        {"soc", GridJson(grids_.soc)}}}};
  std::ofstream side(path + ".json");
  if (!side) throw Error(ErrorCode::kIo, "cannot write sidecar for " + path);
  side << meta.dump(2) << "\n";
}

CostMap CostMap::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::kIo, path + " is not a cost map artifact");
  }
  const auto hash = ReadPod<std::uint64_t>(in);
  CostMapGrids grids;
  grids.speed = ReadGrid(in);
  grids.torque = ReadGrid(in);
  grids.soc = ReadGrid(in);
  const std::size_t n = static_cast<std::size_t>(grids.speed.count) *
                        grids.torque.count * grids.soc.count;
  std::vector<double> cost(n);
  std::vector<std::uint8_t> engine(n);
  in.read(reinterpret_cast<char*>(cost.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  in.read(reinterpret_cast<char*>(engine.data()), static_cast<std::streamsize>(n));
  if (!in) throw Error(ErrorCode::kIo, "truncated cost map file " + path);

  std::string created;
  std::ifstream side(path + ".json");
  if (side) {
    const auto meta = nlohmann::json::parse(side);
    if (meta.at("params_hash").get<std::string>() != HashToHex(hash)) {
      throw Error(ErrorCode::kIo, "cost map sidecar hash mismatch for " + path);
    }
    created = meta.value("created", "");
  }
  return CostMap(grids, std::move(cost), std::move(engine), hash, created);
}

std::uint64_t CostMapParamsHash(const PowertrainParams& pt,
                                const VehicleParams& vehicle) {
  nlohmann::json j = {{"powertrain", ToJson(pt)}, {"vehicle", ToJson(vehicle)}};
  return Fnv1a64(j.dump());
}

CostMap BuildCostMap(const PowertrainParams& pt, const VehicleParams& vehicle,
                     const CostMapGrids& grids) {
  pt.Validate();
  vehicle.Validate();
  if (grids.speed.count < 1 || grids.torque.count < 1 || grids.soc.count < 1) {
    throw Error(ErrorCode::kInvalidParams, "cost map grids must be non-empty");
  }
  const std::size_t n = static_cast<std::size_t>(grids.speed.count) *
                        grids.torque.count * grids.soc.count;
  std::vector<double> cost(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::uint8_t> engine(n, 0);
  std::size_t idx = 0;
  SplitEvaluation eval;
  for (int is = 0; is < grids.soc.count; ++is) {
    const double soc = grids.soc.at(is);
    for (int iv = 0; iv < grids.speed.count; ++iv) {
      const double v = grids.speed.at(iv);
      for (int it = 0; it < grids.torque.count; ++it, ++idx) {
        if (TryEcmsSplit(v, grids.torque.at(it), soc, pt, vehicle, &eval)) {
          cost[idx] = eval.cost;
          engine[idx] = eval.split.engine_on ? 1 : 0;
        }
      }
    }
  }
  return CostMap(grids, std::move(cost), std::move(engine),
                 CostMapParamsHash(pt, vehicle), NowIso8601());
}

double CostLookup(const CostMap& map, double v, double wheel_torque,
                  double soc) {
  double cost = 0.0;
  if (!map.TryLookup(v, wheel_torque, map.SocPlane(soc), &cost)) {
    throw Error(ErrorCode::kOutOfHull, "cost map query outside admissible hull");
  }
  return cost;
}

}  // namespace eco
