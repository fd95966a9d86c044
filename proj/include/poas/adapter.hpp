#pragma once

// Turns per-device op counts into concrete work: whole rows of A, alignment
// fixups for devices that need them, and a near-square tile decomposition of
// each device's row slice chosen by the squareness heuristic.

#include <cstdint>
#include <string>
#include <vector>

#include "poas/device_model.hpp"
#include "poas/optimizer.hpp"

namespace poas {

// One sub-product: an m' x k' slice of A against the matching k' x n slice
// of B. n is never split.
struct Tile {
  std::int64_t m = 0;
  std::int64_t k = 0;
  std::int64_t n = 0;
};

struct TileDecision {
  std::int64_t k_prime = 0;  // column width shared by every tile
  std::vector<Tile> tiles;   // k/k' strips, each split into balanced m-parts
  double sq = 0.0;           // sum over tiles of min(m,k)/max(m,k) * m*k*n
};

struct PlannedDevice {
  std::string device_id;
  std::int64_t rows = 0;
  OpsCount ops = 0;
  TileDecision tiling;           // empty for idle devices
  bool window_fallback = false;  // tiling fell back to one out-of-window tile
};

struct TilePlan {
  MatrixDims dims;
  std::vector<PlannedDevice> devices;  // machine order, idle devices included
};

// floor(c / (n*k)); op counts reaching this point are whole-row already.
std::int64_t ops_to_rows(OpsCount c, const MatrixDims& dims);

// Alignment fixup. Devices with an alignment requirement get their row
// count floored to a multiple of it and need k divisible by it too
// (Error(errc::unalignable_k) otherwise); everything else passes through.
// The caller re-homes the difference.
std::int64_t align_rows(std::int64_t rows, const DeviceProfile& dev, const MatrixDims& dims);

// Adds `shaved` rows back to the machine: the CPU if there is one (lowest
// priority number wins among several), else the unconstrained device with
// the smallest predicted finish in `split` (ties by id), else an aligned
// device whose alignment divides the count. Error(errc::no_feasible_tiling)
// when nobody can take them.
void reassign_shaved(std::vector<std::int64_t>& rows, std::int64_t shaved,
                     const MachineProfile& machine, const WorkloadSplit& split);

// Best tiling of `rows` of A for this device: k' runs over the divisors of
// k, each k-strip is split into q balanced parts (q = 1..rows), every tile
// must land inside the device's ops window, and the squareness score picks
// the winner. Ties prefer larger k', then fewer tiles. Throws
// Error(errc::no_feasible_tiling) when the window admits nothing.
TileDecision tile_device(const DeviceProfile& dev, std::int64_t rows, const MatrixDims& dims);

// Full adaptation of an optimizer split: rows, alignment, reassignment,
// tiling. A device whose window admits no tiling at all falls back to a
// single full-slice tile and is flagged (and logged) rather than failing
// the plan.
TilePlan build_tile_plan(const MachineProfile& machine, const MatrixDims& dims,
                         const WorkloadSplit& split);

}  // namespace poas
