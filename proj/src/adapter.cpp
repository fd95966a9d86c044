#include "poas/adapter.hpp"

#include <algorithm>
#include <cmath>

#include "poas/error.hpp"
#include "poas/log.hpp"

namespace poas {

std::int64_t ops_to_rows(OpsCount c, const MatrixDims& dims) {
  validate_dims(dims);
  if (c > dims.total_ops()) fail(errc::invalid_argument, "op count exceeds the whole product");
  return static_cast<std::int64_t>(c / dims.row_ops());
}

std::int64_t align_rows(std::int64_t rows, const DeviceProfile& dev, const MatrixDims& dims) {
  if (rows < 0) fail(errc::invalid_argument, "negative row count");
  if (dev.kind != DeviceKind::xpu || rows == 0) return rows;
  if (dims.k % dev.align != 0)
    fail(errc::unalignable_k, "device '" + dev.id + "' needs k divisible by " +
                                  std::to_string(dev.align) + ", got k = " + std::to_string(dims.k));
  return (rows / dev.align) * dev.align;
}

void reassign_shaved(std::vector<std::int64_t>& rows, std::int64_t shaved,
                     const MachineProfile& machine, const WorkloadSplit& split) {
  if (shaved < 0) fail(errc::invalid_argument, "negative shaved count");
  if (rows.size() != machine.devices.size() || split.shares.size() != machine.devices.size())
    fail(errc::invalid_argument, "assignment/machine size mismatch");
  if (shaved == 0) return;

  // A CPU takes leftovers without bus traffic or alignment concerns.
  std::size_t receiver = machine.devices.size();
  for (std::size_t i = 0; i < machine.devices.size(); ++i) {
    const DeviceProfile& d = machine.devices[i];
    if (d.kind != DeviceKind::cpu) continue;
    if (receiver == machine.devices.size() ||
        d.priority < machine.devices[receiver].priority)
      receiver = i;
  }

  // Otherwise the unconstrained device expected to finish first.
  if (receiver == machine.devices.size()) {
    for (std::size_t i = 0; i < machine.devices.size(); ++i) {
      const DeviceProfile& d = machine.devices[i];
      if (d.kind == DeviceKind::xpu) continue;
      if (receiver == machine.devices.size() ||
          split.shares[i].timeline.finish < split.shares[receiver].timeline.finish ||
          (split.shares[i].timeline.finish == split.shares[receiver].timeline.finish &&
           d.id < machine.devices[receiver].id))
        receiver = i;
    }
  }

  // Last resort: an aligned device that can absorb the count whole.
  if (receiver == machine.devices.size()) {
    for (std::size_t i = 0; i < machine.devices.size(); ++i) {
      const DeviceProfile& d = machine.devices[i];
      if (d.kind != DeviceKind::xpu || shaved % d.align != 0) continue;
      if (receiver == machine.devices.size() ||
          split.shares[i].timeline.finish < split.shares[receiver].timeline.finish ||
          (split.shares[i].timeline.finish == split.shares[receiver].timeline.finish &&
           d.id < machine.devices[receiver].id))
        receiver = i;
    }
  }

  if (receiver == machine.devices.size())
    fail(errc::no_feasible_tiling,
         "no device can absorb " + std::to_string(shaved) + " shaved row(s)");
  rows[receiver] += shaved;
}

namespace {

std::vector<std::int64_t> divisors_ascending(std::int64_t k) {
  std::vector<std::int64_t> divs;
  for (std::int64_t i = 1; i * i <= k; ++i) {
    if (k % i != 0) continue;
    divs.push_back(i);
    if (i != k / i) divs.push_back(k / i);
  }
  std::sort(divs.begin(), divs.end());
  return divs;
}

double squareness(std::int64_t a, std::int64_t b) {
  return static_cast<double>(std::min(a, b)) / static_cast<double>(std::max(a, b));
}

struct TileChoice {
  double sq = -1.0;
  std::int64_t k_prime = 0;
  std::int64_t q = 0;  // m-parts per strip
  std::int64_t tile_count = 0;

  bool beats(const TileChoice& other) const {
    if (sq != other.sq) return sq > other.sq;
    if (k_prime != other.k_prime) return k_prime > other.k_prime;
    return tile_count < other.tile_count;
  }
};

}  // namespace

TileDecision tile_device(const DeviceProfile& dev, std::int64_t rows, const MatrixDims& dims) {
  if (rows < 1) fail(errc::invalid_argument, "tiling needs at least one row");
  validate_dims(dims);

  TileChoice best;

  for (std::int64_t kp : divisors_ascending(dims.k)) {
    // Bounds on a part height m' from the ops window: every tile's
    // m'*k'*n must land inside [ops_min, ops_max]. Integer arithmetic so
    // window-edge tiles are classified exactly.
    const OpsCount tile_cols_u = static_cast<OpsCount>(kp) * static_cast<OpsCount>(dims.n);
    const std::int64_t lo = std::max<std::int64_t>(
        1, static_cast<std::int64_t>((dev.ops_min + tile_cols_u - 1) / tile_cols_u));
    const std::int64_t hi = static_cast<std::int64_t>(dev.ops_max / tile_cols_u);
    if (hi < lo || lo > rows) continue;
    const double tile_cols = static_cast<double>(tile_cols_u);

    // q parts of sizes ceil(rows/q) and floor(rows/q); both must fit the
    // window, which pins q to [ceil(rows/hi), floor(rows/lo)].
    const std::int64_t q_min = (rows + hi - 1) / hi;
    const std::int64_t q_max = std::min(rows, rows / lo);
    const std::int64_t strips = dims.k / kp;
    for (std::int64_t q = q_min; q <= q_max; ++q) {
      const std::int64_t m_lo = rows / q;
      const std::int64_t m_hi = (rows + q - 1) / q;
      const std::int64_t r = rows % q;
      if (m_hi > hi || m_lo < lo) continue;

      const double sq_strip =
          static_cast<double>(r) * squareness(m_hi, kp) * static_cast<double>(m_hi) * tile_cols +
          static_cast<double>(q - r) * squareness(m_lo, kp) * static_cast<double>(m_lo) * tile_cols;
      TileChoice cand;
      cand.sq = static_cast<double>(strips) * sq_strip;
      cand.k_prime = kp;
      cand.q = q;
      cand.tile_count = strips * q;
      if (cand.beats(best)) best = cand;
    }
  }

  if (best.sq < 0.0)
    fail(errc::no_feasible_tiling, "device '" + dev.id + "': no tiling of " +
                                       std::to_string(rows) + " rows fits its ops window");

  TileDecision decision;
  decision.k_prime = best.k_prime;
  decision.sq = best.sq;
  const std::int64_t strips = dims.k / best.k_prime;
  const std::int64_t m_lo = rows / best.q;
  const std::int64_t m_hi = (rows + best.q - 1) / best.q;
  const std::int64_t r = rows % best.q;
  decision.tiles.reserve(static_cast<std::size_t>(best.tile_count));
  for (std::int64_t s = 0; s < strips; ++s) {
    for (std::int64_t p = 0; p < best.q; ++p) {
      Tile t;
      t.m = p < r ? m_hi : m_lo;
      t.k = best.k_prime;
      t.n = dims.n;
      decision.tiles.push_back(t);
    }
  }
  return decision;
}

TilePlan build_tile_plan(const MachineProfile& machine, const MatrixDims& dims,
                         const WorkloadSplit& split) {
  validate_machine(machine);
  validate_dims(dims);
  if (split.shares.size() != machine.devices.size())
    fail(errc::invalid_argument, "split/machine size mismatch");

  // Rows per device, then the alignment pass with its give-back.
  std::vector<std::int64_t> rows(machine.devices.size(), 0);
  std::int64_t shaved = 0;
  for (std::size_t i = 0; i < machine.devices.size(); ++i) {
    const std::int64_t want = ops_to_rows(split.shares[i].ops, dims);
    rows[i] = align_rows(want, machine.devices[i], dims);
    shaved += want - rows[i];
  }
  reassign_shaved(rows, shaved, machine, split);

  TilePlan plan;
  plan.dims = dims;
  for (std::size_t i = 0; i < machine.devices.size(); ++i) {
    const DeviceProfile& dev = machine.devices[i];
    PlannedDevice pd;
    pd.device_id = dev.id;
    pd.rows = rows[i];
    pd.ops = static_cast<OpsCount>(rows[i]) * dims.row_ops();
    if (rows[i] > 0) {
      try {
        pd.tiling = tile_device(dev, rows[i], dims);
      } catch (const Error& e) {
        if (e.code() != errc::no_feasible_tiling) throw;
        // Out-of-window work still has to run somewhere; one flat tile.
        pd.tiling.k_prime = dims.k;
        pd.tiling.tiles = {Tile{rows[i], dims.k, dims.n}};
        pd.tiling.sq = squareness(rows[i], dims.k) * static_cast<double>(rows[i]) *
                       static_cast<double>(dims.k) * static_cast<double>(dims.n);
        pd.window_fallback = true;
        log_info("device '%s': %lld rows have no in-window tiling, using one %lldx%lld tile",
                 dev.id.c_str(), static_cast<long long>(rows[i]),
                 static_cast<long long>(rows[i]), static_cast<long long>(dims.k));
      }
    }
    plan.devices.push_back(std::move(pd));
  }
  return plan;
}

}  // namespace poas
