#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "poas/adapter.hpp"
#include "poas/device_model.hpp"
#include "poas/error.hpp"
#include "poas/optimizer.hpp"
#include "poas/rng.hpp"

using namespace poas;

namespace {

DeviceProfile device(const std::string& id, DeviceKind kind, OpsCount ops_min, OpsCount ops_max,
                     int priority) {
  DeviceProfile d;
  d.id = id;
  d.kind = kind;
  d.compute = {1e-13, 0.001};
  d.bandwidth = kind == DeviceKind::cpu ? 0.0 : 24e9;
  d.elem_size = 4;
  d.priority = priority;
  d.ops_min = ops_min;
  d.ops_max = ops_max;
  if (kind == DeviceKind::xpu) d.align = 8;
  return d;
}

// Literal reading of the tiling search: every divisor of k, every part
// count, every tile inside the window, scored by squareness times volume.
struct BruteBest {
  bool feasible = false;
  double sq = -1.0;
  std::int64_t k_prime = 0;
  std::size_t tile_count = 0;
};

BruteBest brute_tiling(std::int64_t rows, const MatrixDims& dims, OpsCount ops_min,
                       OpsCount ops_max) {
  BruteBest best;
  for (std::int64_t kp = 1; kp <= dims.k; ++kp) {
    if (dims.k % kp != 0) continue;
    const std::int64_t strips = dims.k / kp;
    for (std::int64_t q = 1; q <= rows; ++q) {
      const std::int64_t m_hi = (rows + q - 1) / q;
      const std::int64_t m_lo = rows / q;
      const std::int64_t r = rows % q;
      const auto in_window = [&](std::int64_t m) {
        const OpsCount ops = OpsCount(m) * kp * dims.n;
        return ops >= ops_min && ops <= ops_max;
      };
      if (r > 0 && !in_window(m_hi)) continue;
      if (q - r > 0 && !in_window(m_lo)) continue;
      double sq = 0.0;
      for (std::int64_t s = 0; s < strips; ++s) {
        for (std::int64_t part = 0; part < q; ++part) {
          const std::int64_t m = part < r ? m_hi : m_lo;
          const double ratio = double(std::min(m, kp)) / double(std::max(m, kp));
          sq += ratio * double(m) * double(kp) * double(dims.n);
        }
      }
      const std::size_t tiles = std::size_t(strips) * std::size_t(q);
      const bool better =
          !best.feasible || sq > best.sq ||
          (sq == best.sq && (kp > best.k_prime ||
                             (kp == best.k_prime && tiles < best.tile_count)));
      if (better) best = {true, sq, kp, tiles};
    }
  }
  return best;
}

}  // namespace

TEST_CASE("ops_to_rows floors to whole rows") {
  const MatrixDims dims{100, 50, 40};
  CHECK(ops_to_rows(0, dims) == 0);
  CHECK(ops_to_rows(dims.row_ops(), dims) == 1);
  CHECK(ops_to_rows(dims.row_ops() * 7 + 1999, dims) == 7);
  CHECK(ops_to_rows(dims.total_ops(), dims) == 100);
}

TEST_CASE("align_rows floors aligned devices and passes the rest through") {
  const MatrixDims dims{30000, 30000, 30000};
  const DeviceProfile xpu = device("xpu0", DeviceKind::xpu, 1, OpsCount{1} << 62, 0);
  CHECK(align_rows(22330, xpu, dims) == 22328);
  CHECK(align_rows(22328, xpu, dims) == 22328);
  CHECK(align_rows(0, xpu, dims) == 0);
  CHECK(align_rows(7, xpu, dims) == 0);

  const DeviceProfile gpu = device("gpu0", DeviceKind::gpu, 1, OpsCount{1} << 62, 1);
  CHECK(align_rows(22330, gpu, dims) == 22330);

  // k not divisible by the alignment cannot produce aligned tiles.
  const MatrixDims bad{30000, 30000, 30001};
  CHECK_THROWS_AS(align_rows(16, xpu, bad), Error);
  CHECK(align_rows(0, xpu, bad) == 0);  // an idle device has nothing to align
  try {
    align_rows(16, xpu, bad);
  } catch (const Error& e) {
    CHECK(e.code() == errc::unalignable_k);
  }
}

TEST_CASE("shaved rows prefer the cpu, then the earliest-finishing device") {
  const MatrixDims dims{1000, 4000, 4000};

  SUBCASE("cpu takes them") {
    MachineProfile machine;
    machine.devices = {device("cpu0", DeviceKind::cpu, 1, OpsCount{1} << 62, 2),
                       device("gpu0", DeviceKind::gpu, 1, OpsCount{1} << 62, 0)};
    const WorkloadSplit split = evaluate_rows(machine, dims, {100, 900});
    std::vector<std::int64_t> rows = {100, 895};
    reassign_shaved(rows, 5, machine, split);
    CHECK(rows[0] == 105);
    CHECK(rows[1] == 895);
  }
  SUBCASE("no cpu: earliest finish wins, ties by id") {
    MachineProfile machine;
    machine.devices = {device("gpu0", DeviceKind::gpu, 1, OpsCount{1} << 62, 0),
                       device("gpu1", DeviceKind::gpu, 1, OpsCount{1} << 62, 1)};
    machine.devices[1].compute.slope = 5e-13;  // gpu1 slower, finishes later
    const WorkloadSplit split = evaluate_rows(machine, dims, {800, 200});
    std::vector<std::int64_t> rows = {800, 195};
    reassign_shaved(rows, 5, machine, split);
    CHECK(rows[0] == 805);
    CHECK(rows[1] == 195);
  }
  SUBCASE("aligned devices only take multiples of their alignment") {
    MachineProfile machine;
    machine.devices = {device("xpu0", DeviceKind::xpu, 1, OpsCount{1} << 62, 0)};
    const WorkloadSplit split = evaluate_rows(machine, dims, {1000});
    std::vector<std::int64_t> rows = {992};
    reassign_shaved(rows, 8, machine, split);
    CHECK(rows[0] == 1000);
    rows = {992};
    CHECK_THROWS_AS(reassign_shaved(rows, 3, machine, split), Error);
  }
}

TEST_CASE("tile_device picks the squarest in-window decomposition") {
  SUBCASE("one tile exactly at the window edge") {
    const DeviceProfile dev = device("cpu0", DeviceKind::cpu, 1'000'000'000, 8'000'000'000, 0);
    const MatrixDims dims{4000, 2000, 2000};
    const TileDecision d = tile_device(dev, 2000, dims);
    CHECK(d.k_prime == 2000);
    REQUIRE(d.tiles.size() == 1);
    CHECK(d.tiles[0].m == 2000);
    CHECK(d.tiles[0].k == 2000);
    CHECK(d.tiles[0].n == 2000);
    CHECK(d.sq == 8e9);  // perfectly square, ops exactly ops_max
  }
  SUBCASE("twice the rows split into two square tiles") {
    const DeviceProfile dev = device("cpu0", DeviceKind::cpu, 1'000'000'000, 8'000'000'000, 0);
    const MatrixDims dims{4000, 2000, 2000};
    const TileDecision d = tile_device(dev, 4000, dims);
    CHECK(d.k_prime == 2000);
    REQUIRE(d.tiles.size() == 2);
    CHECK(d.tiles[0].m == 2000);
    CHECK(d.tiles[1].m == 2000);
    CHECK(d.sq == 1.6e10);
  }
  SUBCASE("a single short row prefers unit strips") {
    // With one row, every tile is 1 x k' and squareness rewards k' = 1.
    const DeviceProfile dev = device("cpu0", DeviceKind::cpu, 1, OpsCount{1} << 62, 0);
    const MatrixDims dims{10, 5, 7};
    const TileDecision d = tile_device(dev, 1, dims);
    CHECK(d.k_prime == 1);
    CHECK(d.tiles.size() == 7);
    CHECK(d.sq == 35.0);
  }
  SUBCASE("nothing fits the window") {
    const DeviceProfile dev = device("cpu0", DeviceKind::cpu, 1'000'000'000, 8'000'000'000, 0);
    const MatrixDims dims{10, 100, 100};
    CHECK_THROWS_AS(tile_device(dev, 1, dims), Error);
  }
}

TEST_CASE("tile_device matches the exhaustive search on small instances") {
  // Every row count and every k up to 32 (their full cross product), two
  // window regimes; the exhaustive scorer is the source of truth.
  const MatrixDims base{0, 17, 0};
  long cases = 0;
  for (int pass = 0; pass < 2; ++pass) {
    const OpsCount ops_min = pass == 0 ? 1 : 3 * 17;
    const OpsCount ops_max = pass == 0 ? (OpsCount{1} << 62) : 40 * 17;
    const DeviceProfile dev = device("d", DeviceKind::gpu, ops_min, ops_max, 0);
    for (std::int64_t rows = 1; rows <= 32; ++rows) {
      for (std::int64_t k = 1; k <= 32; ++k) {
        MatrixDims dims = base;
        dims.m = rows;
        dims.k = k;
        const BruteBest brute = brute_tiling(rows, dims, ops_min, ops_max);
        ++cases;
        INFO("pass ", pass, " rows ", rows, " k ", k);
        if (!brute.feasible) {
          CHECK_THROWS_AS(tile_device(dev, rows, dims), Error);
          continue;
        }
        const TileDecision d = tile_device(dev, rows, dims);
        REQUIRE(d.sq == doctest::Approx(brute.sq).epsilon(1e-12));
        CHECK(d.k_prime == brute.k_prime);
        CHECK(d.tiles.size() == brute.tile_count);
      }
    }
  }
  MESSAGE("cross-checked ", cases, " tiling instances against exhaustive search");
}

TEST_CASE("build_tile_plan keeps idle devices and flags window fallbacks") {
  MachineProfile machine;
  machine.devices = {device("gpu0", DeviceKind::gpu, 1'000'000'000, 8'000'000'000, 0),
                     device("gpu1", DeviceKind::gpu, 1'000'000'000, 8'000'000'000, 1)};
  const MatrixDims dims{64, 100, 100};  // 10000 ops per row, far below the window
  const WorkloadSplit split = evaluate_rows(machine, dims, {64, 0});
  const TilePlan plan = build_tile_plan(machine, dims, split);

  REQUIRE(plan.devices.size() == 2);
  CHECK(plan.devices[0].rows == 64);
  CHECK(plan.devices[0].window_fallback);  // nothing in-window: one flat tile
  REQUIRE(plan.devices[0].tiling.tiles.size() == 1);
  CHECK(plan.devices[0].tiling.tiles[0].m == 64);
  CHECK(plan.devices[0].tiling.tiles[0].k == 100);
  CHECK(plan.devices[1].rows == 0);
  CHECK(plan.devices[1].tiling.tiles.empty());
}

TEST_CASE("tile plans conserve work under random machines and dims") {
  Rng rng = Rng::for_stream(0xada9, "adapter-suite");
  int fallbacks = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int nd = 1 + int(rng.next_int(0, 2));
    MachineProfile machine;
    bool all_xpu = true;
    for (int i = 0; i < nd; ++i) {
      const DeviceKind kind =
          std::array{DeviceKind::cpu, DeviceKind::gpu, DeviceKind::xpu}[rng.next_int(0, 2)];
      const std::int64_t lo_side = rng.next_int(50, 800);
      const std::int64_t hi_side = lo_side * rng.next_int(2, 6);
      DeviceProfile d = device(std::string(kind_name(kind)) + std::to_string(i), kind,
                               OpsCount(lo_side) * lo_side * lo_side,
                               OpsCount(hi_side) * hi_side * hi_side, i);
      d.compute.slope = rng.next_range(5e-14, 2e-12);
      all_xpu = all_xpu && kind == DeviceKind::xpu;
      machine.devices.push_back(std::move(d));
    }
    MatrixDims dims;
    dims.m = rng.next_int(64, 4000);
    dims.n = rng.next_int(500, 8000);
    dims.k = 8 * rng.next_int(64, 1000);  // keeps xpu tiles alignable
    // An all-aligned machine can only cover row counts the alignment
    // divides; anything else is a legitimate planning error.
    if (all_xpu) dims.m -= dims.m % 8;

    const WorkloadSplit split = solve_split(machine, dims);
    const TilePlan plan = build_tile_plan(machine, dims, split);

    std::int64_t total_rows = 0;
    for (const PlannedDevice& pd : plan.devices) {
      total_rows += pd.rows;
      REQUIRE(pd.ops == OpsCount(pd.rows) * dims.row_ops());
      const DeviceProfile* dev = machine.find(pd.device_id);
      REQUIRE(dev != nullptr);
      if (dev->kind == DeviceKind::xpu) REQUIRE(pd.rows % dev->align == 0);
      if (pd.rows == 0) {
        REQUIRE(pd.tiling.tiles.empty());
        continue;
      }
      if (pd.window_fallback) ++fallbacks;
      REQUIRE(!pd.tiling.tiles.empty());
      const std::int64_t kp = pd.tiling.k_prime;
      REQUIRE(kp >= 1);
      REQUIRE(dims.k % kp == 0);
      std::int64_t m_sum = 0;
      for (const Tile& t : pd.tiling.tiles) {
        REQUIRE(t.k == kp);
        REQUIRE(t.n == dims.n);
        REQUIRE(t.m >= 1);
        m_sum += t.m;
        if (!pd.window_fallback) {
          const OpsCount ops = OpsCount(t.m) * t.k * t.n;
          REQUIRE(ops >= dev->ops_min);
          REQUIRE(ops <= dev->ops_max);
        }
      }
      // Each of the k/k' strips covers the device's whole row slice.
      REQUIRE(m_sum == pd.rows * (dims.k / kp));
    }
    REQUIRE(total_rows == dims.m);
  }
  MESSAGE("200 random plans conserved rows and ops (", fallbacks, " window fallbacks)");
}
