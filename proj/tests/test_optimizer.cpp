#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "poas/device_model.hpp"
#include "poas/error.hpp"
#include "poas/optimizer.hpp"
#include "poas/rng.hpp"
#include "support.hpp"

using namespace poas;
using poas::test::random_accel_machine;
using poas::test::random_large_dims;

namespace {

DeviceProfile cpu_device(const std::string& id, double slope, double intercept, int priority) {
  DeviceProfile d;
  d.id = id;
  d.kind = DeviceKind::cpu;
  d.compute = {slope, intercept};
  d.elem_size = 8;
  d.priority = priority;
  d.ops_min = 1;
  d.ops_max = OpsCount{1} << 62;
  return d;
}

}  // namespace

TEST_CASE("lp formulation shape: shares, three clocks per device, makespan") {
  Rng rng(0x10b1ULL);
  const MachineProfile machine = random_accel_machine(rng, 2);
  const LpFormulation lp = build_lp(machine, {20000, 10000, 10000});

  CHECK(lp.problem.num_vars == 9);  // 2 shares + 2*3 phase clocks + T
  CHECK(lp.makespan_var == 8);
  CHECK(lp.share_var.size() == 2);
  CHECK(lp.timeline_var.size() == 2);
  REQUIRE(lp.var_names.size() == 9);
  CHECK(lp.var_names.back() == "T");
  CHECK(lp.problem.objective[lp.makespan_var] == 1.0);
  for (int v = 0; v < 8; ++v) CHECK(lp.problem.objective[v] == 0.0);

  // Every named row exists in the matrix.
  CHECK(lp.eq_names.size() == lp.problem.eq_a.size());
  CHECK(lp.ge_names.size() == lp.problem.ge_a.size());
  for (const auto& name : lp.eq_names) INFO(name);
  MESSAGE("eq rows ", lp.eq_names.size(), ", ge rows ", lp.ge_names.size());
}

TEST_CASE("two equal-intercept cpus split inversely to their slopes") {
  // No bus traffic: makespan is just slope_i * ops_i, so the optimum
  // equalizes both and lands at 2.0 s for 3e12 total ops split 2:1.
  MachineProfile machine;
  machine.devices = {cpu_device("slow", 2e-12, 0.0, 1), cpu_device("fast", 1e-12, 0.0, 0)};
  const MatrixDims dims{30000, 10000, 10000};

  const WorkloadSplit split = solve_split(machine, dims);
  REQUIRE(split.shares.size() == 2);
  const auto& slow = split.shares[0];
  const auto& fast = split.shares[1];
  CHECK(slow.rows + fast.rows == 30000);
  CHECK(fast.rows == 20000);
  CHECK(slow.rows == 10000);
  CHECK(split.makespan == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(split.lp_objective == doctest::Approx(2.0).epsilon(1e-9));
  MESSAGE("makespan ", split.makespan, " via ", split.lp_iterations, " simplex iterations");

  // The exhaustive search lands on the same split.
  const WorkloadSplit oracle = oracle_grid_search(machine, dims, 3000);
  CHECK(oracle.makespan == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("evaluate_rows rejects assignments that do not cover the matrix") {
  MachineProfile machine;
  machine.devices = {cpu_device("a", 1e-12, 0.0, 0)};
  CHECK_THROWS_AS(evaluate_rows(machine, {100, 10, 10}, {99}), Error);
  CHECK_THROWS_AS(evaluate_rows(machine, {100, 10, 10}, {100, 0}), Error);
  CHECK_THROWS_AS(evaluate_rows(machine, {100, 10, 10}, {-1}), Error);
  const WorkloadSplit ok = evaluate_rows(machine, {100, 10, 10}, {100});
  CHECK(ok.shares[0].fraction == 1.0);
}

TEST_CASE("devices worth less than one row are dropped") {
  // The second device is 10^4 times slower; its continuous share of 60 rows
  // lands below one row, so the re-solve hands everything to the fast one.
  MachineProfile machine;
  machine.devices = {cpu_device("fast", 1e-12, 0.0, 0), cpu_device("crawl", 1e-8, 0.0, 1)};
  const MatrixDims dims{60, 1000, 1000};

  const WorkloadSplit split = solve_split(machine, dims);
  CHECK(split.shares[0].rows == 60);
  CHECK(split.shares[1].rows == 0);
  CHECK(split.makespan == doctest::Approx(60e6 * 1e-12).epsilon(1e-9));
}

TEST_CASE("a single row lands on exactly one device") {
  MachineProfile machine;
  machine.devices = {cpu_device("a", 1e-12, 0.0, 0), cpu_device("b", 1e-12, 0.0, 1)};
  const WorkloadSplit split = solve_split(machine, {1, 5000, 5000});
  // Equal devices: the tie goes to the smaller priority number.
  CHECK(split.shares[0].rows == 1);
  CHECK(split.shares[1].rows == 0);
  CHECK(split.makespan == doctest::Approx(25e6 * 1e-12).epsilon(1e-9));
}

TEST_CASE("rounding residue lands on the cpu") {
  Rng rng(0xdeadULL);
  MachineProfile machine = random_accel_machine(rng, 2);
  DeviceProfile cpu = cpu_device("cpu0", 1.45e-12, 0.002, 2);
  machine.devices.push_back(cpu);

  // A prime row count guarantees the continuous optimum rounds unevenly.
  const MatrixDims dims{20011, 9001, 9007};
  const WorkloadSplit split = solve_split(machine, dims);
  std::int64_t total = 0;
  for (const auto& s : split.shares) total += s.rows;
  CHECK(total == dims.m);
  CHECK(split.shares.back().device_id == "cpu0");
  CHECK(split.shares.back().rows > 0);  // residue went to the cpu
  for (const auto& s : split.shares) {
    CHECK(s.ops == OpsCount(s.rows) * dims.row_ops());
    MESSAGE(s.device_id, " rows ", s.rows, " fraction ", s.fraction);
  }
}

TEST_CASE("private links remove bus interference") {
  Rng rng(0x9e11ULL);
  MachineProfile machine = random_accel_machine(rng, 2);
  machine.bus = false;
  const MatrixDims dims = random_large_dims(rng);

  const WorkloadSplit split = solve_split(machine, dims);
  // On private links each device's finish is its own in + compute + out;
  // verify against first principles.
  for (const auto& s : split.shares) {
    const DeviceProfile* dev = machine.find(s.device_id);
    const PhaseDurations ph = predicted_phase_durations(*dev, s.rows, dims);
    CHECK(s.timeline.copy_in.start == 0.0);
    CHECK(s.timeline.finish ==
          doctest::Approx(ph.copy_in + ph.compute + ph.copy_out).epsilon(1e-12));
  }
  const WorkloadSplit oracle = oracle_grid_search(machine, dims, 2000);
  CHECK(std::abs(split.makespan - oracle.makespan) / oracle.makespan < 0.005);
}

TEST_CASE("lp split tracks the exhaustive oracle in the operating regime") {
  Rng rng = Rng::for_stream(0x0a11, "optimizer-property");
  double worst = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const int nd = 2 + int(rng.next_int(0, 1));
    const MachineProfile machine = random_accel_machine(rng, nd);
    const MatrixDims dims = random_large_dims(rng);
    const WorkloadSplit lp = solve_split(machine, dims);
    const WorkloadSplit oracle = oracle_grid_search(machine, dims, nd == 3 ? 800 : 2400);
    const double gap = std::abs(lp.makespan - oracle.makespan) / oracle.makespan;
    INFO("trial ", trial, ": lp ", lp.makespan, " oracle ", oracle.makespan);
    REQUIRE(gap < 0.005);
    worst = std::max(worst, gap);
  }
  MESSAGE("worst lp-vs-oracle gap over 25 instances: ", worst * 100, "%");
}

TEST_CASE("parallel and serial oracles return identical splits") {
  Rng rng = Rng::for_stream(0x0a11, "oracle-parity");
  for (int trial = 0; trial < 6; ++trial) {
    const MachineProfile machine = random_accel_machine(rng, 2 + int(rng.next_int(0, 1)));
    const MatrixDims dims = random_large_dims(rng);
    const WorkloadSplit a = oracle_grid_search(machine, dims, 500);
    const WorkloadSplit b = oracle_grid_search_serial(machine, dims, 500);
    REQUIRE(a.makespan == b.makespan);
    REQUIRE(a.shares.size() == b.shares.size());
    for (std::size_t i = 0; i < a.shares.size(); ++i)
      REQUIRE(a.shares[i].rows == b.shares[i].rows);
  }
}

TEST_CASE("oracle refuses more than three devices") {
  Rng rng(0x0badULL);
  MachineProfile machine = random_accel_machine(rng, 3);
  DeviceProfile extra = machine.devices[1];
  extra.id = "gpu9";
  extra.priority = 3;
  machine.devices.push_back(extra);
  CHECK_THROWS_AS(oracle_grid_search(machine, {1000, 1000, 1000}, 100), Error);
  try {
    oracle_grid_search(machine, {1000, 1000, 1000}, 100);
  } catch (const Error& e) {
    CHECK(e.code() == errc::too_many_devices);
  }
}

TEST_CASE("split timelines respect the shared bus discipline") {
  const MachineProfile machine = poas::test::exact_profile(poas::test::mach2_config());
  const MatrixDims dims{30000, 30000, 30000};
  const WorkloadSplit split = solve_split(machine, dims);

  const DeviceShare* xpu = nullptr;
  const DeviceShare* gpu = nullptr;
  const DeviceShare* cpu = nullptr;
  for (const auto& s : split.shares) {
    if (s.device_id == "xpu0") xpu = &s;
    if (s.device_id == "gpu0") gpu = &s;
    if (s.device_id == "cpu0") cpu = &s;
  }
  REQUIRE(xpu);
  REQUIRE(gpu);
  REQUIRE(cpu);

  // Copy-ins chain in priority order from t=0; the cpu stays off the bus.
  CHECK(xpu->timeline.copy_in.start == 0.0);
  CHECK(gpu->timeline.copy_in.start == doctest::Approx(xpu->timeline.copy_in.end));
  CHECK(cpu->timeline.copy_in.duration() == 0.0);
  CHECK(cpu->timeline.compute.start == 0.0);
  // The first copy-out waits for the bus to clear the last copy-in.
  CHECK(xpu->timeline.copy_out.start >=
        std::max(xpu->timeline.compute.end, gpu->timeline.copy_in.end) - 1e-12);
  CHECK(split.makespan >= xpu->timeline.finish);
  CHECK(split.makespan >= gpu->timeline.finish);
  CHECK(split.makespan == doctest::Approx(cpu->timeline.finish));
  MESSAGE("i1 split: cpu ", cpu->rows, " gpu ", gpu->rows, " xpu ", xpu->rows, " makespan ",
          split.makespan);
}
