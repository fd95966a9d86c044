#pragma once

// Shared fixtures: the reference three-device machine (throughput ratios and
// link speeds of a desktop-class CPU + PCIe GPU + tensor-core GPU), an
// exact profile built straight from ground truth, and random-instance
// generators for property tests.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "poas/device_model.hpp"
#include "poas/machine_config.hpp"
#include "poas/rng.hpp"
#include "poas/simulator.hpp"

namespace poas::test {

inline MachineConfig mach2_config() {
  MachineConfig config;
  config.bus = true;

  SyntheticDevice cpu;
  cpu.id = "cpu0";
  cpu.kind = DeviceKind::cpu;
  cpu.slope = 1.4492753623188405e-12;
  cpu.intercept = 0.002;
  cpu.elem_size = 4;
  cpu.cache_bytes = 32ULL << 20;
  config.devices.push_back(cpu);

  SyntheticDevice gpu;
  gpu.id = "gpu0";
  gpu.kind = DeviceKind::gpu;
  gpu.slope = 1.1242270938729624e-13;
  gpu.intercept = 0.005;
  gpu.bandwidth = 31.75e9;
  gpu.elem_size = 4;
  config.devices.push_back(gpu);

  SyntheticDevice xpu;
  xpu.id = "xpu0";
  xpu.kind = DeviceKind::xpu;
  xpu.slope = 3.7209302325581396e-14;
  xpu.intercept = 0.005;
  xpu.bandwidth = 15.75e9;
  xpu.elem_size = 2;
  xpu.align = 8;
  config.devices.push_back(xpu);

  return config;
}

// Ground truth viewed as a fitted profile, bit for bit: same laws, the
// windows the profiler would record, and the same priority ranking rule
// (descending modeled throughput at the midpoint of the probing range).
inline MachineProfile exact_profile(const MachineConfig& config) {
  MachineProfile machine;
  machine.bus = config.bus;
  for (const SyntheticDevice& dev : config.devices) {
    DeviceProfile p = make_truth_profile(dev);
    const SideRange& r = config.profiling.range_for(dev.kind);
    p.ops_min = static_cast<OpsCount>(r.min_side) * r.min_side * r.min_side;
    p.ops_max = static_cast<OpsCount>(r.max_side) * r.max_side * r.max_side;
    machine.devices.push_back(std::move(p));
  }

  std::size_t fixed = 0;
  for (const SyntheticDevice& dev : config.devices)
    if (dev.priority) ++fixed;
  if (fixed == config.devices.size()) {
    for (std::size_t i = 0; i < config.devices.size(); ++i)
      machine.devices[i].priority = *config.devices[i].priority;
  } else {
    std::vector<std::size_t> order(machine.devices.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> throughput(machine.devices.size());
    for (std::size_t i = 0; i < machine.devices.size(); ++i) {
      const DeviceProfile& d = machine.devices[i];
      const SideRange& r = config.profiling.range_for(d.kind);
      const std::int64_t mid = (r.min_side + r.max_side) / 2;
      const OpsCount ops = static_cast<OpsCount>(mid) * mid * mid;
      throughput[i] = static_cast<double>(ops) / d.compute.predict(ops);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (throughput[a] != throughput[b]) return throughput[a] > throughput[b];
      return machine.devices[a].id < machine.devices[b].id;
    });
    for (std::size_t rank = 0; rank < order.size(); ++rank)
      machine.devices[order[rank]].priority = static_cast<int>(rank);
  }
  return machine;
}

// A random all-accelerator machine in the planner's operating regime:
// moderate speed spread, PCIe-class links, the fastest device first on the
// bus. With every device worth using, exhaustive search and the LP agree;
// machines where a device's full-B transfer outweighs its contribution are
// a different (subset-selection) problem the row-splitting planner does not
// claim.
inline MachineProfile random_accel_machine(Rng& rng, int num_devices) {
  MachineProfile machine;
  machine.bus = true;
  for (int i = 0; i < num_devices; ++i) {
    DeviceProfile d;
    d.id = (i == 0 ? "xpu" : "gpu") + std::to_string(i);
    d.kind = i == 0 ? DeviceKind::xpu : DeviceKind::gpu;
    if (d.kind == DeviceKind::xpu) d.align = 1;
    d.compute.slope = rng.next_range(8e-14, 4e-13);
    d.compute.intercept = rng.next_range(0.001, 0.01);
    d.bandwidth = rng.next_range(16e9, 64e9);
    d.elem_size = rng.next_int(0, 1) ? 4 : 2;
    d.ops_min = 1;
    d.ops_max = OpsCount{1} << 62;
    machine.devices.push_back(std::move(d));
  }
  std::vector<int> order(num_devices);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return machine.devices[a].compute.slope < machine.devices[b].compute.slope;
  });
  for (int rank = 0; rank < num_devices; ++rank)
    machine.devices[order[rank]].priority = rank;
  return machine;
}

inline MatrixDims random_large_dims(Rng& rng) {
  MatrixDims dims;
  dims.m = 20000 + rng.next_int(0, 40000);
  dims.n = 8000 + rng.next_int(0, 12000);
  dims.k = 8000 + rng.next_int(0, 12000);
  return dims;
}

}  // namespace poas::test
