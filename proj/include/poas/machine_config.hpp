#pragma once

// Declarative synthetic machines: per-device ground-truth performance laws
// with noise and drift knobs, plus the probing configuration. Same block
// format as the profile file, one parser underneath.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poas/device_model.hpp"
#include "poas/profiler.hpp"

namespace poas {

struct SyntheticDevice {
  std::string id;
  DeviceKind kind = DeviceKind::cpu;
  double slope = 0.0;      // ground truth, seconds per op
  double intercept = 0.0;  // seconds
  double bandwidth = 0.0;  // bytes/second; absent for CPUs
  std::uint32_t elem_size = 0;
  double noise = 0.0;  // relative std dev of the multiplicative factor, [0, 0.2]
  double drift = 0.0;  // fractional compute slowdown per second of timeline
  std::optional<int> priority;
  std::int64_t align = 8;                     // row alignment (XPU)
  std::uint64_t cache_bytes = 32ULL << 20;    // LLC size (CPU, diagnostics)
};

struct MachineConfig {
  std::vector<SyntheticDevice> devices;
  bool bus = true;
  ProfilingConfig profiling;

  const SyntheticDevice* find(const std::string& id) const;
};

void validate_config(const MachineConfig& config);

std::string format_machine_config(const MachineConfig& config);
MachineConfig parse_machine_config(const std::string& text);

void save_machine_config(const std::string& path, const MachineConfig& config);
MachineConfig load_machine_config(const std::string& path);

// Same identity hash the fitted profile carries; a schedule planned on a
// profile of this machine matches it.
std::string machine_hash(const MachineConfig& config);

}  // namespace poas
