#pragma once

// Probing and model fitting: drive a backend across a grid of square GEMM
// sizes, time transfers, fit the linear model, and read/write the resulting
// machine profile as a plain-text file.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poas/backend.hpp"
#include "poas/device_model.hpp"

namespace poas {

struct ProfileSample {
  std::int64_t side = 0;
  OpsCount ops = 0;     // side^3
  double seconds = 0.0; // mean over repetitions
};

struct SideRange {
  std::int64_t min_side = 0;
  std::int64_t max_side = 0;
};

struct ProfilingConfig {
  SideRange cpu_range{1000, 2000};
  SideRange accel_range{3000, 6000};
  int probes = 30;
  int repetitions = 5;
  std::uint64_t bandwidth_payload = 256ULL << 20;

  const SideRange& range_for(DeviceKind kind) const {
    return kind == DeviceKind::cpu ? cpu_range : accel_range;
  }
};

void validate_profiling_config(const ProfilingConfig& config);

// `probes` integer sides spread evenly across [range.min_side,
// range.max_side], endpoints included; each timed `repetitions` times and
// averaged. Throws Error(errc::non_positive_time) if the backend reports a
// non-positive measurement.
std::vector<ProfileSample> run_compute_probes(DeviceBackend& backend, const SideRange& range,
                                              int probes, int repetitions);

// payload/mean(seconds) over `repetitions` transfers of `payload` bytes.
// The payload must be at least 1 MiB so per-transfer overhead stays noise.
double run_bandwidth_probe(DeviceBackend& backend, std::uint64_t payload, int repetitions);

// Everything measured about one device before fitting.
struct DeviceProbeData {
  std::string id;
  DeviceKind kind = DeviceKind::cpu;
  std::uint32_t elem_size = 0;
  std::vector<ProfileSample> samples;
  double bandwidth = 0.0;
  std::int64_t align = 0;
  std::uint64_t cache_bytes = 0;
  std::optional<int> fixed_priority;
};

// Fits every device and assembles the machine profile. Priorities come
// from fixed_priority when set (then every device must set one); otherwise
// devices are ranked by descending modeled throughput at the midpoint of
// their probing range, ties broken by id. Each device also records its
// admissible tile window: the cubes of its probing side range, the region
// where the fitted model was actually observed.
MachineProfile fit_machine(const std::vector<DeviceProbeData>& probes, bool bus,
                           const ProfilingConfig& config);

std::string format_profile(const MachineProfile& machine);
MachineProfile parse_profile(const std::string& text);

void save_profile(const std::string& path, const MachineProfile& machine);
MachineProfile load_profile(const std::string& path);

}  // namespace poas
