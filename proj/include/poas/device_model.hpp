#pragma once

// Device performance models: a linear time model per device (seconds as a
// function of multiply-accumulate count), transfer-volume accounting for
// row-sliced GEMM work, and the machine profile that groups devices together
// with their bus topology.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace poas {

// Multiply-accumulate count. c = m*n*k fits easily: 60000^3 < 2^63.
using OpsCount = std::uint64_t;

struct MatrixDims {
  std::int64_t m = 0;
  std::int64_t n = 0;
  std::int64_t k = 0;

  // c for the full product, c = m*n*k.
  OpsCount total_ops() const;
  // Ops contributed by a single row of A: n*k.
  OpsCount row_ops() const;
};

// Throws Error(errc::invalid_argument) unless all dims are >= 1 and the
// op count fits a uint64.
void validate_dims(const MatrixDims& dims);

// Parses "MxNxK" (e.g. "30000x30000x30000").
MatrixDims parse_dims(const std::string& text);

enum class DeviceKind { cpu, gpu, xpu };

const char* kind_name(DeviceKind kind);
std::optional<DeviceKind> kind_from_name(const std::string& name);

// t(c) = slope*c + intercept, both in seconds (slope in seconds per op).
struct LinearModel {
  double slope = 0.0;
  double intercept = 0.0;

  double predict(OpsCount ops) const { return slope * static_cast<double>(ops) + intercept; }
};

struct DeviceProfile {
  std::string id;
  DeviceKind kind = DeviceKind::cpu;
  LinearModel compute;
  double bandwidth = 0.0;  // bytes/second; 0 for devices with no copies (CPU)
  std::uint32_t elem_size = 0;
  int priority = 0;  // 0 = first on the bus
  // Tile-size window: admissible multiply-accumulate count per tile.
  OpsCount ops_min = 0;
  OpsCount ops_max = 0;
  std::int64_t align = 0;        // XPU row alignment; 0 otherwise
  std::uint64_t cache_bytes = 0; // CPU last-level cache; 0 otherwise

  bool uses_bus() const { return kind != DeviceKind::cpu; }
};

struct MachineProfile {
  std::vector<DeviceProfile> devices;
  bool bus = true;  // true: one shared link; false: a private link per device

  const DeviceProfile* find(const std::string& id) const;
  // Devices sorted by ascending priority.
  std::vector<const DeviceProfile*> by_priority() const;
};

// Structural checks: nonempty, unique ids, unique priorities, positive
// slope, nonnegative intercept, positive elem_size, positive bandwidth on
// bus devices, ops_min <= ops_max when a window is present.
void validate_machine(const MachineProfile& machine);

struct ModelSample {
  OpsCount ops = 0;
  double seconds = 0.0;
};

// Least-squares fit of t = slope*c + intercept. A negative fitted intercept
// is clamped to 0 and the slope refit as mean(t)/mean(c). Throws
// Error(errc::degenerate_samples) if fewer than two distinct op counts or
// the resulting slope is not positive.
LinearModel fit_linear(const std::vector<ModelSample>& samples);

double predict_compute(const DeviceProfile& dev, OpsCount ops);

struct TransferBytes {
  std::uint64_t in = 0;   // A row slice plus the whole of B
  std::uint64_t out = 0;  // C row slice
};

// Volume moved for a contiguous row slice worth `ops` multiply-accumulates:
//   in  = elem * (ops/n + k*n)
//   out = elem * (ops/k)
// Throws Error(errc::not_row_aligned) unless ops is a multiple of n*k.
// Zero ops means no transfer at all (the device is not used).
TransferBytes transfer_bytes(const DeviceProfile& dev, OpsCount ops, const MatrixDims& dims);

// bytes/bandwidth for each direction; 0 for devices with no copies.
struct CopyTimes {
  double in = 0.0;
  double out = 0.0;
};

CopyTimes predict_copy(const DeviceProfile& dev, OpsCount ops, const MatrixDims& dims);

// Predicted durations of the three phases for `rows` rows of A. The single
// shared expression for every consumer (planner, scheduler, simulator), so
// identical inputs give bit-identical results.
struct PhaseDurations {
  double copy_in = 0.0;
  double compute = 0.0;
  double copy_out = 0.0;
};

PhaseDurations predicted_phase_durations(const DeviceProfile& dev, std::int64_t rows,
                                         const MatrixDims& dims);

// Identity of one device as far as plan/run matching is concerned.
struct DeviceIdentity {
  std::string id;
  DeviceKind kind = DeviceKind::cpu;
  std::uint32_t elem_size = 0;
};

// FNV-1a 64 over the sorted identity list plus the bus flag, as 16 hex
// chars. Captures topology, not calibration: refitting the same hardware
// keeps the hash stable.
std::string machine_identity_hash(std::vector<DeviceIdentity> identities, bool bus);

std::string machine_hash(const MachineProfile& machine);

}  // namespace poas
