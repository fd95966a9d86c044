#pragma once

// Synthetic execution: ground-truth probing backends for the profiler, a
// deterministic discrete-event run of a schedule under noise and drift, and
// the multi-input measured-vs-predicted evaluation report.

#include <cstdint>
#include <string>
#include <vector>

#include "poas/backend.hpp"
#include "poas/device_model.hpp"
#include "poas/machine_config.hpp"
#include "poas/optimizer.hpp"
#include "poas/rng.hpp"
#include "poas/scheduler.hpp"
#include "poas/timeline.hpp"

namespace poas {

// Probing backend over the device's ground-truth laws. Every timing call
// draws one noise factor from the device's private "#probe" stream, so
// measurements are reproducible per (master_seed, id) regardless of when
// other devices are probed.
BackendPtr make_synthetic_backend(const SyntheticDevice& dev, std::uint64_t master_seed);

// Probes and fits every configured device into a machine profile.
MachineProfile profile_machine(const MachineConfig& config, std::uint64_t seed);

// The ground-truth laws viewed as a profile, so simulated durations and
// schedule predictions are built from the one expression.
DeviceProfile make_truth_profile(const SyntheticDevice& dev);

struct PhaseError {
  double measured = 0.0;   // mean simulated seconds across repeats
  double predicted = 0.0;  // the schedule's figure
  double error_pct = 0.0;  // 100 * (measured - predicted) / measured; 0 when idle
};

struct DeviceOutcome {
  std::string id;
  std::int64_t rows = 0;
  PhaseError copy_in, compute, copy_out;
  PhaseError copy;    // both transfers combined (the memory figure)
  PhaseError finish;  // the device's completion time
};

struct SimulationResult {
  std::vector<DeviceOutcome> devices;  // schedule order
  double measured_makespan = 0.0;      // mean across repeats
  double predicted_makespan = 0.0;
  double makespan_error_pct = 0.0;
  // Per-metric spread across this run's busy devices.
  double rmse_compute = 0.0;
  double rmse_copy = 0.0;
  double rmse_finish = 0.0;
  int repeats = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<DeviceTimeline>> repeat_timelines;  // [repeat][schedule device]
};

// Re-executes the schedule's phase order with durations drawn from the
// ground truth: base duration x noise factor, compute additionally scaled
// by (1 + drift * its start time). Transfer starts come from bus event
// ordering, not from the schedule's predicted intervals. Each device
// consumes exactly three Gaussians per repeat (copy-in, compute, copy-out),
// drawn from its own stream keyed by (seed, device id).
SimulationResult simulate(const Schedule& schedule, const MachineConfig& config, int repeats,
                          std::uint64_t seed);

struct EvalInput {
  std::string name;
  MatrixDims dims;
};

struct EvalOptions {
  int repeats = 3;
  std::uint64_t seed = 0;
};

struct InputEvaluation {
  EvalInput input;
  double tops = 0.0;  // m*n*k / 1e12
  WorkloadSplit split;
  Schedule schedule;
  SimulationResult coexec;
  // Machine order, parallel to the profile's device list:
  std::vector<double> share_pct;             // realized rows / m * 100
  std::vector<double> standalone_makespan;   // measured
  std::vector<double> speedup;               // standalone / co-executed, measured
};

struct DeviceRmse {
  std::string id;
  double finish = 0.0;
  double compute = 0.0;
  double copy = 0.0;
};

struct EvaluationReport {
  std::string machine_hash;
  std::vector<std::string> device_ids;  // machine order
  std::vector<InputEvaluation> inputs;
  std::vector<DeviceRmse> rmse;  // per device across all inputs
  int repeats = 0;
  std::uint64_t seed = 0;
};

// plan -> schedule -> simulate for co-execution and for each standalone
// device, per input. Inputs fan out across threads with per-input seeds
// seed + index, so the report is identical at any thread count.
EvaluationReport evaluate_inputs(const MachineProfile& profile, const MachineConfig& config,
                                 const std::vector<EvalInput>& inputs, const EvalOptions& options);

// JSON array of {"name", "m", "n", "k"}.
std::vector<EvalInput> load_inputs(const std::string& path);

std::string format_report_text(const EvaluationReport& report);
std::string format_report_json(const EvaluationReport& report);

}  // namespace poas
