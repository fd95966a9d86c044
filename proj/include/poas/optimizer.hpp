#pragma once

// Workload splitting: a linear program finds the continuous minimum-makespan
// division of rows across devices; dropping and rounding turn it into whole
// rows; an exhaustive grid search over the same timeline model serves as the
// independent reference.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "poas/device_model.hpp"
#include "poas/simplex.hpp"
#include "poas/timeline.hpp"

namespace poas {

struct DeviceShare {
  std::string device_id;
  std::int64_t rows = 0;
  OpsCount ops = 0;       // rows * n * k
  double fraction = 0.0;  // continuous optimum for the planner, rows/m otherwise
  DeviceTimeline timeline;
};

struct WorkloadSplit {
  std::vector<DeviceShare> shares;  // machine order, zero-row devices included
  double makespan = 0.0;            // exact timeline of the whole-row split
  double lp_objective = 0.0;        // continuous optimum; 0 when no LP was solved
  long lp_iterations = 0;
};

// The LP, plus enough labeling to inspect it: variables are the per-device
// share u_i (ops_i = ops_scale * u_i), then per device the end times of
// copy-in, compute, and copy-out, then the makespan T, which is minimized.
struct LpFormulation {
  SimplexProblem problem;
  std::vector<std::string> var_names;
  std::vector<std::string> eq_names;
  std::vector<std::string> ge_names;
  std::vector<int> share_var;                    // per included device
  std::vector<std::array<int, 3>> timeline_var;  // {copy-in, compute, copy-out} end per device
  int makespan_var = -1;
  double ops_scale = 0.0;
  std::vector<std::string> device_ids;  // included devices, machine order
};

// Formulation over a subset of the machine's devices (the drop loop
// re-formulates as devices leave). Phase durations are affine in u_i; the
// input matrix transfer and the launch overhead are charged to every
// formulated device, which is what makes dropping underused devices
// worthwhile.
LpFormulation build_lp_subset(const std::vector<const DeviceProfile*>& devices, bool shared_bus,
                              const MatrixDims& dims);

LpFormulation build_lp(const MachineProfile& machine, const MatrixDims& dims);

// Evaluates a concrete whole-row assignment (machine order, summing to m)
// under the exact timeline model.
WorkloadSplit evaluate_rows(const MachineProfile& machine, const MatrixDims& dims,
                            const std::vector<std::int64_t>& rows);

// Full pipeline: solve the LP, drop devices whose share is below one row
// and re-solve until stable, round to whole rows, and hand leftover rows to
// the CPU (the highest-priority device when there is none).
WorkloadSplit solve_split(const MachineProfile& machine, const MatrixDims& dims);

// Exhaustive search over row assignments on a grid of max(1, m/resolution)
// rows, evaluating the exact timeline for every candidate. Supports up to
// three devices. Deterministic: ties in makespan go to the
// lexicographically smallest row tuple. The parallel and serial variants
// return identical results.
WorkloadSplit oracle_grid_search(const MachineProfile& machine, const MatrixDims& dims,
                                 std::int64_t resolution);
WorkloadSplit oracle_grid_search_serial(const MachineProfile& machine, const MatrixDims& dims,
                                        std::int64_t resolution);

}  // namespace poas
