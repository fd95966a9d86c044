#pragma once

// Static bus schedule: the tile plan realized as explicit per-device
// copy-in/compute/copy-out intervals on a common clock, serialized as JSON.

#include <cstdint>
#include <string>
#include <vector>

#include "poas/adapter.hpp"
#include "poas/device_model.hpp"
#include "poas/timeline.hpp"

namespace poas {

struct ScheduledDevice {
  std::string id;
  int priority = 0;
  std::int64_t rows = 0;
  std::vector<Tile> tiles;
  DeviceTimeline timeline;
};

struct Schedule {
  int version = 1;
  std::string machine_hash;
  MatrixDims dims;
  std::vector<ScheduledDevice> devices;  // ascending priority, idle devices included
  double makespan = 0.0;
};

// Lays the plan out on the timeline. Durations are the device-model
// predictions for each device's whole row slice; interval placement follows
// the priority-ordered bus discipline.
Schedule build_schedule(const TilePlan& plan, const MachineProfile& machine);

// The whole product on one device (the speedup baseline). Built through the
// regular plan pipeline, so alignment shaving may hand a few rows to the
// CPU when the row count demands it.
Schedule standalone_schedule(const MachineProfile& machine, const std::string& device_id,
                             const MatrixDims& dims);

// JSON with a fixed field order and times at 9 decimal places;
// save -> load -> save is byte-identical.
std::string format_schedule(const Schedule& schedule);
Schedule parse_schedule(const std::string& text);

void save_schedule(const std::string& path, const Schedule& schedule);
Schedule load_schedule(const std::string& path);

}  // namespace poas
