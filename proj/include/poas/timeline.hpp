#pragma once

// Exact evaluation of the co-execution timeline for a fixed set of phase
// durations. Every consumer (planner re-evaluation, scheduler, exhaustive
// search, simulator) goes through this one routine so they cannot drift
// apart on the bus semantics.

#include <cstddef>
#include <vector>

namespace poas {

struct Interval {
  double start = 0.0;
  double end = 0.0;

  double duration() const { return end - start; }
};

struct DeviceTimeline {
  Interval copy_in;
  Interval compute;
  Interval copy_out;
  double finish = 0.0;
};

// One device's inputs to the timeline: its bus priority, whether its copies
// occupy the shared bus, and the three phase durations.
struct TimelineEntry {
  int priority = 0;
  bool uses_bus = false;
  double copy_in = 0.0;
  double compute = 0.0;
  double copy_out = 0.0;
};

// Bus discipline, with entries taken in ascending priority order:
//   - copy-ins run back to back from t = 0;
//   - each compute starts when its own copy-in ends (immediately for
//     devices with no copies);
//   - copy-outs run back to back in the same order, the first waiting
//     for the bus to finish the last copy-in;
//   - a device's finish is its copy-out end (compute end if it has none).
// With `shared_bus` false every device gets a private link: copy-in at 0,
// copy-out right after its own compute.
// `out` must hold `count` elements, ordered like `entries`. Returns the
// makespan. Allocation-free so the exhaustive search can afford it.
double evaluate_timeline_into(const TimelineEntry* entries, std::size_t count, bool shared_bus,
                              DeviceTimeline* out);

struct TimelineResult {
  std::vector<DeviceTimeline> devices;  // same order as the input entries
  double makespan = 0.0;
};

TimelineResult evaluate_timeline(const std::vector<TimelineEntry>& entries, bool shared_bus);

}  // namespace poas
