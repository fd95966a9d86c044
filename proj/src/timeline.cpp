#include "poas/timeline.hpp"

#include <algorithm>
#include <array>

namespace poas {

double evaluate_timeline_into(const TimelineEntry* entries, std::size_t count, bool shared_bus,
                              DeviceTimeline* out) {
  // Priority permutation on the stack for realistic device counts.
  std::array<std::size_t, 16> small;
  std::vector<std::size_t> big;
  std::size_t* order = small.data();
  if (count > small.size()) {
    big.resize(count);
    order = big.data();
  }
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  std::sort(order, order + count,
            [&](std::size_t a, std::size_t b) { return entries[a].priority < entries[b].priority; });

  double makespan = 0.0;

  if (!shared_bus) {
    for (std::size_t i = 0; i < count; ++i) {
      const TimelineEntry& e = entries[i];
      DeviceTimeline& t = out[i];
      t.copy_in = {0.0, e.copy_in};
      t.compute = {t.copy_in.end, t.copy_in.end + e.compute};
      t.copy_out = {t.compute.end, t.compute.end + e.copy_out};
      t.finish = e.uses_bus ? t.copy_out.end : t.compute.end;
      makespan = std::max(makespan, t.finish);
    }
    return makespan;
  }

  // Copy-ins back to back from t = 0; CPU-style entries occupy no bus time.
  double bus = 0.0;
  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t i = order[r];
    const TimelineEntry& e = entries[i];
    DeviceTimeline& t = out[i];
    if (e.uses_bus) {
      t.copy_in = {bus, bus + e.copy_in};
      bus = t.copy_in.end;
    } else {
      t.copy_in = {0.0, 0.0};
    }
    t.compute = {t.copy_in.end, t.copy_in.end + e.compute};
  }

  // Copy-outs in the same order; the first waits for the bus to clear the
  // last copy-in.
  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t i = order[r];
    const TimelineEntry& e = entries[i];
    DeviceTimeline& t = out[i];
    if (e.uses_bus) {
      const double start = std::max(t.compute.end, bus);
      t.copy_out = {start, start + e.copy_out};
      bus = t.copy_out.end;
      t.finish = t.copy_out.end;
    } else {
      t.copy_out = {t.compute.end, t.compute.end};
      t.finish = t.compute.end;
    }
    makespan = std::max(makespan, t.finish);
  }
  return makespan;
}

TimelineResult evaluate_timeline(const std::vector<TimelineEntry>& entries, bool shared_bus) {
  TimelineResult result;
  result.devices.resize(entries.size());
  result.makespan =
      evaluate_timeline_into(entries.data(), entries.size(), shared_bus, result.devices.data());
  return result;
}

}  // namespace poas
