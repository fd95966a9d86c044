#include "poas/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "poas/error.hpp"
#include "poas/kv_format.hpp"

namespace poas {

void validate_profiling_config(const ProfilingConfig& config) {
  if (config.probes < 2) fail(errc::invalid_argument, "need at least two probe sizes");
  if (config.repetitions < 1) fail(errc::invalid_argument, "need at least one repetition");
  for (const SideRange* r : {&config.cpu_range, &config.accel_range}) {
    if (r->min_side < 1 || r->max_side < r->min_side)
      fail(errc::invalid_argument, "bad probe side range");
  }
  if (config.bandwidth_payload < (1ULL << 20))
    fail(errc::invalid_argument, "bandwidth payload must be at least 1 MiB");
}

std::vector<ProfileSample> run_compute_probes(DeviceBackend& backend, const SideRange& range,
                                              int probes, int repetitions) {
  if (probes < 2) fail(errc::invalid_argument, "need at least two probe sizes");
  if (repetitions < 1) fail(errc::invalid_argument, "need at least one repetition");
  if (range.min_side < 1 || range.max_side < range.min_side)
    fail(errc::invalid_argument, "bad probe side range");

  std::vector<ProfileSample> samples;
  samples.reserve(static_cast<std::size_t>(probes));
  std::int64_t prev = -1;
  for (int i = 0; i < probes; ++i) {
    // Even spacing with exact endpoints; rounding can merge neighbours when
    // the range is narrower than the probe count.
    const double t = static_cast<double>(i) / static_cast<double>(probes - 1);
    std::int64_t side =
        range.min_side + std::llround(t * static_cast<double>(range.max_side - range.min_side));
    side = std::clamp(side, range.min_side, range.max_side);
    if (side == prev) continue;
    prev = side;

    double total = 0.0;
    for (int r = 0; r < repetitions; ++r) {
      const double sec = backend.time_gemm(side);
      if (!(sec > 0.0) || !std::isfinite(sec))
        fail(errc::non_positive_time, "gemm at side " + std::to_string(side) +
                                          " measured a non-positive time");
      total += sec;
    }
    ProfileSample s;
    s.side = side;
    s.ops = static_cast<OpsCount>(side) * static_cast<OpsCount>(side) * static_cast<OpsCount>(side);
    s.seconds = total / repetitions;
    samples.push_back(s);
  }
  return samples;
}

double run_bandwidth_probe(DeviceBackend& backend, std::uint64_t payload, int repetitions) {
  if (payload < (1ULL << 20)) fail(errc::invalid_argument, "bandwidth payload must be at least 1 MiB");
  if (repetitions < 1) fail(errc::invalid_argument, "need at least one repetition");
  double total = 0.0;
  for (int r = 0; r < repetitions; ++r) {
    const double sec = backend.time_transfer(payload);
    if (!(sec > 0.0) || !std::isfinite(sec))
      fail(errc::non_positive_time, "transfer probe measured a non-positive time");
    total += sec;
  }
  return static_cast<double>(payload) / (total / repetitions);
}

MachineProfile fit_machine(const std::vector<DeviceProbeData>& probes, bool bus,
                           const ProfilingConfig& config) {
  if (probes.empty()) fail(errc::invalid_argument, "no devices to fit");
  validate_profiling_config(config);

  MachineProfile machine;
  machine.bus = bus;
  for (const DeviceProbeData& p : probes) {
    DeviceProfile dev;
    dev.id = p.id;
    dev.kind = p.kind;
    dev.elem_size = p.elem_size;
    std::vector<ModelSample> ms;
    ms.reserve(p.samples.size());
    for (const ProfileSample& s : p.samples) ms.push_back(ModelSample{s.ops, s.seconds});
    dev.compute = fit_linear(ms);
    dev.bandwidth = p.bandwidth;
    dev.align = p.align;
    dev.cache_bytes = p.cache_bytes;
    const SideRange& r = config.range_for(p.kind);
    dev.ops_min = static_cast<OpsCount>(r.min_side) * static_cast<OpsCount>(r.min_side) *
                  static_cast<OpsCount>(r.min_side);
    dev.ops_max = static_cast<OpsCount>(r.max_side) * static_cast<OpsCount>(r.max_side) *
                  static_cast<OpsCount>(r.max_side);
    machine.devices.push_back(std::move(dev));
  }

  // Priority assignment: fixed everywhere or computed everywhere.
  std::size_t fixed = 0;
  for (const DeviceProbeData& p : probes)
    if (p.fixed_priority) ++fixed;
  if (fixed == probes.size()) {
    for (std::size_t i = 0; i < probes.size(); ++i)
      machine.devices[i].priority = *probes[i].fixed_priority;
  } else if (fixed == 0) {
    // Rank by modeled throughput at the midpoint of each device's own
    // probing range: faster devices go first on the bus.
    std::vector<std::size_t> order(machine.devices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> throughput(machine.devices.size());
    for (std::size_t i = 0; i < machine.devices.size(); ++i) {
      const DeviceProfile& d = machine.devices[i];
      const SideRange& r = config.range_for(d.kind);
      const std::int64_t mid = (r.min_side + r.max_side) / 2;
      const OpsCount ops =
          static_cast<OpsCount>(mid) * static_cast<OpsCount>(mid) * static_cast<OpsCount>(mid);
      throughput[i] = static_cast<double>(ops) / d.compute.predict(ops);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (throughput[a] != throughput[b]) return throughput[a] > throughput[b];
      return machine.devices[a].id < machine.devices[b].id;
    });
    for (std::size_t rank = 0; rank < order.size(); ++rank)
      machine.devices[order[rank]].priority = static_cast<int>(rank);
  } else {
    fail(errc::invalid_argument, "either every device or none must fix a priority");
  }

  validate_machine(machine);
  return machine;
}

static const char kProfileHeader[] = "poas-profile v1";

std::string format_profile(const MachineProfile& machine) {
  std::ostringstream out;
  out << kProfileHeader << "\n\n";
  out << "bus " << (machine.bus ? "true" : "false") << "\n";
  for (const DeviceProfile& d : machine.devices) {
    out << "\ndevice " << d.id << "\n";
    out << "kind " << kind_name(d.kind) << "\n";
    out << "slope " << kv::format_double(d.compute.slope) << "\n";
    out << "intercept " << kv::format_double(d.compute.intercept) << "\n";
    out << "bandwidth " << kv::format_double(d.bandwidth) << "\n";
    out << "elem_size " << d.elem_size << "\n";
    out << "priority " << d.priority << "\n";
    if (d.kind == DeviceKind::xpu) out << "align " << d.align << "\n";
    if (d.kind == DeviceKind::cpu) out << "cache_bytes " << d.cache_bytes << "\n";
    out << "ops_min " << d.ops_min << "\n";
    out << "ops_max " << d.ops_max << "\n";
  }
  return out.str();
}

static const kv::Entry& require(const kv::Block& block, const std::string& key) {
  const kv::Entry* e = block.find(key);
  if (!e) kv::fail_at(block.line, "device '" + block.arg + "' is missing key '" + key + "'");
  return *e;
}

MachineProfile parse_profile(const std::string& text) {
  const kv::File file = kv::parse(text, kProfileHeader);
  MachineProfile machine;
  bool saw_bus = false;
  for (const kv::Block& block : file.blocks) {
    if (block.name == "bus") {
      if (!block.entries.empty()) kv::fail_at(block.line, "bus block takes no keys");
      if (saw_bus) kv::fail_at(block.line, "duplicate bus block");
      saw_bus = true;
      machine.bus = kv::parse_bool(kv::Entry{"bus", block.arg, block.line});
      continue;
    }
    if (block.name != "device")
      kv::fail_at(block.line, "unknown block '" + block.name + "'");
    if (block.arg.empty()) kv::fail_at(block.line, "device block needs an id");

    DeviceProfile dev;
    dev.id = block.arg;
    const kv::Entry& kind = require(block, "kind");
    const auto k = kind_from_name(kind.value);
    if (!k) kv::fail_at(kind.line, "unknown device kind '" + kind.value + "'");
    dev.kind = *k;
    dev.compute.slope = kv::parse_double(require(block, "slope"));
    dev.compute.intercept = kv::parse_double(require(block, "intercept"));
    dev.bandwidth = kv::parse_double(require(block, "bandwidth"));
    dev.elem_size = static_cast<std::uint32_t>(kv::parse_uint(require(block, "elem_size")));
    dev.priority = static_cast<int>(kv::parse_int(require(block, "priority")));
    if (dev.kind == DeviceKind::xpu) dev.align = kv::parse_int(require(block, "align"));
    if (dev.kind == DeviceKind::cpu) dev.cache_bytes = kv::parse_uint(require(block, "cache_bytes"));
    dev.ops_min = kv::parse_uint(require(block, "ops_min"));
    dev.ops_max = kv::parse_uint(require(block, "ops_max"));

    static const std::set<std::string> common = {"kind",     "slope",    "intercept", "bandwidth",
                                                 "elem_size", "priority", "ops_min",   "ops_max"};
    for (const kv::Entry& e : block.entries) {
      if (common.count(e.key)) continue;
      if (e.key == "align" && dev.kind == DeviceKind::xpu) continue;
      if (e.key == "cache_bytes" && dev.kind == DeviceKind::cpu) continue;
      kv::fail_at(e.line, "unknown key '" + e.key + "' for a " + kind_name(dev.kind) + " device");
    }
    machine.devices.push_back(std::move(dev));
  }
  validate_machine(machine);
  return machine;
}

void save_profile(const std::string& path, const MachineProfile& machine) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_failure, "cannot open '" + path + "' for writing");
  out << format_profile(machine);
  out.flush();
  if (!out) fail(errc::io_failure, "failed writing '" + path + "'");
}

MachineProfile load_profile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_failure, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_profile(buf.str());
}

}  // namespace poas
