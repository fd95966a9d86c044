#include "poas/machine_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "poas/error.hpp"
#include "poas/kv_format.hpp"

namespace poas {

const SyntheticDevice* MachineConfig::find(const std::string& id) const {
  for (const SyntheticDevice& d : devices)
    if (d.id == id) return &d;
  return nullptr;
}

void validate_config(const MachineConfig& config) {
  if (config.devices.empty()) fail(errc::invalid_argument, "machine config has no devices");
  validate_profiling_config(config.profiling);
  std::set<std::string> ids;
  std::set<int> priorities;
  std::size_t with_priority = 0;
  for (const SyntheticDevice& d : config.devices) {
    if (d.id.empty()) fail(errc::invalid_argument, "device with empty id");
    if (!ids.insert(d.id).second) fail(errc::invalid_argument, "duplicate device id '" + d.id + "'");
    if (!(d.slope > 0.0)) fail(errc::invalid_argument, "device '" + d.id + "': slope must be positive");
    if (d.intercept < 0.0) fail(errc::invalid_argument, "device '" + d.id + "': negative intercept");
    if (d.kind != DeviceKind::cpu && !(d.bandwidth > 0.0))
      fail(errc::invalid_argument, "device '" + d.id + "': bandwidth must be positive");
    if (d.elem_size == 0) fail(errc::invalid_argument, "device '" + d.id + "': elem_size must be positive");
    if (d.noise < 0.0 || d.noise > 0.2)
      fail(errc::invalid_argument, "device '" + d.id + "': noise must be within [0, 0.2]");
    if (d.drift < 0.0) fail(errc::invalid_argument, "device '" + d.id + "': negative drift");
    if (d.align < 1) fail(errc::invalid_argument, "device '" + d.id + "': align must be positive");
    if (d.priority) {
      ++with_priority;
      if (!priorities.insert(*d.priority).second)
        fail(errc::invalid_argument, "duplicate priority " + std::to_string(*d.priority));
    }
  }
  if (with_priority != 0 && with_priority != config.devices.size())
    fail(errc::invalid_argument, "either every device or none must fix a priority");
}

static const char kConfigHeader[] = "poas-machine v1";

std::string format_machine_config(const MachineConfig& config) {
  std::ostringstream out;
  out << kConfigHeader << "\n\n";
  out << "bus " << (config.bus ? "true" : "false") << "\n";
  out << "\nprofiling\n";
  out << "probes " << config.profiling.probes << "\n";
  out << "repetitions " << config.profiling.repetitions << "\n";
  out << "cpu_min_side " << config.profiling.cpu_range.min_side << "\n";
  out << "cpu_max_side " << config.profiling.cpu_range.max_side << "\n";
  out << "accel_min_side " << config.profiling.accel_range.min_side << "\n";
  out << "accel_max_side " << config.profiling.accel_range.max_side << "\n";
  out << "bandwidth_payload " << config.profiling.bandwidth_payload << "\n";
  for (const SyntheticDevice& d : config.devices) {
    out << "\ndevice " << d.id << "\n";
    out << "kind " << kind_name(d.kind) << "\n";
    out << "true_slope " << kv::format_double(d.slope) << "\n";
    out << "true_intercept " << kv::format_double(d.intercept) << "\n";
    if (d.kind != DeviceKind::cpu)
      out << "true_bandwidth " << kv::format_double(d.bandwidth) << "\n";
    out << "elem_size " << d.elem_size << "\n";
    out << "noise " << kv::format_double(d.noise) << "\n";
    out << "drift " << kv::format_double(d.drift) << "\n";
    if (d.priority) out << "priority " << *d.priority << "\n";
    if (d.kind == DeviceKind::xpu) out << "align " << d.align << "\n";
    if (d.kind == DeviceKind::cpu) out << "cache_bytes " << d.cache_bytes << "\n";
  }
  return out.str();
}

namespace {

const kv::Entry& require(const kv::Block& block, const std::string& key) {
  const kv::Entry* e = block.find(key);
  if (!e) kv::fail_at(block.line, "device '" + block.arg + "' is missing key '" + key + "'");
  return *e;
}

void parse_profiling_block(const kv::Block& block, ProfilingConfig& out) {
  if (!block.arg.empty()) kv::fail_at(block.line, "profiling block takes no argument");
  for (const kv::Entry& e : block.entries) {
    if (e.key == "probes")
      out.probes = static_cast<int>(kv::parse_int(e));
    else if (e.key == "repetitions")
      out.repetitions = static_cast<int>(kv::parse_int(e));
    else if (e.key == "cpu_min_side")
      out.cpu_range.min_side = kv::parse_int(e);
    else if (e.key == "cpu_max_side")
      out.cpu_range.max_side = kv::parse_int(e);
    else if (e.key == "accel_min_side")
      out.accel_range.min_side = kv::parse_int(e);
    else if (e.key == "accel_max_side")
      out.accel_range.max_side = kv::parse_int(e);
    else if (e.key == "bandwidth_payload")
      out.bandwidth_payload = kv::parse_uint(e);
    else
      kv::fail_at(e.line, "unknown profiling key '" + e.key + "'");
  }
}

SyntheticDevice parse_device_block(const kv::Block& block) {
  if (block.arg.empty()) kv::fail_at(block.line, "device block needs an id");
  SyntheticDevice dev;
  dev.id = block.arg;
  const kv::Entry& kind = require(block, "kind");
  const auto k = kind_from_name(kind.value);
  if (!k) kv::fail_at(kind.line, "unknown device kind '" + kind.value + "'");
  dev.kind = *k;
  dev.slope = kv::parse_double(require(block, "true_slope"));
  dev.intercept = kv::parse_double(require(block, "true_intercept"));
  if (dev.kind != DeviceKind::cpu)
    dev.bandwidth = kv::parse_double(require(block, "true_bandwidth"));
  dev.elem_size = static_cast<std::uint32_t>(kv::parse_uint(require(block, "elem_size")));

  for (const kv::Entry& e : block.entries) {
    if (e.key == "kind" || e.key == "true_slope" || e.key == "true_intercept" ||
        e.key == "elem_size")
      continue;
    if (e.key == "true_bandwidth" && dev.kind != DeviceKind::cpu) continue;
    if (e.key == "noise") {
      dev.noise = kv::parse_double(e);
    } else if (e.key == "drift") {
      dev.drift = kv::parse_double(e);
    } else if (e.key == "priority") {
      dev.priority = static_cast<int>(kv::parse_int(e));
    } else if (e.key == "align" && dev.kind == DeviceKind::xpu) {
      dev.align = kv::parse_int(e);
    } else if (e.key == "cache_bytes" && dev.kind == DeviceKind::cpu) {
      dev.cache_bytes = kv::parse_uint(e);
    } else {
      kv::fail_at(e.line, "unknown key '" + e.key + "' for a " + kind_name(dev.kind) + " device");
    }
  }
  return dev;
}

}  // namespace

MachineConfig parse_machine_config(const std::string& text) {
  const kv::File file = kv::parse(text, kConfigHeader);
  MachineConfig config;
  bool saw_bus = false, saw_profiling = false;
  for (const kv::Block& block : file.blocks) {
    if (block.name == "bus") {
      if (!block.entries.empty()) kv::fail_at(block.line, "bus block takes no keys");
      if (saw_bus) kv::fail_at(block.line, "duplicate bus block");
      saw_bus = true;
      config.bus = kv::parse_bool(kv::Entry{"bus", block.arg, block.line});
    } else if (block.name == "profiling") {
      if (saw_profiling) kv::fail_at(block.line, "duplicate profiling block");
      saw_profiling = true;
      parse_profiling_block(block, config.profiling);
    } else if (block.name == "device") {
      config.devices.push_back(parse_device_block(block));
    } else {
      kv::fail_at(block.line, "unknown block '" + block.name + "'");
    }
  }
  validate_config(config);
  return config;
}

void save_machine_config(const std::string& path, const MachineConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_failure, "cannot open '" + path + "' for writing");
  out << format_machine_config(config);
  out.flush();
  if (!out) fail(errc::io_failure, "failed writing '" + path + "'");
}

MachineConfig load_machine_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_failure, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_machine_config(buf.str());
}

std::string machine_hash(const MachineConfig& config) {
  std::vector<DeviceIdentity> ids;
  ids.reserve(config.devices.size());
  for (const SyntheticDevice& d : config.devices)
    ids.push_back(DeviceIdentity{d.id, d.kind, d.elem_size});
  return machine_identity_hash(std::move(ids), config.bus);
}

}  // namespace poas
