#include "poas/scheduler.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "poas/error.hpp"

namespace poas {

Schedule build_schedule(const TilePlan& plan, const MachineProfile& machine) {
  validate_machine(machine);
  validate_dims(plan.dims);
  if (plan.devices.size() != machine.devices.size())
    fail(errc::invalid_argument, "plan/machine size mismatch");
  std::int64_t total = 0;
  for (std::size_t i = 0; i < plan.devices.size(); ++i) {
    if (plan.devices[i].device_id != machine.devices[i].id)
      fail(errc::invalid_argument, "plan/machine device order mismatch");
    total += plan.devices[i].rows;
  }
  if (total != plan.dims.m)
    fail(errc::invalid_argument, "plan covers " + std::to_string(total) + " of " +
                                     std::to_string(plan.dims.m) + " rows");

  std::vector<TimelineEntry> entries(machine.devices.size());
  for (std::size_t i = 0; i < machine.devices.size(); ++i) {
    const DeviceProfile& dev = machine.devices[i];
    const PhaseDurations pd = predicted_phase_durations(dev, plan.devices[i].rows, plan.dims);
    entries[i] = TimelineEntry{dev.priority, dev.uses_bus(), pd.copy_in, pd.compute, pd.copy_out};
  }
  const TimelineResult tl = evaluate_timeline(entries, machine.bus);

  Schedule schedule;
  schedule.machine_hash = machine_hash(machine);
  schedule.dims = plan.dims;
  schedule.makespan = tl.makespan;

  std::vector<std::size_t> order(machine.devices.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return machine.devices[a].priority < machine.devices[b].priority;
  });
  for (std::size_t i : order) {
    ScheduledDevice sd;
    sd.id = machine.devices[i].id;
    sd.priority = machine.devices[i].priority;
    sd.rows = plan.devices[i].rows;
    sd.tiles = plan.devices[i].tiling.tiles;
    sd.timeline = tl.devices[i];
    schedule.devices.push_back(std::move(sd));
  }
  return schedule;
}

Schedule standalone_schedule(const MachineProfile& machine, const std::string& device_id,
                             const MatrixDims& dims) {
  validate_machine(machine);
  validate_dims(dims);
  std::vector<std::int64_t> rows(machine.devices.size(), 0);
  bool found = false;
  for (std::size_t i = 0; i < machine.devices.size(); ++i) {
    if (machine.devices[i].id == device_id) {
      rows[i] = dims.m;
      found = true;
    }
  }
  if (!found) fail(errc::missing_device, "no device '" + device_id + "' in the machine");
  const WorkloadSplit split = evaluate_rows(machine, dims, rows);
  return build_schedule(build_tile_plan(machine, dims, split), machine);
}

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (const char c : s) {
    if (c == '"' || c == '\\') {
      out.push_back('\\');
      out.push_back(c);
    } else if (static_cast<unsigned char>(c) < 0x20) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\u%04x", c);
      out += buf;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string fmt_time(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

void write_interval(std::ostringstream& out, const char* name, const Interval& iv) {
  out << '"' << name << "\": [" << fmt_time(iv.start) << ", " << fmt_time(iv.end) << ']';
}

using json = nlohmann::json;

[[noreturn]] void bad_schedule(const std::string& what) {
  fail(errc::parse_failure, "schedule: " + what);
}

void expect_keys(const json& j, std::initializer_list<const char*> keys, const char* what) {
  if (!j.is_object()) bad_schedule(std::string(what) + " is not an object");
  for (const char* k : keys)
    if (!j.contains(k)) bad_schedule(std::string(what) + " is missing '" + k + "'");
  if (j.size() != keys.size())
    for (auto it = j.begin(); it != j.end(); ++it)
      if (std::none_of(keys.begin(), keys.end(),
                       [&](const char* k) { return it.key() == k; }))
        bad_schedule(std::string(what) + " has unknown key '" + it.key() + "'");
}

std::int64_t get_int(const json& j, const char* key, const char* what) {
  const json& v = j.at(key);
  if (!v.is_number_integer()) bad_schedule(std::string(what) + "." + key + " is not an integer");
  return v.get<std::int64_t>();
}

double get_num(const json& j, const char* key, const char* what) {
  const json& v = j.at(key);
  if (!v.is_number()) bad_schedule(std::string(what) + "." + key + " is not a number");
  return v.get<double>();
}

Interval get_interval(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    bad_schedule(std::string("device.") + key + " is not a [start, end] pair");
  Interval iv{v[0].get<double>(), v[1].get<double>()};
  if (iv.start < 0.0 || iv.end < iv.start)
    bad_schedule(std::string("device.") + key + " interval is not ordered");
  return iv;
}

}  // namespace

std::string format_schedule(const Schedule& schedule) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"version\": " << schedule.version << ",\n";
  out << "  \"machine_hash\": \"" << json_escape(schedule.machine_hash) << "\",\n";
  out << "  \"dims\": {\"m\": " << schedule.dims.m << ", \"n\": " << schedule.dims.n
      << ", \"k\": " << schedule.dims.k << "},\n";
  out << "  \"devices\": [\n";
  for (std::size_t i = 0; i < schedule.devices.size(); ++i) {
    const ScheduledDevice& d = schedule.devices[i];
    out << "    {\n";
    out << "      \"id\": \"" << json_escape(d.id) << "\",\n";
    out << "      \"priority\": " << d.priority << ",\n";
    out << "      \"rows\": " << d.rows << ",\n";
    if (d.tiles.empty()) {
      out << "      \"tiles\": [],\n";
    } else {
      out << "      \"tiles\": [\n";
      for (std::size_t t = 0; t < d.tiles.size(); ++t) {
        out << "        {\"m\": " << d.tiles[t].m << ", \"k\": " << d.tiles[t].k
            << ", \"n\": " << d.tiles[t].n << '}' << (t + 1 < d.tiles.size() ? "," : "") << '\n';
      }
      out << "      ],\n";
    }
    out << "      ";
    write_interval(out, "copy_in", d.timeline.copy_in);
    out << ",\n      ";
    write_interval(out, "compute", d.timeline.compute);
    out << ",\n      ";
    write_interval(out, "copy_out", d.timeline.copy_out);
    out << "\n    }" << (i + 1 < schedule.devices.size() ? "," : "") << '\n';
  }
  out << "  ],\n";
  out << "  \"makespan\": " << fmt_time(schedule.makespan) << "\n";
  out << "}\n";
  return out.str();
}

Schedule parse_schedule(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad_schedule(e.what());
  }
  expect_keys(j, {"version", "machine_hash", "dims", "devices", "makespan"}, "schedule");
  Schedule s;
  s.version = static_cast<int>(get_int(j, "version", "schedule"));
  if (s.version != 1) bad_schedule("unsupported version " + std::to_string(s.version));
  if (!j.at("machine_hash").is_string()) bad_schedule("machine_hash is not a string");
  s.machine_hash = j.at("machine_hash").get<std::string>();

  const json& dims = j.at("dims");
  expect_keys(dims, {"m", "n", "k"}, "dims");
  s.dims.m = get_int(dims, "m", "dims");
  s.dims.n = get_int(dims, "n", "dims");
  s.dims.k = get_int(dims, "k", "dims");
  validate_dims(s.dims);

  const json& devices = j.at("devices");
  if (!devices.is_array() || devices.empty()) bad_schedule("devices must be a non-empty array");
  for (const json& jd : devices) {
    expect_keys(jd, {"id", "priority", "rows", "tiles", "copy_in", "compute", "copy_out"},
                "device");
    ScheduledDevice d;
    if (!jd.at("id").is_string()) bad_schedule("device.id is not a string");
    d.id = jd.at("id").get<std::string>();
    if (d.id.empty()) bad_schedule("device.id is empty");
    d.priority = static_cast<int>(get_int(jd, "priority", "device"));
    d.rows = get_int(jd, "rows", "device");
    if (d.rows < 0) bad_schedule("device.rows is negative");
    const json& tiles = jd.at("tiles");
    if (!tiles.is_array()) bad_schedule("device.tiles is not an array");
    for (const json& jt : tiles) {
      expect_keys(jt, {"m", "k", "n"}, "tile");
      Tile t;
      t.m = get_int(jt, "m", "tile");
      t.k = get_int(jt, "k", "tile");
      t.n = get_int(jt, "n", "tile");
      if (t.m < 1 || t.k < 1 || t.n < 1) bad_schedule("tile dimensions must be positive");
      d.tiles.push_back(t);
    }
    d.timeline.copy_in = get_interval(jd, "copy_in");
    d.timeline.compute = get_interval(jd, "compute");
    d.timeline.copy_out = get_interval(jd, "copy_out");
    d.timeline.finish = std::max(d.timeline.compute.end, d.timeline.copy_out.end);
    s.devices.push_back(std::move(d));
  }
  for (std::size_t i = 1; i < s.devices.size(); ++i)
    if (s.devices[i - 1].priority >= s.devices[i].priority)
      bad_schedule("devices are not in ascending priority order");

  s.makespan = get_num(j, "makespan", "schedule");
  if (s.makespan < 0.0) bad_schedule("makespan is negative");
  return s;
}

void save_schedule(const std::string& path, const Schedule& schedule) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_failure, "cannot open '" + path + "' for writing");
  out << format_schedule(schedule);
  out.flush();
  if (!out) fail(errc::io_failure, "failed writing '" + path + "'");
}

Schedule load_schedule(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_failure, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_schedule(buf.str());
}

}  // namespace poas
