#include "poas/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "poas/adapter.hpp"
#include "poas/error.hpp"
#include "poas/log.hpp"

namespace poas {

namespace {

double noise_factor(Rng& rng, double sigma) {
  const double z = std::clamp(rng.next_gaussian(), -3.0, 3.0);
  return 1.0 + sigma * z;
}

class SyntheticBackend final : public DeviceBackend {
 public:
  SyntheticBackend(const SyntheticDevice& dev, std::uint64_t master_seed)
      : dev_(dev), rng_(Rng::for_stream(master_seed, dev.id + "#probe")) {}

  double time_gemm(std::int64_t side) override {
    const double ops = static_cast<double>(side) * static_cast<double>(side) *
                       static_cast<double>(side);
    return (dev_.slope * ops + dev_.intercept) * noise_factor(rng_, dev_.noise);
  }

  double time_transfer(std::uint64_t bytes) override {
    return (static_cast<double>(bytes) / dev_.bandwidth) * noise_factor(rng_, dev_.noise);
  }

  bool has_transfers() const override { return dev_.kind != DeviceKind::cpu; }

 private:
  SyntheticDevice dev_;
  Rng rng_;
};

}  // namespace

BackendPtr make_synthetic_backend(const SyntheticDevice& dev, std::uint64_t master_seed) {
  return std::make_unique<SyntheticBackend>(dev, master_seed);
}

MachineProfile profile_machine(const MachineConfig& config, std::uint64_t seed) {
  validate_config(config);
  std::vector<DeviceProbeData> probes;
  probes.reserve(config.devices.size());
  for (const SyntheticDevice& dev : config.devices) {
    const BackendPtr backend = make_synthetic_backend(dev, seed);
    DeviceProbeData data;
    data.id = dev.id;
    data.kind = dev.kind;
    data.elem_size = dev.elem_size;
    data.samples = run_compute_probes(*backend, config.profiling.range_for(dev.kind),
                                      config.profiling.probes, config.profiling.repetitions);
    if (backend->has_transfers())
      data.bandwidth = run_bandwidth_probe(*backend, config.profiling.bandwidth_payload,
                                           config.profiling.repetitions);
    if (dev.kind == DeviceKind::xpu) data.align = dev.align;
    if (dev.kind == DeviceKind::cpu) data.cache_bytes = dev.cache_bytes;
    data.fixed_priority = dev.priority;
    probes.push_back(std::move(data));
  }
  return fit_machine(probes, config.bus, config.profiling);
}

DeviceProfile make_truth_profile(const SyntheticDevice& dev) {
  DeviceProfile p;
  p.id = dev.id;
  p.kind = dev.kind;
  p.compute = LinearModel{dev.slope, dev.intercept};
  p.bandwidth = dev.bandwidth;
  p.elem_size = dev.elem_size;
  p.align = dev.align;
  p.cache_bytes = dev.cache_bytes;
  return p;
}

namespace {

double rel_err_pct(double measured, double predicted) {
  if (measured == 0.0 && predicted == 0.0) return 0.0;
  return 100.0 * (measured - predicted) / measured;
}

double rms(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (const double v : values) sum += v * v;
  return std::sqrt(sum / static_cast<double>(values.size()));
}

}  // namespace

SimulationResult simulate(const Schedule& schedule, const MachineConfig& config, int repeats,
                          std::uint64_t seed) {
  if (repeats < 1) fail(errc::invalid_argument, "repeats must be positive");
  validate_config(config);
  if (schedule.devices.empty()) fail(errc::invalid_argument, "schedule has no devices");

  const std::size_t nd = schedule.devices.size();
  std::vector<const SyntheticDevice*> syn(nd);
  std::vector<DeviceProfile> truth(nd);
  std::vector<PhaseDurations> base(nd);
  std::vector<Rng> stream;
  stream.reserve(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    const ScheduledDevice& sd = schedule.devices[i];
    syn[i] = config.find(sd.id);
    if (!syn[i]) fail(errc::missing_device, "no configured device '" + sd.id + "'");
    truth[i] = make_truth_profile(*syn[i]);
    base[i] = predicted_phase_durations(truth[i], sd.rows, schedule.dims);
    stream.push_back(Rng::for_stream(seed, sd.id));
  }

  SimulationResult result;
  result.repeats = repeats;
  result.seed = seed;
  result.repeat_timelines.reserve(static_cast<std::size_t>(repeats));

  std::vector<double> sum_in(nd, 0.0), sum_comp(nd, 0.0), sum_out(nd, 0.0), sum_finish(nd, 0.0);
  double sum_makespan = 0.0;
  std::vector<TimelineEntry> entries(nd);

  for (int rep = 0; rep < repeats; ++rep) {
    // Three draws per device per repeat, idle or not, so a device's stream
    // position depends only on the repeat index.
    std::vector<double> dur_in(nd), dur_comp(nd), dur_out(nd);
    for (std::size_t i = 0; i < nd; ++i) {
      const double f_in = noise_factor(stream[i], syn[i]->noise);
      const double f_comp = noise_factor(stream[i], syn[i]->noise);
      const double f_out = noise_factor(stream[i], syn[i]->noise);
      dur_in[i] = base[i].copy_in * f_in;
      dur_comp[i] = base[i].compute * f_comp;
      dur_out[i] = base[i].copy_out * f_out;
    }

    // Drift scales compute by its start time, which depends only on the
    // copy-in chain; replay the chain the same way the timeline will.
    double bus = 0.0;
    for (std::size_t i = 0; i < nd; ++i) {
      double ci_end = 0.0;
      if (truth[i].uses_bus()) {
        if (config.bus) {
          ci_end = bus + dur_in[i];
          bus = ci_end;
        } else {
          ci_end = dur_in[i];
        }
      }
      dur_comp[i] *= 1.0 + syn[i]->drift * ci_end;
      entries[i] = TimelineEntry{schedule.devices[i].priority, truth[i].uses_bus(), dur_in[i],
                                 dur_comp[i], dur_out[i]};
    }

    const TimelineResult tl = evaluate_timeline(entries, config.bus);
    for (std::size_t i = 0; i < nd; ++i) {
      sum_in[i] += tl.devices[i].copy_in.duration();
      sum_comp[i] += tl.devices[i].compute.duration();
      sum_out[i] += tl.devices[i].copy_out.duration();
      sum_finish[i] += tl.devices[i].finish;
    }
    sum_makespan += tl.makespan;
    result.repeat_timelines.push_back(tl.devices);
  }

  const double inv = 1.0 / repeats;
  std::vector<double> e_compute, e_copy, e_finish;
  for (std::size_t i = 0; i < nd; ++i) {
    const ScheduledDevice& sd = schedule.devices[i];
    DeviceOutcome out;
    out.id = sd.id;
    out.rows = sd.rows;
    out.copy_in = {sum_in[i] * inv, sd.timeline.copy_in.duration(), 0.0};
    out.compute = {sum_comp[i] * inv, sd.timeline.compute.duration(), 0.0};
    out.copy_out = {sum_out[i] * inv, sd.timeline.copy_out.duration(), 0.0};
    out.copy = {(sum_in[i] + sum_out[i]) * inv,
                sd.timeline.copy_in.duration() + sd.timeline.copy_out.duration(), 0.0};
    const double predicted_finish =
        truth[i].uses_bus() ? sd.timeline.copy_out.end : sd.timeline.compute.end;
    out.finish = {sum_finish[i] * inv, predicted_finish, 0.0};
    for (PhaseError* pe : {&out.copy_in, &out.compute, &out.copy_out, &out.copy, &out.finish})
      pe->error_pct = rel_err_pct(pe->measured, pe->predicted);

    if (sd.rows > 0) {
      e_compute.push_back(out.compute.error_pct);
      e_finish.push_back(out.finish.error_pct);
      if (truth[i].uses_bus()) e_copy.push_back(out.copy.error_pct);
    }
    result.devices.push_back(std::move(out));
  }

  result.measured_makespan = sum_makespan * inv;
  result.predicted_makespan = schedule.makespan;
  result.makespan_error_pct = rel_err_pct(result.measured_makespan, result.predicted_makespan);
  result.rmse_compute = rms(e_compute);
  result.rmse_copy = rms(e_copy);
  result.rmse_finish = rms(e_finish);
  return result;
}

namespace {

InputEvaluation evaluate_one(const MachineProfile& profile, const MachineConfig& config,
                             const EvalInput& input, int repeats, std::uint64_t seed) {
  validate_dims(input.dims);
  InputEvaluation ev;
  ev.input = input;
  ev.tops = static_cast<double>(input.dims.total_ops()) / 1e12;
  ev.split = solve_split(profile, input.dims);
  const TilePlan plan = build_tile_plan(profile, input.dims, ev.split);
  ev.schedule = build_schedule(plan, profile);
  ev.coexec = simulate(ev.schedule, config, repeats, seed);

  for (std::size_t j = 0; j < profile.devices.size(); ++j) {
    ev.share_pct.push_back(100.0 * static_cast<double>(plan.devices[j].rows) /
                           static_cast<double>(input.dims.m));
    const Schedule sa = standalone_schedule(profile, profile.devices[j].id, input.dims);
    const SimulationResult sim = simulate(sa, config, repeats, seed);
    ev.standalone_makespan.push_back(sim.measured_makespan);
    ev.speedup.push_back(sim.measured_makespan / ev.coexec.measured_makespan);
  }
  return ev;
}

const DeviceOutcome* outcome_for(const SimulationResult& sim, const std::string& id) {
  for (const DeviceOutcome& d : sim.devices)
    if (d.id == id) return &d;
  return nullptr;
}

}  // namespace

EvaluationReport evaluate_inputs(const MachineProfile& profile, const MachineConfig& config,
                                 const std::vector<EvalInput>& inputs, const EvalOptions& options) {
  validate_machine(profile);
  validate_config(config);
  if (inputs.empty()) fail(errc::invalid_argument, "no inputs");
  if (options.repeats < 1) fail(errc::invalid_argument, "repeats must be positive");
  if (machine_hash(profile) != machine_hash(config))
    fail(errc::hash_mismatch, "profile and machine config describe different machines");

  EvaluationReport report;
  report.machine_hash = machine_hash(profile);
  for (const DeviceProfile& d : profile.devices) report.device_ids.push_back(d.id);
  report.repeats = options.repeats;
  report.seed = options.seed;
  report.inputs.resize(inputs.size());

  std::vector<std::exception_ptr> errors(inputs.size());
  const auto n_inputs = static_cast<std::int64_t>(inputs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n_inputs; ++i) {
    try {
      report.inputs[static_cast<std::size_t>(i)] =
          evaluate_one(profile, config, inputs[static_cast<std::size_t>(i)], options.repeats,
                       options.seed + static_cast<std::uint64_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  for (const std::string& id : report.device_ids) {
    DeviceRmse r;
    r.id = id;
    std::vector<double> ef, ec, ey;
    for (const InputEvaluation& ev : report.inputs) {
      const DeviceOutcome* d = outcome_for(ev.coexec, id);
      if (!d) continue;
      ef.push_back(d->finish.error_pct);
      ec.push_back(d->compute.error_pct);
      ey.push_back(d->copy.error_pct);
    }
    r.finish = rms(ef);
    r.compute = rms(ec);
    r.copy = rms(ey);
    report.rmse.push_back(std::move(r));
  }
  return report;
}

std::vector<EvalInput> load_inputs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_failure, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse_failure, std::string("inputs: ") + e.what());
  }
  if (!j.is_array()) fail(errc::parse_failure, "inputs: expected a JSON array");
  std::vector<EvalInput> inputs;
  for (const nlohmann::json& je : j) {
    if (!je.is_object() || !je.contains("name") || !je.contains("m") || !je.contains("n") ||
        !je.contains("k") || je.size() != 4)
      fail(errc::parse_failure, "inputs: each entry needs exactly name/m/n/k");
    if (!je.at("name").is_string() || !je.at("m").is_number_integer() ||
        !je.at("n").is_number_integer() || !je.at("k").is_number_integer())
      fail(errc::parse_failure, "inputs: name must be a string and m/n/k integers");
    EvalInput input;
    input.name = je.at("name").get<std::string>();
    if (input.name.empty()) fail(errc::parse_failure, "inputs: empty name");
    input.dims.m = je.at("m").get<std::int64_t>();
    input.dims.n = je.at("n").get<std::int64_t>();
    input.dims.k = je.at("k").get<std::int64_t>();
    validate_dims(input.dims);
    inputs.push_back(std::move(input));
  }
  if (inputs.empty()) fail(errc::parse_failure, "inputs: no inputs");
  return inputs;
}

namespace {

std::string pct(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string secs(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Pads every column of a row-major cell table to its widest member.
std::string layout(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (row.size() > width.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += "  ";
      out += row[c];
      if (c + 1 < row.size()) out.append(width[c] - row[c].size(), ' ');
    }
    out += '\n';
  }
  return out;
}

std::string dims_str(const MatrixDims& d) {
  return std::to_string(d.m) + "x" + std::to_string(d.n) + "x" + std::to_string(d.k);
}

}  // namespace

std::string format_report_text(const EvaluationReport& report) {
  std::ostringstream out;
  out << "machine " << report.machine_hash << "  seed " << report.seed << "  repeats "
      << report.repeats << "\n\n";

  {
    out << "inputs\n";
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"input", "dims", "TOps", "predicted s", "measured s", "err %"});
    for (const InputEvaluation& ev : report.inputs) {
      char tops[32];
      std::snprintf(tops, sizeof tops, "%.1f", ev.tops);
      rows.push_back({ev.input.name, dims_str(ev.input.dims), tops,
                      secs(ev.coexec.predicted_makespan), secs(ev.coexec.measured_makespan),
                      pct(ev.coexec.makespan_error_pct)});
    }
    out << layout(rows) << '\n';
  }

  {
    out << "prediction error %, finish (compute, copy)\n";
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head = {"input"};
    head.insert(head.end(), report.device_ids.begin(), report.device_ids.end());
    rows.push_back(head);
    for (const InputEvaluation& ev : report.inputs) {
      std::vector<std::string> row = {ev.input.name};
      for (const std::string& id : report.device_ids) {
        const DeviceOutcome* d = outcome_for(ev.coexec, id);
        std::string cell = "-";
        if (d) {
          cell = pct(d->finish.error_pct) + " (" + pct(d->compute.error_pct) + ", " +
                 (d->copy.predicted > 0.0 || d->copy.measured > 0.0 ? pct(d->copy.error_pct)
                                                                    : std::string("-")) +
                 ")";
        }
        row.push_back(cell);
      }
      rows.push_back(row);
    }
    out << layout(rows) << '\n';
  }

  {
    out << "work share %\n";
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head = {"input"};
    head.insert(head.end(), report.device_ids.begin(), report.device_ids.end());
    rows.push_back(head);
    for (const InputEvaluation& ev : report.inputs) {
      std::vector<std::string> row = {ev.input.name};
      for (const double s : ev.share_pct) row.push_back(pct(s));
      rows.push_back(row);
    }
    out << layout(rows) << '\n';
  }

  {
    out << "speedup vs standalone\n";
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head = {"input"};
    head.insert(head.end(), report.device_ids.begin(), report.device_ids.end());
    rows.push_back(head);
    for (const InputEvaluation& ev : report.inputs) {
      std::vector<std::string> row = {ev.input.name};
      for (const double s : ev.speedup) row.push_back(pct(s) + "x");
      rows.push_back(row);
    }
    out << layout(rows) << '\n';
  }

  {
    out << "RMSE % across inputs, finish (compute, copy)\n";
    std::vector<std::vector<std::string>> rows;
    for (const DeviceRmse& r : report.rmse)
      rows.push_back(
          {r.id, pct(r.finish) + " (" + pct(r.compute) + ", " + pct(r.copy) + ")"});
    out << layout(rows);
  }
  return out.str();
}

std::string format_report_json(const EvaluationReport& report) {
  using ojson = nlohmann::ordered_json;
  ojson j;
  j["machine_hash"] = report.machine_hash;
  j["seed"] = report.seed;
  j["repeats"] = report.repeats;
  j["devices"] = report.device_ids;
  j["inputs"] = ojson::array();
  for (const InputEvaluation& ev : report.inputs) {
    ojson ji;
    ji["name"] = ev.input.name;
    ji["dims"] = {{"m", ev.input.dims.m}, {"n", ev.input.dims.n}, {"k", ev.input.dims.k}};
    ji["tops"] = ev.tops;
    ji["predicted_makespan"] = ev.coexec.predicted_makespan;
    ji["measured_makespan"] = ev.coexec.measured_makespan;
    ji["makespan_error_pct"] = ev.coexec.makespan_error_pct;
    ji["devices"] = ojson::array();
    for (std::size_t d = 0; d < report.device_ids.size(); ++d) {
      const DeviceOutcome* o = outcome_for(ev.coexec, report.device_ids[d]);
      ojson jd;
      jd["id"] = report.device_ids[d];
      jd["rows"] = o ? o->rows : 0;
      jd["share_pct"] = ev.share_pct[d];
      jd["finish_error_pct"] = o ? o->finish.error_pct : 0.0;
      jd["compute_error_pct"] = o ? o->compute.error_pct : 0.0;
      jd["copy_error_pct"] = o ? o->copy.error_pct : 0.0;
      jd["standalone_makespan"] = ev.standalone_makespan[d];
      jd["speedup"] = ev.speedup[d];
      ji["devices"].push_back(std::move(jd));
    }
    j["inputs"].push_back(std::move(ji));
  }
  j["rmse"] = ojson::array();
  for (const DeviceRmse& r : report.rmse) {
    ojson jr;
    jr["id"] = r.id;
    jr["finish"] = r.finish;
    jr["compute"] = r.compute;
    jr["copy"] = r.copy;
    j["rmse"].push_back(std::move(jr));
  }
  return j.dump(2) + "\n";
}

}  // namespace poas
