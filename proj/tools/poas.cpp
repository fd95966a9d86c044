// poas: profile / plan / simulate / evaluate for co-executed GEMM.
//
// Exit codes: 0 success, 1 user or domain error, 2 internal failure.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "poas/adapter.hpp"
#include "poas/device_model.hpp"
#include "poas/error.hpp"
#include "poas/kv_format.hpp"
#include "poas/log.hpp"
#include "poas/machine_config.hpp"
#include "poas/optimizer.hpp"
#include "poas/profiler.hpp"
#include "poas/scheduler.hpp"
#include "poas/simulator.hpp"

namespace {

using namespace poas;

std::vector<EvalInput> builtin_inputs() {
  return {
      {"i1", {30000, 30000, 30000}}, {"i2", {60000, 20000, 35000}},
      {"i3", {130000, 20000, 20000}}, {"i4", {40000, 80000, 20000}},
      {"i5", {40000, 30000, 60000}}, {"i6", {56000, 40000, 40000}},
  };
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_failure, "cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) fail(errc::io_failure, "failed writing '" + path + "'");
}

int cmd_profile(const std::string& machine_path, const std::string& out_path,
                std::uint64_t seed) {
  const MachineConfig config = load_machine_config(machine_path);
  const MachineProfile profile = profile_machine(config, seed);
  save_profile(out_path, profile);
  std::printf("profiled %zu device(s), bus %s\n", profile.devices.size(),
              profile.bus ? "true" : "false");
  for (const DeviceProfile& d : profile.devices) {
    std::printf("%s (%s): slope %s s/op, intercept %s s", d.id.c_str(), kind_name(d.kind),
                kv::format_double(d.compute.slope).c_str(),
                kv::format_double(d.compute.intercept).c_str());
    if (d.uses_bus())
      std::printf(", bandwidth %s B/s", kv::format_double(d.bandwidth).c_str());
    std::printf("\n");
  }
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_plan(const std::string& profile_path, const std::string& dims_text,
             const std::string& out_path) {
  const MachineProfile machine = load_profile(profile_path);
  const MatrixDims dims = parse_dims(dims_text);
  const WorkloadSplit split = solve_split(machine, dims);
  const TilePlan plan = build_tile_plan(machine, dims, split);
  const Schedule schedule = build_schedule(plan, machine);
  save_schedule(out_path, schedule);

  std::printf("split:");
  for (std::size_t i = 0; i < plan.devices.size(); ++i)
    std::printf("%s %s %.2f%%", i ? "," : "", plan.devices[i].device_id.c_str(),
                100.0 * static_cast<double>(plan.devices[i].rows) / static_cast<double>(dims.m));
  std::printf("\n");
  std::printf("predicted makespan: %.9f s\n", schedule.makespan);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

std::string simulate_report_json(const Schedule& schedule, const SimulationResult& result) {
  using ojson = nlohmann::ordered_json;
  auto phase = [](const PhaseError& p) {
    return ojson{{"measured", p.measured}, {"predicted", p.predicted}, {"error_pct", p.error_pct}};
  };
  ojson j;
  j["machine_hash"] = schedule.machine_hash;
  j["dims"] = {{"m", schedule.dims.m}, {"n", schedule.dims.n}, {"k", schedule.dims.k}};
  j["seed"] = result.seed;
  j["repeats"] = result.repeats;
  j["predicted_makespan"] = result.predicted_makespan;
  j["measured_makespan"] = result.measured_makespan;
  j["makespan_error_pct"] = result.makespan_error_pct;
  j["devices"] = ojson::array();
  for (const DeviceOutcome& d : result.devices) {
    ojson jd;
    jd["id"] = d.id;
    jd["rows"] = d.rows;
    jd["copy_in"] = phase(d.copy_in);
    jd["compute"] = phase(d.compute);
    jd["copy_out"] = phase(d.copy_out);
    jd["copy"] = phase(d.copy);
    jd["finish"] = phase(d.finish);
    j["devices"].push_back(std::move(jd));
  }
  j["rmse"] = {{"finish", result.rmse_finish},
               {"compute", result.rmse_compute},
               {"copy", result.rmse_copy}};
  return j.dump(2) + "\n";
}

int cmd_simulate(const std::string& schedule_path, const std::string& machine_path, int repeats,
                 std::uint64_t seed) {
  const Schedule schedule = load_schedule(schedule_path);
  const MachineConfig config = load_machine_config(machine_path);
  if (schedule.machine_hash != machine_hash(config))
    fail(errc::hash_mismatch, "schedule was planned for machine " + schedule.machine_hash +
                                  ", config describes " + machine_hash(config));
  const SimulationResult result = simulate(schedule, config, repeats, seed);

  std::printf("machine %s, seed %llu, repeats %d\n", schedule.machine_hash.c_str(),
              static_cast<unsigned long long>(seed), repeats);
  std::printf("%-12s %-9s %14s %14s %9s\n", "device", "phase", "predicted s", "measured s",
              "err %");
  for (const DeviceOutcome& d : result.devices) {
    const struct {
      const char* name;
      const PhaseError* p;
    } phases[] = {{"copy-in", &d.copy_in},
                  {"compute", &d.compute},
                  {"copy-out", &d.copy_out},
                  {"finish", &d.finish}};
    for (const auto& ph : phases)
      std::printf("%-12s %-9s %14.9f %14.9f %9.2f\n", d.id.c_str(), ph.name, ph.p->predicted,
                  ph.p->measured, ph.p->error_pct);
  }
  std::printf("makespan: predicted %.9f s, measured %.9f s, err %.2f%%\n",
              result.predicted_makespan, result.measured_makespan, result.makespan_error_pct);
  std::printf("rmse %%: finish %.2f, compute %.2f, copy %.2f\n", result.rmse_finish,
              result.rmse_compute, result.rmse_copy);

  std::filesystem::path report_path(schedule_path);
  report_path.replace_extension(".report.json");
  write_file(report_path.string(), simulate_report_json(schedule, result));
  std::printf("wrote %s\n", report_path.string().c_str());
  return 0;
}

int cmd_evaluate(const std::string& machine_path, const std::string& inputs_path, int repeats,
                 std::uint64_t seed, const std::string& out_dir) {
  const MachineConfig config = load_machine_config(machine_path);
  const std::vector<EvalInput> inputs =
      inputs_path.empty() ? builtin_inputs() : load_inputs(inputs_path);
  const MachineProfile profile = profile_machine(config, seed);
  EvalOptions options;
  options.repeats = repeats;
  options.seed = seed;
  const EvaluationReport report = evaluate_inputs(profile, config, inputs, options);

  std::filesystem::create_directories(out_dir);
  const auto txt_path = std::filesystem::path(out_dir) / "report.txt";
  const auto json_path = std::filesystem::path(out_dir) / "report.json";
  const auto txt_tmp = txt_path.string() + ".tmp";
  const auto json_tmp = json_path.string() + ".tmp";
  try {
    write_file(txt_tmp, format_report_text(report));
    write_file(json_tmp, format_report_json(report));
    std::filesystem::rename(txt_tmp, txt_path);
    std::filesystem::rename(json_tmp, json_path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(txt_tmp, ec);
    std::filesystem::remove(json_tmp, ec);
    throw;
  }

  std::fputs(format_report_text(report).c_str(), stdout);
  std::printf("wrote %s\n", txt_path.string().c_str());
  std::printf("wrote %s\n", json_path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* env = std::getenv("POAS_LOG"); env && !parse_log_level(env)) {
    std::fprintf(stderr, "poas: error: POAS_LOG must be quiet, info, or debug (got '%s')\n", env);
    return 1;
  }

  CLI::App app{"Co-execution planning for heterogeneous GEMM"};
  app.require_subcommand(1);

  std::string machine_path, profile_path, schedule_path, out_path, out_dir, dims_text,
      inputs_path;
  std::uint64_t seed = 0;
  int repeats = 3;

  CLI::App* profile = app.add_subcommand("profile", "Probe a machine and fit its profile");
  profile->add_option("--machine", machine_path, "machine config file")
      ->required()
      ->check(CLI::ExistingFile);
  profile->add_option("--out", out_path, "profile file to write")->required();
  profile->add_option("--seed", seed, "probe noise seed");

  CLI::App* plan = app.add_subcommand("plan", "Split, tile, and schedule a workload");
  plan->add_option("--profile", profile_path, "machine profile file")
      ->required()
      ->check(CLI::ExistingFile);
  plan->add_option("--dims", dims_text, "workload as MxNxK")->required();
  plan->add_option("--out", out_path, "schedule file to write")->required();

  CLI::App* simulate = app.add_subcommand("simulate", "Run a schedule on a synthetic machine");
  simulate->add_option("--schedule", schedule_path, "schedule file")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--machine", machine_path, "machine config file")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--repeats", repeats, "simulated runs to average")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed, "simulation seed");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Full measured-vs-predicted report");
  evaluate->add_option("--machine", machine_path, "machine config file")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--inputs", inputs_path, "JSON input list (default: built-in set)")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--repeats", repeats, "simulated runs per input")
      ->check(CLI::PositiveNumber);
  evaluate->add_option("--seed", seed, "master seed");
  evaluate->add_option("--out-dir", out_dir, "directory for report.txt/report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (profile->parsed()) return cmd_profile(machine_path, out_path, seed);
    if (plan->parsed()) return cmd_plan(profile_path, dims_text, out_path);
    if (simulate->parsed()) return cmd_simulate(schedule_path, machine_path, repeats, seed);
    if (evaluate->parsed()) return cmd_evaluate(machine_path, inputs_path, repeats, seed, out_dir);
  } catch (const poas::Error& e) {
    std::fprintf(stderr, "poas: error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "poas: internal error: %s\n", e.what());
    return 2;
  } catch (...) {
    std::fprintf(stderr, "poas: internal error\n");
    return 2;
  }
  return 2;  // unreachable: a subcommand is required
}
