#include "poas/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "poas/error.hpp"
#include "poas/log.hpp"

namespace poas {

namespace {

// Phase durations as affine functions of the share u: dur = lin*u + fix.
struct PhaseCoeffs {
  double in_lin = 0.0, in_fix = 0.0;
  double comp_lin = 0.0, comp_fix = 0.0;
  double out_lin = 0.0;
};

PhaseCoeffs coeffs_for(const DeviceProfile& dev, const MatrixDims& dims, double ops_scale) {
  PhaseCoeffs c;
  c.comp_lin = dev.compute.slope * ops_scale;
  c.comp_fix = dev.compute.intercept;
  if (dev.uses_bus()) {
    const double elem = dev.elem_size;
    c.in_lin = elem * (ops_scale / static_cast<double>(dims.n)) / dev.bandwidth;
    c.in_fix = elem * (static_cast<double>(dims.k) * static_cast<double>(dims.n)) / dev.bandwidth;
    c.out_lin = elem * (ops_scale / static_cast<double>(dims.k)) / dev.bandwidth;
  }
  return c;
}

}  // namespace

LpFormulation build_lp_subset(const std::vector<const DeviceProfile*>& devices, bool shared_bus,
                              const MatrixDims& dims) {
  if (devices.empty()) fail(errc::invalid_argument, "no devices in formulation");
  validate_dims(dims);

  LpFormulation f;
  f.ops_scale = static_cast<double>(dims.total_ops());
  const std::size_t d = devices.size();

  f.share_var.resize(d);
  f.timeline_var.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    f.device_ids.push_back(devices[i]->id);
    f.share_var[i] = static_cast<int>(i);
    f.var_names.push_back("u[" + devices[i]->id + "]");
  }
  for (std::size_t i = 0; i < d; ++i) {
    const int base = static_cast<int>(d + 3 * i);
    f.timeline_var[i] = {base, base + 1, base + 2};
    f.var_names.push_back("tin[" + devices[i]->id + "]");
    f.var_names.push_back("tce[" + devices[i]->id + "]");
    f.var_names.push_back("tco[" + devices[i]->id + "]");
  }
  f.makespan_var = static_cast<int>(4 * d);
  f.var_names.push_back("T");

  SimplexProblem& p = f.problem;
  p.num_vars = static_cast<int>(4 * d + 1);
  p.objective.assign(p.num_vars, 0.0);
  p.objective[f.makespan_var] = 1.0;

  auto eq = [&](std::vector<double> row, double b, std::string name) {
    p.eq_a.push_back(std::move(row));
    p.eq_b.push_back(b);
    f.eq_names.push_back(std::move(name));
  };
  auto ge = [&](std::vector<double> row, double b, std::string name) {
    p.ge_a.push_back(std::move(row));
    p.ge_b.push_back(b);
    f.ge_names.push_back(std::move(name));
  };
  auto zeros = [&] { return std::vector<double>(p.num_vars, 0.0); };

  std::vector<PhaseCoeffs> cs(d);
  for (std::size_t i = 0; i < d; ++i) cs[i] = coeffs_for(*devices[i], dims, f.ops_scale);

  {
    auto row = zeros();
    for (std::size_t i = 0; i < d; ++i) row[f.share_var[i]] = 1.0;
    eq(std::move(row), 1.0, "sum_shares");
  }

  // Bus devices in ascending priority order; the chain follows this order.
  std::vector<std::size_t> bus_order;
  for (std::size_t i = 0; i < d; ++i)
    if (devices[i]->uses_bus()) bus_order.push_back(i);
  std::sort(bus_order.begin(), bus_order.end(),
            [&](std::size_t a, std::size_t b) { return devices[a]->priority < devices[b]->priority; });

  // Copy-in end times.
  if (shared_bus) {
    std::size_t prev = d;
    for (std::size_t bi : bus_order) {
      auto row = zeros();
      row[f.timeline_var[bi][0]] = 1.0;
      if (prev != d) row[f.timeline_var[prev][0]] = -1.0;
      row[f.share_var[bi]] = -cs[bi].in_lin;
      eq(std::move(row), cs[bi].in_fix,
         prev == d ? "copy_in_first[" + devices[bi]->id + "]"
                   : "copy_in_chain[" + devices[prev]->id + "->" + devices[bi]->id + "]");
      prev = bi;
    }
  } else {
    for (std::size_t bi : bus_order) {
      auto row = zeros();
      row[f.timeline_var[bi][0]] = 1.0;
      row[f.share_var[bi]] = -cs[bi].in_lin;
      eq(std::move(row), cs[bi].in_fix, "copy_in[" + devices[bi]->id + "]");
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (devices[i]->uses_bus()) continue;
    auto row = zeros();
    row[f.timeline_var[i][0]] = 1.0;
    eq(std::move(row), 0.0, "copy_in_zero[" + devices[i]->id + "]");
  }

  // Compute end = copy-in end + compute duration.
  for (std::size_t i = 0; i < d; ++i) {
    auto row = zeros();
    row[f.timeline_var[i][1]] = 1.0;
    row[f.timeline_var[i][0]] = -1.0;
    row[f.share_var[i]] = -cs[i].comp_lin;
    eq(std::move(row), cs[i].comp_fix, "compute[" + devices[i]->id + "]");
  }

  // Copy-out end times. On a shared bus each start is a max, written as one
  // >= row per arm: own compute end, the previous copy-out (the bus-order
  // chain), and — for the head of the chain — the bus clearing the last
  // copy-in.
  if (shared_bus) {
    std::size_t prev = d;
    for (std::size_t bi : bus_order) {
      {
        auto row = zeros();
        row[f.timeline_var[bi][2]] = 1.0;
        row[f.timeline_var[bi][1]] = -1.0;
        row[f.share_var[bi]] = -cs[bi].out_lin;
        ge(std::move(row), 0.0, "copy_out_after_compute[" + devices[bi]->id + "]");
      }
      if (prev == d) {
        if (!bus_order.empty()) {
          const std::size_t last_in = bus_order.back();
          auto row = zeros();
          row[f.timeline_var[bi][2]] = 1.0;
          row[f.timeline_var[last_in][0]] = -1.0;
          row[f.share_var[bi]] = -cs[bi].out_lin;
          ge(std::move(row), 0.0, "copy_out_after_bus_clear[" + devices[bi]->id + "]");
        }
      } else {
        auto row = zeros();
        row[f.timeline_var[bi][2]] = 1.0;
        row[f.timeline_var[prev][2]] = -1.0;
        row[f.share_var[bi]] = -cs[bi].out_lin;
        ge(std::move(row), 0.0,
           "copy_out_chain[" + devices[prev]->id + "->" + devices[bi]->id + "]");
      }
      prev = bi;
    }
  } else {
    for (std::size_t bi : bus_order) {
      auto row = zeros();
      row[f.timeline_var[bi][2]] = 1.0;
      row[f.timeline_var[bi][1]] = -1.0;
      row[f.share_var[bi]] = -cs[bi].out_lin;
      eq(std::move(row), 0.0, "copy_out[" + devices[bi]->id + "]");
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (devices[i]->uses_bus()) continue;
    auto row = zeros();
    row[f.timeline_var[i][2]] = 1.0;
    row[f.timeline_var[i][1]] = -1.0;
    eq(std::move(row), 0.0, "no_copy_out[" + devices[i]->id + "]");
  }

  // T covers every finish time.
  for (std::size_t i = 0; i < d; ++i) {
    auto row = zeros();
    row[f.makespan_var] = 1.0;
    row[f.timeline_var[i][2]] = -1.0;
    ge(std::move(row), 0.0, "makespan[" + devices[i]->id + "]");
  }

  return f;
}

LpFormulation build_lp(const MachineProfile& machine, const MatrixDims& dims) {
  validate_machine(machine);
  std::vector<const DeviceProfile*> devices;
  devices.reserve(machine.devices.size());
  for (const DeviceProfile& d : machine.devices) devices.push_back(&d);
  return build_lp_subset(devices, machine.bus, dims);
}

WorkloadSplit evaluate_rows(const MachineProfile& machine, const MatrixDims& dims,
                            const std::vector<std::int64_t>& rows) {
  validate_machine(machine);
  validate_dims(dims);
  if (rows.size() != machine.devices.size())
    fail(errc::invalid_argument, "row assignment size does not match the device count");
  std::int64_t total = 0;
  for (std::int64_t r : rows) {
    if (r < 0) fail(errc::invalid_argument, "negative row assignment");
    total += r;
  }
  if (total != dims.m)
    fail(errc::invalid_argument, "row assignment covers " + std::to_string(total) + " of " +
                                     std::to_string(dims.m) + " rows");

  std::vector<TimelineEntry> entries(machine.devices.size());
  for (std::size_t i = 0; i < machine.devices.size(); ++i) {
    const DeviceProfile& dev = machine.devices[i];
    const PhaseDurations pd = predicted_phase_durations(dev, rows[i], dims);
    entries[i] = TimelineEntry{dev.priority, dev.uses_bus(), pd.copy_in, pd.compute, pd.copy_out};
  }
  const TimelineResult tl = evaluate_timeline(entries, machine.bus);

  WorkloadSplit split;
  split.makespan = tl.makespan;
  for (std::size_t i = 0; i < machine.devices.size(); ++i) {
    DeviceShare s;
    s.device_id = machine.devices[i].id;
    s.rows = rows[i];
    s.ops = static_cast<OpsCount>(rows[i]) * dims.row_ops();
    s.fraction = static_cast<double>(rows[i]) / static_cast<double>(dims.m);
    s.timeline = tl.devices[i];
    split.shares.push_back(std::move(s));
  }
  return split;
}

WorkloadSplit solve_split(const MachineProfile& machine, const MatrixDims& dims) {
  validate_machine(machine);
  validate_dims(dims);

  const double total_ops = static_cast<double>(dims.total_ops());
  const double row_ops = static_cast<double>(dims.row_ops());

  std::vector<const DeviceProfile*> active;
  for (const DeviceProfile& d : machine.devices) active.push_back(&d);

  // Drop-and-resolve: a device whose continuous share is under one row
  // cannot receive whole-row work, and removing it also removes its input
  // transfer and launch overhead from the formulation.
  SimplexSolution solution;
  LpFormulation lp;
  for (;;) {
    lp = build_lp_subset(active, machine.bus, dims);
    solution = solve_simplex(lp.problem);

    std::vector<const DeviceProfile*> kept;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const double ops = solution.x[static_cast<std::size_t>(lp.share_var[i])] * total_ops;
      if (ops >= row_ops - 0.5) kept.push_back(active[i]);
    }
    if (kept.empty()) {
      // Keep the best of a bad lot rather than planning for nobody.
      std::size_t best = 0;
      for (std::size_t i = 1; i < active.size(); ++i) {
        const double oi = solution.x[static_cast<std::size_t>(lp.share_var[i])];
        const double ob = solution.x[static_cast<std::size_t>(lp.share_var[best])];
        if (oi > ob || (oi == ob && active[i]->priority < active[best]->priority)) best = i;
      }
      kept.push_back(active[best]);
    }
    if (kept.size() == active.size()) break;
    log_debug("planner dropped %zu device(s), re-solving", active.size() - kept.size());
    active = std::move(kept);
  }

  // Round the surviving shares to whole rows.
  std::vector<std::int64_t> rows(machine.devices.size(), 0);
  std::vector<double> fraction(machine.devices.size(), 0.0);
  auto device_index = [&](const DeviceProfile* dev) {
    return static_cast<std::size_t>(dev - machine.devices.data());
  };
  for (std::size_t i = 0; i < active.size(); ++i) {
    const double u = solution.x[static_cast<std::size_t>(lp.share_var[i])];
    const std::size_t mi = device_index(active[i]);
    fraction[mi] = u;
    rows[mi] = static_cast<std::int64_t>(
        std::floor(u * static_cast<double>(dims.m) + 1e-6));
    rows[mi] = std::clamp<std::int64_t>(rows[mi], 0, dims.m);
  }

  std::int64_t assigned = 0;
  for (std::int64_t r : rows) assigned += r;
  while (assigned > dims.m) {
    // Over-assignment can only come from float slack; shave the lowest
    // bus-priority holder first.
    std::size_t victim = machine.devices.size();
    for (std::size_t i = 0; i < machine.devices.size(); ++i) {
      if (rows[i] == 0) continue;
      if (victim == machine.devices.size() ||
          machine.devices[i].priority > machine.devices[victim].priority)
        victim = i;
    }
    --rows[victim];
    --assigned;
  }

  // Leftover rows go to the CPU: it takes them without touching the bus.
  // Without one, the head of the bus order absorbs them.
  if (assigned < dims.m) {
    const DeviceProfile* receiver = nullptr;
    for (const DeviceProfile& d : machine.devices)
      if (d.kind == DeviceKind::cpu && (!receiver || d.priority < receiver->priority)) receiver = &d;
    if (!receiver)
      for (const DeviceProfile* d : active)
        if (!receiver || d->priority < receiver->priority) receiver = d;
    rows[device_index(receiver)] += dims.m - assigned;
  }

  WorkloadSplit split = evaluate_rows(machine, dims, rows);
  for (std::size_t i = 0; i < split.shares.size(); ++i) split.shares[i].fraction = fraction[i];
  split.lp_objective = solution.objective;
  split.lp_iterations = solution.iterations;
  return split;
}

namespace {

struct OracleBest {
  double makespan = std::numeric_limits<double>::infinity();
  std::array<std::int64_t, 3> rows{{-1, -1, -1}};

  // Strict total order over candidates keeps the search deterministic no
  // matter how the work is scheduled across threads.
  bool beats(const OracleBest& other) const {
    if (makespan != other.makespan) return makespan < other.makespan;
    return rows < other.rows;
  }
};

struct OracleScan {
  const MachineProfile* machine = nullptr;
  MatrixDims dims;
  std::array<const DeviceProfile*, 3> devs{};
  std::size_t count = 0;

  void consider(std::array<std::int64_t, 3> rows, OracleBest& best) const {
    TimelineEntry entries[3];
    DeviceTimeline scratch[3];
    for (std::size_t i = 0; i < count; ++i) {
      const PhaseDurations pd = predicted_phase_durations(*devs[i], rows[i], dims);
      entries[i] =
          TimelineEntry{devs[i]->priority, devs[i]->uses_bus(), pd.copy_in, pd.compute, pd.copy_out};
    }
    OracleBest cand;
    cand.makespan = evaluate_timeline_into(entries, count, machine->bus, scratch);
    cand.rows = rows;
    if (cand.beats(best)) best = cand;
  }
};

std::vector<std::int64_t> grid_points(std::int64_t m, std::int64_t step) {
  std::vector<std::int64_t> g;
  g.reserve(static_cast<std::size_t>(m / step) + 2);
  for (std::int64_t r = 0; r < m; r += step) g.push_back(r);
  g.push_back(m);
  return g;
}

WorkloadSplit oracle_impl(const MachineProfile& machine, const MatrixDims& dims,
                          std::int64_t resolution, bool parallel) {
  validate_machine(machine);
  validate_dims(dims);
  if (resolution < 1) fail(errc::invalid_argument, "resolution must be positive");
  if (machine.devices.size() > 3)
    fail(errc::too_many_devices, "exhaustive search supports at most three devices");

  OracleScan scan;
  scan.machine = &machine;
  scan.dims = dims;
  scan.count = machine.devices.size();
  for (std::size_t i = 0; i < scan.count; ++i) scan.devs[i] = &machine.devices[i];

  const std::int64_t m = dims.m;
  const std::int64_t step = std::max<std::int64_t>(1, m / resolution);
  const std::vector<std::int64_t> grid = grid_points(m, step);

  OracleBest best;
  if (scan.count == 1) {
    scan.consider({m, 0, 0}, best);
  } else if (scan.count == 2) {
    const auto n_grid = static_cast<std::int64_t>(grid.size());
#pragma omp parallel if (parallel)
    {
      OracleBest local;
#pragma omp for schedule(static) nowait
      for (std::int64_t gi = 0; gi < n_grid; ++gi) {
        const std::int64_t r0 = grid[static_cast<std::size_t>(gi)];
        scan.consider({r0, m - r0, 0}, local);
      }
#pragma omp critical(oracle_merge)
      if (local.beats(best)) best = local;
    }
  } else {
    const auto n_grid = static_cast<std::int64_t>(grid.size());
#pragma omp parallel if (parallel)
    {
      OracleBest local;
#pragma omp for schedule(dynamic, 8) nowait
      for (std::int64_t gi = 0; gi < n_grid; ++gi) {
        const std::int64_t r0 = grid[static_cast<std::size_t>(gi)];
        for (std::int64_t r1 : grid) {
          if (r0 + r1 > m) break;
          scan.consider({r0, r1, m - r0 - r1}, local);
        }
        // The zero-remainder corner when it falls off the grid.
        if (r0 > 0 && (m - r0) % step != 0) scan.consider({r0, m - r0, 0}, local);
      }
#pragma omp critical(oracle_merge)
      if (local.beats(best)) best = local;
    }
  }

  std::vector<std::int64_t> rows(scan.count);
  for (std::size_t i = 0; i < scan.count; ++i) rows[i] = best.rows[i];
  return evaluate_rows(machine, dims, rows);
}

}  // namespace

WorkloadSplit oracle_grid_search(const MachineProfile& machine, const MatrixDims& dims,
                                 std::int64_t resolution) {
  return oracle_impl(machine, dims, resolution, true);
}

WorkloadSplit oracle_grid_search_serial(const MachineProfile& machine, const MatrixDims& dims,
                                        std::int64_t resolution) {
  return oracle_impl(machine, dims, resolution, false);
}

}  // namespace poas
