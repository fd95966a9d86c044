#include "poas/device_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "poas/error.hpp"

namespace poas {

OpsCount MatrixDims::total_ops() const {
  return static_cast<OpsCount>(m) * static_cast<OpsCount>(n) * static_cast<OpsCount>(k);
}

OpsCount MatrixDims::row_ops() const {
  return static_cast<OpsCount>(n) * static_cast<OpsCount>(k);
}

void validate_dims(const MatrixDims& dims) {
  if (dims.m < 1 || dims.n < 1 || dims.k < 1)
    fail(errc::invalid_argument, "matrix dims must be at least 1x1x1");
  // Overflow guard: m*n*k must fit. Checked stepwise in integers.
  const auto lim = std::numeric_limits<OpsCount>::max();
  OpsCount nk = static_cast<OpsCount>(dims.n);
  if (static_cast<OpsCount>(dims.k) > lim / nk)
    fail(errc::invalid_argument, "matrix dims overflow op count");
  nk *= static_cast<OpsCount>(dims.k);
  if (static_cast<OpsCount>(dims.m) > lim / nk)
    fail(errc::invalid_argument, "matrix dims overflow op count");
}

MatrixDims parse_dims(const std::string& text) {
  MatrixDims d;
  char trail = 0;
  if (std::sscanf(text.c_str(), "%ldx%ldx%ld%c", &d.m, &d.n, &d.k, &trail) != 3)
    fail(errc::invalid_argument, "bad dims '" + text + "', expected MxNxK");
  validate_dims(d);
  return d;
}

const char* kind_name(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::cpu: return "cpu";
    case DeviceKind::gpu: return "gpu";
    case DeviceKind::xpu: return "xpu";
  }
  return "?";
}

std::optional<DeviceKind> kind_from_name(const std::string& name) {
  if (name == "cpu") return DeviceKind::cpu;
  if (name == "gpu") return DeviceKind::gpu;
  if (name == "xpu") return DeviceKind::xpu;
  return std::nullopt;
}

const DeviceProfile* MachineProfile::find(const std::string& id) const {
  for (const DeviceProfile& d : devices)
    if (d.id == id) return &d;
  return nullptr;
}

std::vector<const DeviceProfile*> MachineProfile::by_priority() const {
  std::vector<const DeviceProfile*> out;
  out.reserve(devices.size());
  for (const DeviceProfile& d : devices) out.push_back(&d);
  std::sort(out.begin(), out.end(),
            [](const DeviceProfile* a, const DeviceProfile* b) { return a->priority < b->priority; });
  return out;
}

void validate_machine(const MachineProfile& machine) {
  if (machine.devices.empty()) fail(errc::invalid_argument, "machine has no devices");
  std::set<std::string> ids;
  std::set<int> priorities;
  for (const DeviceProfile& d : machine.devices) {
    if (d.id.empty()) fail(errc::invalid_argument, "device with empty id");
    if (!ids.insert(d.id).second) fail(errc::invalid_argument, "duplicate device id '" + d.id + "'");
    if (!priorities.insert(d.priority).second)
      fail(errc::invalid_argument, "duplicate priority " + std::to_string(d.priority));
    if (!(d.compute.slope > 0.0))
      fail(errc::invalid_argument, "device '" + d.id + "': slope must be positive");
    if (d.compute.intercept < 0.0)
      fail(errc::invalid_argument, "device '" + d.id + "': negative intercept");
    if (d.elem_size == 0) fail(errc::invalid_argument, "device '" + d.id + "': elem_size must be positive");
    if (d.uses_bus() && !(d.bandwidth > 0.0))
      fail(errc::invalid_argument, "device '" + d.id + "': bandwidth must be positive");
    if (d.ops_min > d.ops_max)
      fail(errc::invalid_argument, "device '" + d.id + "': ops_min exceeds ops_max");
    if (d.kind == DeviceKind::xpu && d.align < 1)
      fail(errc::invalid_argument, "device '" + d.id + "': align must be positive");
  }
}

LinearModel fit_linear(const std::vector<ModelSample>& samples) {
  std::set<OpsCount> distinct;
  for (const ModelSample& s : samples) distinct.insert(s.ops);
  if (distinct.size() < 2) fail(errc::degenerate_samples, "need samples at two or more op counts");

  // Centered ordinary least squares in long double: op counts near 1e14
  // squared would chew through double precision otherwise.
  const long double n = static_cast<long double>(samples.size());
  long double mx = 0.0L, my = 0.0L;
  for (const ModelSample& s : samples) {
    mx += static_cast<long double>(s.ops);
    my += static_cast<long double>(s.seconds);
  }
  mx /= n;
  my /= n;
  long double sxx = 0.0L, sxy = 0.0L;
  for (const ModelSample& s : samples) {
    const long double dx = static_cast<long double>(s.ops) - mx;
    sxx += dx * dx;
    sxy += dx * (static_cast<long double>(s.seconds) - my);
  }

  LinearModel model;
  model.slope = static_cast<double>(sxy / sxx);
  model.intercept = static_cast<double>(my - (sxy / sxx) * mx);
  if (model.intercept < 0.0) {
    // Clamp: a negative launch overhead is not physical. Refit the slope
    // through the origin-constrained mean.
    model.intercept = 0.0;
    model.slope = static_cast<double>(my / mx);
  }
  if (!(model.slope > 0.0) || !std::isfinite(model.slope) || !std::isfinite(model.intercept))
    fail(errc::degenerate_samples, "fit produced a non-positive or non-finite slope");
  return model;
}

double predict_compute(const DeviceProfile& dev, OpsCount ops) {
  return dev.compute.predict(ops);
}

TransferBytes transfer_bytes(const DeviceProfile& dev, OpsCount ops, const MatrixDims& dims) {
  TransferBytes tb;
  if (!dev.uses_bus() || ops == 0) return tb;
  const OpsCount row = dims.row_ops();
  if (ops % row != 0)
    fail(errc::not_row_aligned, "op count " + std::to_string(ops) + " is not a whole number of rows");
  const std::uint64_t elem = dev.elem_size;
  // A slice: ops/n elements (rows * k); B: k*n elements; C slice: ops/k.
  tb.in = elem * (ops / static_cast<OpsCount>(dims.n) +
                  static_cast<OpsCount>(dims.k) * static_cast<OpsCount>(dims.n));
  tb.out = elem * (ops / static_cast<OpsCount>(dims.k));
  return tb;
}

CopyTimes predict_copy(const DeviceProfile& dev, OpsCount ops, const MatrixDims& dims) {
  CopyTimes ct;
  if (!dev.uses_bus() || ops == 0) return ct;
  const TransferBytes tb = transfer_bytes(dev, ops, dims);
  ct.in = static_cast<double>(tb.in) / dev.bandwidth;
  ct.out = static_cast<double>(tb.out) / dev.bandwidth;
  return ct;
}

PhaseDurations predicted_phase_durations(const DeviceProfile& dev, std::int64_t rows,
                                         const MatrixDims& dims) {
  PhaseDurations pd;
  if (rows <= 0) return pd;
  const OpsCount ops = static_cast<OpsCount>(rows) * dims.row_ops();
  const CopyTimes ct = predict_copy(dev, ops, dims);
  pd.copy_in = ct.in;
  pd.compute = predict_compute(dev, ops);
  pd.copy_out = ct.out;
  return pd;
}

static void hash_bytes(std::uint64_t& h, const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
}

std::string machine_identity_hash(std::vector<DeviceIdentity> identities, bool bus) {
  std::sort(identities.begin(), identities.end(),
            [](const DeviceIdentity& a, const DeviceIdentity& b) { return a.id < b.id; });
  std::uint64_t h = 14695981039346656037ULL;
  for (const DeviceIdentity& d : identities) {
    hash_bytes(h, d.id.data(), d.id.size());
    const char sep = '\n';
    hash_bytes(h, &sep, 1);
    const char* kn = kind_name(d.kind);
    hash_bytes(h, kn, std::char_traits<char>::length(kn));
    hash_bytes(h, &sep, 1);
    const std::uint32_t es = d.elem_size;
    hash_bytes(h, &es, sizeof es);
    hash_bytes(h, &sep, 1);
  }
  const unsigned char bus_byte = bus ? 1 : 0;
  hash_bytes(h, &bus_byte, 1);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string machine_hash(const MachineProfile& machine) {
  std::vector<DeviceIdentity> ids;
  ids.reserve(machine.devices.size());
  for (const DeviceProfile& d : machine.devices)
    ids.push_back(DeviceIdentity{d.id, d.kind, d.elem_size});
  return machine_identity_hash(std::move(ids), machine.bus);
}

}  // namespace poas
