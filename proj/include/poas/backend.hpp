#pragma once

// Measurement interface the profiler drives. Implementations time real or
// synthetic work; the profiler never learns which.

#include <cstdint>
#include <memory>

namespace poas {

class DeviceBackend {
 public:
  virtual ~DeviceBackend() = default;

  // Seconds to multiply two side x side matrices into a third.
  // Must be positive.
  virtual double time_gemm(std::int64_t side) = 0;

  // Seconds to move `bytes` across this device's link. Only called when
  // has_transfers() is true.
  virtual double time_transfer(std::uint64_t bytes) = 0;

  virtual bool has_transfers() const = 0;
};

using BackendPtr = std::unique_ptr<DeviceBackend>;

}  // namespace poas
