#pragma once

#include <stdexcept>
#include <string>

namespace poas {

enum class errc {
  invalid_argument,
  degenerate_samples,
  non_positive_time,
  backend_failure,
  parse_failure,
  not_row_aligned,
  unalignable_k,
  no_feasible_tiling,
  too_many_devices,
  missing_device,
  numerical_failure,
  hash_mismatch,
  io_failure,
};

// Domain error with a stable code so callers can branch on the cause
// without matching message text.
class Error : public std::runtime_error {
public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

}  // namespace poas
