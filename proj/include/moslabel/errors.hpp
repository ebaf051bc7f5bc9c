#pragma once

#include <stdexcept>
#include <string>

namespace moslabel {

enum class Errc {
  invalid_parameter,
  empty_input,
  degenerate_orientation,
  format,
  count_mismatch,
  configuration,
  sync_gap,
  undefined_metric,
  validation,
  invalid_anchor,
  degenerate_input,
  missing_label,
  unresolvable_edit,
  io,
  stage,
};

const char* to_string(Errc code) noexcept;

/// Single exception type for the library; `code()` tells callers which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace moslabel
