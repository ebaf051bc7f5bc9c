#include "moslabel/errors.hpp"

namespace moslabel {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::empty_input: return "empty-input";
    case Errc::degenerate_orientation: return "degenerate-orientation";
    case Errc::format: return "format";
    case Errc::count_mismatch: return "count-mismatch";
    case Errc::configuration: return "configuration";
    case Errc::sync_gap: return "sync-gap";
    case Errc::undefined_metric: return "undefined-metric";
    case Errc::validation: return "validation";
    case Errc::invalid_anchor: return "invalid-anchor";
    case Errc::degenerate_input: return "degenerate-input";
    case Errc::missing_label: return "missing-label";
    case Errc::unresolvable_edit: return "unresolvable-edit";
    case Errc::io: return "io";
    case Errc::stage: return "stage";
  }
  return "unknown";
}

}  // namespace moslabel
