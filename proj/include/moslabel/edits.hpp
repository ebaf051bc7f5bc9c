#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moslabel/dataset_io.hpp"
#include "moslabel/mos_detect.hpp"

namespace moslabel {

/// A human correction: relabel one instance, or an explicit point list, in one frame.
struct EditRecord {
  std::size_t frame = 0;
  std::optional<std::uint32_t> instance;
  std::vector<std::uint32_t> points;
  MosClass new_class = MosClass::static_;
  std::string note;
  double timestamp = 0.0;  // seconds since the epoch

  friend bool operator==(const EditRecord&, const EditRecord&) = default;
};

EditRecord edit_from_json(const std::string& json_text);
std::string edit_to_json(const EditRecord& edit);

/// Reads an append-only JSON-lines log; a missing file is an empty log.
std::vector<EditRecord> read_edit_log(const fs::path& path);
void append_edit(const fs::path& path, const EditRecord& edit);

using AnnotationMap = std::map<std::size_t, ScanAnnotation>;

/// Point indices an edit touches; throws an unresolvable-edit error naming the edit.
std::vector<std::uint32_t> resolve_edit(const ScanAnnotation& annotation, const EditRecord& edit);
std::vector<std::uint32_t> resolve_edit(const AnnotationMap& annotations, const EditRecord& edit);

/// Applies edits in order; later edits win where they overlap. Instance scopes resolve against `annotations`
/// as given, so re-applying the same list is idempotent.
AnnotationMap apply_edits(const AnnotationMap& annotations, std::span<const EditRecord> edits);

/// Drops edits whose every point is overwritten by a later edit.
std::vector<EditRecord> compact_edits(const AnnotationMap& annotations, std::span<const EditRecord> edits);

}  // namespace moslabel
