#include "moslabel/edits.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "moslabel/errors.hpp"

namespace moslabel {

using nlohmann::json;

namespace {

std::string describe(const EditRecord& e) {
  std::string s = "edit on frame " + std::to_string(e.frame);
  if (e.instance) return s + " instance " + std::to_string(*e.instance);
  return s + " (" + std::to_string(e.points.size()) + " points)";
}

}  // namespace

EditRecord edit_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::format, std::string("edit is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::format, "edit must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k != "frame" && k != "instance" && k != "points" && k != "class" && k != "note" && k != "timestamp") {
      throw Error(Errc::format, "edit has unknown field '" + k + "'");
    }
  }
  EditRecord e;
  try {
    e.frame = j.at("frame").get<std::size_t>();
    if (j.contains("instance")) e.instance = j["instance"].get<std::uint32_t>();
    if (j.contains("points")) e.points = j["points"].get<std::vector<std::uint32_t>>();
    e.new_class = parse_class(j.at("class").is_string() ? j["class"].get<std::string>() : std::to_string(j["class"].get<int>()));
    e.note = j.value("note", std::string());
    e.timestamp = j.value("timestamp", 0.0);
  } catch (const json::exception& ex) {
    throw Error(Errc::format, std::string("malformed edit: ") + ex.what());
  }
  if (e.instance.has_value() == !e.points.empty()) {
    throw Error(Errc::format, "edit needs exactly one scope: 'instance' or a non-empty 'points' list");
  }
  return e;
}

std::string edit_to_json(const EditRecord& e) {
  json j;
  j["frame"] = e.frame;
  if (e.instance) j["instance"] = *e.instance;
  if (!e.points.empty()) j["points"] = e.points;
  j["class"] = std::string(class_name(e.new_class));
  j["note"] = e.note;
  j["timestamp"] = e.timestamp;
  return j.dump();
}

std::vector<EditRecord> read_edit_log(const fs::path& path) {
  std::vector<EditRecord> out;
  if (!fs::exists(path)) return out;
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read edit log " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(edit_from_json(line));
    } catch (const Error& e) {
      throw Error(Errc::format, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void append_edit(const fs::path& path, const EditRecord& edit) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(Errc::io, "cannot append to edit log " + path.string());
  out << edit_to_json(edit) << '\n';
  out.flush();
  if (!out) throw Error(Errc::io, "write failed on edit log " + path.string());
}

std::vector<std::uint32_t> resolve_edit(const ScanAnnotation& a, const EditRecord& e) {
  std::vector<std::uint32_t> idx;
  if (e.instance) {
    if (*e.instance == 0) throw Error(Errc::unresolvable_edit, describe(e) + ": instance 0 means no instance");
    for (std::uint32_t i = 0; i < a.size(); ++i) {
      if (a.instance[i] == *e.instance) idx.push_back(i);
    }
    if (idx.empty()) throw Error(Errc::unresolvable_edit, describe(e) + ": no such instance in the frame");
    return idx;
  }
  for (const auto i : e.points) {
    if (i >= a.size()) {
      throw Error(Errc::unresolvable_edit, describe(e) + ": point " + std::to_string(i) + " out of range (frame has " +
                                               std::to_string(a.size()) + " points)");
    }
  }
  idx = e.points;
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

std::vector<std::uint32_t> resolve_edit(const AnnotationMap& annotations, const EditRecord& e) {
  const auto it = annotations.find(e.frame);
  if (it == annotations.end()) throw Error(Errc::unresolvable_edit, describe(e) + ": unknown frame");
  return resolve_edit(it->second, e);
}

AnnotationMap apply_edits(const AnnotationMap& annotations, std::span<const EditRecord> edits) {
  AnnotationMap out = annotations;
  for (const EditRecord& e : edits) {
    const auto idx = resolve_edit(annotations, e);
    ScanAnnotation& a = out.at(e.frame);
    for (const auto i : idx) a.classes[i] = e.new_class;
  }
  return out;
}

std::vector<EditRecord> compact_edits(const AnnotationMap& annotations, std::span<const EditRecord> edits) {
  std::vector<bool> keep(edits.size(), true);
  std::map<std::size_t, std::set<std::uint32_t>> later;  // points covered by edits after the current one
  for (std::size_t k = edits.size(); k-- > 0;) {
    const auto idx = resolve_edit(annotations, edits[k]);
    auto& covered = later[edits[k].frame];
    keep[k] = std::any_of(idx.begin(), idx.end(), [&](std::uint32_t i) { return !covered.contains(i); });
    covered.insert(idx.begin(), idx.end());
  }
  std::vector<EditRecord> out;
  for (std::size_t k = 0; k < edits.size(); ++k) {
    if (keep[k]) out.push_back(edits[k]);
  }
  return out;
}

}  // namespace moslabel
