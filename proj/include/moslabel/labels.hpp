#pragma once

#include <cstdint>
#include <string_view>

namespace moslabel {

/// MOS class ids in the low 16 bits of a label word.
enum class MosClass : std::uint16_t {
  unlabeled = 0,
  static_ = 9,
  dynamic = 251,
};

bool is_valid_class_id(std::uint32_t class_id);
std::string_view class_name(MosClass c);
/// Accepts "unlabeled" / "static" / "dynamic" or the numeric id.
MosClass parse_class(std::string_view text);

/// Per-point label word: class id in the low 16 bits, instance id in the high 16 bits.
struct LabelValue {
  std::uint32_t raw = 0;

  static LabelValue make(MosClass c, std::uint32_t instance = 0) {
    return {static_cast<std::uint32_t>(c) | ((instance & 0xFFFFu) << 16)};
  }
  std::uint32_t class_id() const { return raw & 0xFFFFu; }
  std::uint32_t instance_id() const { return raw >> 16; }
  MosClass mos_class() const { return static_cast<MosClass>(class_id()); }
  bool is_dynamic() const { return class_id() == static_cast<std::uint32_t>(MosClass::dynamic); }

  friend bool operator==(LabelValue, LabelValue) = default;
};

}  // namespace moslabel
