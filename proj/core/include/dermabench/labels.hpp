#pragma once

#include <array>
#include <string_view>

#include "dermabench/errors.hpp"

namespace dermabench {

/// Number of lesion categories.
inline constexpr int kClassCount = 7;

/// Canonical class names in code order (code 0..6).
inline constexpr std::array<std::string_view, kClassCount> kClassNames = {
    "actinic_keratoses_iec", "basal_cell_carcinoma", "benign_keratosis",
    "dermatofibroma",        "melanoma",             "melanocytic_nevi",
    "vascular_lesions",
};

/// One of the seven lesion categories. code <-> name is a fixed bijection.
class ClassLabel {
 public:
  ClassLabel() = default;
  explicit ClassLabel(int code) : code_(code) {
    if (code < 0 || code >= kClassCount)
      throw ContractError("class code out of range [0,6]: " + std::to_string(code));
  }

  int code() const { return code_; }
  std::string_view name() const { return kClassNames[static_cast<size_t>(code_)]; }

  friend bool operator==(ClassLabel a, ClassLabel b) { return a.code_ == b.code_; }
  friend bool operator!=(ClassLabel a, ClassLabel b) { return a.code_ != b.code_; }

 private:
  int code_ = 0;
};

inline std::string_view class_name(int code) { return ClassLabel(code).name(); }

}  // namespace dermabench
