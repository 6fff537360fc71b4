#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace histo {

/// The seven BRACS lesion subtypes. The enumerator value is also the
/// model output index and the row/column order of confusion matrices.
enum class ClassCode : int { N = 0, PB, UDH, FEA, ADH, DCIS, IC };

enum class LesionGroup { benign, atypical, malignant };

inline constexpr std::size_t kNumClassCodes = 7;

inline constexpr std::array<ClassCode, kNumClassCodes> kAllClasses = {
    ClassCode::N,   ClassCode::PB,   ClassCode::UDH, ClassCode::FEA,
    ClassCode::ADH, ClassCode::DCIS, ClassCode::IC};

constexpr int index_of(ClassCode c) { return static_cast<int>(c); }

ClassCode class_from_index(int index);
std::string_view code_name(ClassCode c);
LesionGroup group_of(ClassCode c);
std::string_view group_name(LesionGroup g);

/// Accepts bare codes ("DCIS") and the indexed folder names used by the
/// BRACS distribution ("5_DCIS"). Case-sensitive.
std::optional<ClassCode> parse_class(std::string_view text);

}  // namespace histo
