#include "histo/labels.hpp"

#include <stdexcept>

namespace histo {

namespace {
constexpr std::array<std::string_view, kNumClassCodes> kNames = {
    "N", "PB", "UDH", "FEA", "ADH", "DCIS", "IC"};
}

ClassCode class_from_index(int index) {
  if (index < 0 || index >= static_cast<int>(kNumClassCodes)) {
    throw std::out_of_range("class index out of range: " + std::to_string(index));
  }
  return static_cast<ClassCode>(index);
}

std::string_view code_name(ClassCode c) { return kNames[index_of(c)]; }

LesionGroup group_of(ClassCode c) {
  switch (c) {
    case ClassCode::N:
    case ClassCode::PB:
    case ClassCode::UDH:
      return LesionGroup::benign;
    case ClassCode::FEA:
    case ClassCode::ADH:
      return LesionGroup::atypical;
    case ClassCode::DCIS:
    case ClassCode::IC:
      return LesionGroup::malignant;
  }
  return LesionGroup::benign;
}

std::string_view group_name(LesionGroup g) {
  switch (g) {
    case LesionGroup::benign:
      return "benign";
    case LesionGroup::atypical:
      return "atypical";
    case LesionGroup::malignant:
      return "malignant";
  }
  return "";
}

std::optional<ClassCode> parse_class(std::string_view text) {
  // "0_N", "5_DCIS": strip a leading "<digits>_" prefix.
  if (auto us = text.find('_'); us != std::string_view::npos && us > 0) {
    bool digits = true;
    for (std::size_t i = 0; i < us; ++i) {
      if (text[i] < '0' || text[i] > '9') digits = false;
    }
    if (digits) text = text.substr(us + 1);
  }
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == text) return static_cast<ClassCode>(i);
  }
  return std::nullopt;
}

}  // namespace histo
