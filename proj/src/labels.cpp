#include "propdetect/labels.hpp"

#include <string>

#include "propdetect/errors.hpp"

namespace propdetect {
namespace {

struct LabelNames {
  std::string_view canonical;
  std::string_view display;
};

constexpr std::array<LabelNames, kNumLabels> kNames{{
    {"NonPropaganda", "Non-propaganda"},
    {"Name_Calling,Labeling", "Name Calling"},
    {"Repetition", "Repetition"},
    {"Slogans", "Slogans"},
    {"Appeal_to_fear-prejudice", "Appeal to Fear"},
    {"Doubt", "Doubt"},
    {"Exaggeration,Minimisation", "Exaggeration"},
    {"Flag-Waving", "Flag-Waving"},
    {"Loaded_Language", "Loaded Language"},
    {"Reductio_ad_hitlerum", "Reductio ad Hitlerum"},
    {"Bandwagon", "Bandwagon"},
    {"Causal_Oversimplification", "Causal Oversimplification"},
    {"Obfuscation,Intentional_Vagueness,Confusion", "Obfuscation"},
    {"Appeal_to_Authority", "Appeal to Authority"},
    {"Black-and-White_Fallacy", "Black-and-White Fallacy"},
    {"Thought-terminating_Cliches", "Thought-terminating Cliches"},
    {"Red_Herring", "Red Herring"},
    {"Straw_Men", "Straw Men"},
    {"Whataboutism", "Whataboutism"},
}};

}  // namespace

TechniqueLabel label_from_index(int index) {
  if (index < 0 || index >= static_cast<int>(kNumLabels)) {
    throw ValidationError("label index out of range: " + std::to_string(index));
  }
  return static_cast<TechniqueLabel>(index);
}

const std::array<TechniqueLabel, kNumLabels>& all_labels() {
  static const auto labels = [] {
    std::array<TechniqueLabel, kNumLabels> out{};
    for (std::size_t i = 0; i < kNumLabels; ++i) out[i] = static_cast<TechniqueLabel>(i);
    return out;
  }();
  return labels;
}

const std::array<TechniqueLabel, kNumTechniques>& all_techniques() {
  static const auto techniques = [] {
    std::array<TechniqueLabel, kNumTechniques> out{};
    for (std::size_t i = 0; i < kNumTechniques; ++i) out[i] = static_cast<TechniqueLabel>(i + 1);
    return out;
  }();
  return techniques;
}

std::string_view to_string(TechniqueLabel label) {
  return kNames[static_cast<std::size_t>(label_index(label))].canonical;
}

std::string_view display_name(TechniqueLabel label) {
  return kNames[static_cast<std::size_t>(label_index(label))].display;
}

TechniqueLabel parse_label(std::string_view text) {
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (kNames[i].canonical == text || kNames[i].display == text) {
      return static_cast<TechniqueLabel>(i);
    }
  }
  throw ValidationError("unknown technique label '" + std::string(text) + "'");
}

}  // namespace propdetect
