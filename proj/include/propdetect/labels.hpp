#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace propdetect {

// Order is fixed: it defines class indices, table rows and tie-breaking.
enum class TechniqueLabel : int {
  NonPropaganda = 0,
  NameCalling,
  Repetition,
  Slogans,
  AppealToFear,
  Doubt,
  Exaggeration,
  FlagWaving,
  LoadedLanguage,
  ReductioAdHitlerum,
  Bandwagon,
  CausalOversimplification,
  ObfuscationVaguenessConfusion,
  AppealToAuthority,
  BlackAndWhiteFallacy,
  ThoughtTerminatingCliches,
  RedHerring,
  StrawMen,
  Whataboutism,
};

inline constexpr std::size_t kNumLabels = 19;
inline constexpr std::size_t kNumTechniques = 18;

constexpr int label_index(TechniqueLabel label) { return static_cast<int>(label); }
TechniqueLabel label_from_index(int index);

/// All 19 labels, NonPropaganda first.
const std::array<TechniqueLabel, kNumLabels>& all_labels();
/// The 18 techniques, without NonPropaganda.
const std::array<TechniqueLabel, kNumTechniques>& all_techniques();

/// Canonical serialization, the names used in the public span annotation files
/// (e.g. "Loaded_Language", "Name_Calling,Labeling").
std::string_view to_string(TechniqueLabel label);
/// Short human-readable name for tables and reports.
std::string_view display_name(TechniqueLabel label);

/// Accepts the canonical name or the display name. Throws ValidationError otherwise.
TechniqueLabel parse_label(std::string_view text);

inline bool is_propaganda(TechniqueLabel label) {
  return label != TechniqueLabel::NonPropaganda;
}

}  // namespace propdetect
