#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chartpot/chart.hpp"

namespace chartpot {

/// Every prompt the pipeline sends. Defaults are the reference prompt texts;
/// the title-only, dictionary-only and statistics-only summary variants and
/// the Direct/MCoT prompts are reconstructions (see README).
struct PromptSet {
  std::string dict_gen;
  std::string dict_prefill;
  std::string dict_repair;
  std::string pot_system;
  std::string pot_user;  // slot {chart_dict}
  std::string pot_prefill;
  std::string summary_user;        // slots {title} {dictionary_str} {summary_dict}
  std::string summary_user_title;  // {title}
  std::string summary_user_dict;   // {title} {dictionary_str}
  std::string summary_user_stats;  // {title} {summary_dict}
  std::string summary_prefill;
  std::string direct;  // {title}
  std::string mcot;    // {title}

  static PromptSet defaults();

  /// Summary template for a composition (both slots for DictStatsTitle and
  /// DictStatsTTitle).
  const std::string& summary_for(InputComposition c) const;

  friend bool operator==(const PromptSet&, const PromptSet&) = default;
};

/// Placeholder image marker in user prompts; the client puts the image part
/// at its position.
inline constexpr std::string_view kImagePlaceholder = "<img_placeholder>";

/// Field names accepted by prompt overrides, in declaration order.
const std::vector<std::string_view>& prompt_field_names();
std::string* prompt_field(PromptSet& set, std::string_view name);

using SlotValues = std::vector<std::pair<std::string, std::string>>;

/// Single-pass replacement of `{name}` for the given slots. Substituted text
/// is not rescanned, and braces that name no slot are copied verbatim.
std::string fill_slots(std::string_view tmpl, const SlotValues& slots);

/// Slot names referenced by a template, in order of first use, restricted to
/// identifier-shaped names.
std::vector<std::string> template_slots(std::string_view tmpl);

/// Drops the echoed prefill and leading reasoning scaffold (lines starting
/// with "Step", enumerations such as "1." or "2)", bullets). When a line is
/// labelled "Summary:" the text after the label wins. Result is trimmed.
std::string postprocess_summary(std::string_view text, std::string_view prefill);

}  // namespace chartpot
