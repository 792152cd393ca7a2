#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chartpot/chart.hpp"
#include "chartpot/sandbox.hpp"
#include "chartpot/value_tree.hpp"

namespace chartpot {

enum class Repair {
  kFenceStripped,
  kPrefixStripped,
  kTrailingTrimmed,
  kQuoteNormalized,
  kTrailingCommaDropped,
  kDuplicateKeyMerged,
};

std::string_view to_string(Repair r);

struct ParseOutcome {
  std::optional<ValueTree> result;
  std::vector<Repair> repairs_applied;
  std::optional<FailureClass> failure;

  bool ok() const noexcept { return result.has_value(); }
};

struct ExtractedPayload {
  std::string text;
  std::vector<Repair> repairs;
};

/// Locates the dictionary literal inside raw model text: strips markdown
/// fences, a leading `chart_dict =`, prose before the first `{` or `[`, and
/// anything after the balanced closing delimiter. An unbalanced (truncated)
/// literal is returned up to the end of the text.
///
/// Throws Error(kNoPayloadFound) when no opening delimiter exists.
std::string extract_payload(std::string_view raw_model_text);
ExtractedPayload extract_payload_with_repairs(std::string_view raw_model_text);

/// Parses JSON or an object-language literal. Never throws; failures carry
/// stage DictParse and messages in the object language's diagnostic style,
/// e.g. "'{' was never closed (<string>, line 3)".
ParseOutcome parse_value_tree(std::string_view payload);

/// extract_payload followed by parse_value_tree, with the extraction repairs
/// prepended. A missing payload is a DictParse failure, not an exception.
ParseOutcome parse_model_dict(std::string_view raw_model_text);

/// Structural admission check for use as program input: depth and node
/// count within limits (BudgetExceeded), scalar keys only (Other).
std::optional<FailureClass> validate_executable(const ValueTree& tree, const SandboxLimits& limits);

inline constexpr std::size_t kMaxPayloadBytes = 1u << 20;

}  // namespace chartpot
