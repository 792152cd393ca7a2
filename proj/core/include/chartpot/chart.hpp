#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chartpot/value_tree.hpp"

namespace chartpot {

enum class ChartType { kArea, kBar, kLine, kPie, kScatter };
enum class Complexity { kSimple, kComplex };
enum class Dataset { kPew, kVisText, kCustom };

inline constexpr std::array<ChartType, 5> kAllChartTypes = {
    ChartType::kArea, ChartType::kBar, ChartType::kLine, ChartType::kPie, ChartType::kScatter};

enum class Strategy { kDirect, kMCoT, kPoT, kPoTTemplate };

enum class InputComposition { kTitle, kDictTitle, kStatsTitle, kDictStatsTitle, kDictStatsTTitle };

inline constexpr std::array<InputComposition, 5> kAllCompositions = {
    InputComposition::kTitle, InputComposition::kDictTitle, InputComposition::kStatsTitle,
    InputComposition::kDictStatsTitle, InputComposition::kDictStatsTTitle};

enum class FailureStage { kDictGen, kDictParse, kCodeGen, kCodeParse, kCodeExec, kSummarize };

enum class FailureCategory {
  kTruncated,
  kTypeMismatch,
  kAttributeError,
  kValueError,
  kSyntaxError,
  kBudgetExceeded,
  kEmptyOutput,
  kOther,
};

/// Display names ("Bar", "PoT", "DictStatsTitle", "BudgetExceeded", ...).
std::string_view to_string(ChartType v);
std::string_view to_string(Complexity v);
std::string_view to_string(Dataset v);
std::string_view to_string(Strategy v);
std::string_view to_string(InputComposition v);
std::string_view to_string(FailureStage v);
std::string_view to_string(FailureCategory v);

/// Case-insensitive parsers; std::nullopt for unknown names.
std::optional<ChartType> parse_chart_type(std::string_view s);
std::optional<Complexity> parse_complexity(std::string_view s);
std::optional<Dataset> parse_dataset(std::string_view s);
std::optional<Strategy> parse_strategy(std::string_view s);
std::optional<InputComposition> parse_composition(std::string_view s);
std::optional<FailureStage> parse_failure_stage(std::string_view s);
std::optional<FailureCategory> parse_failure_category(std::string_view s);

struct ChartRecord {
  std::string id;
  std::string image_path;
  std::string title;
  ChartType chart_type = ChartType::kBar;
  Complexity complexity = Complexity::kSimple;
  std::string gold_summary;
  Dataset dataset = Dataset::kCustom;

  friend bool operator==(const ChartRecord&, const ChartRecord&) = default;
};

struct FailureClass {
  FailureStage stage = FailureStage::kDictParse;
  FailureCategory category = FailureCategory::kOther;
  std::string message;

  friend bool operator==(const FailureClass&, const FailureClass&) = default;
};

/// True when the message is an unclosed-delimiter diagnosis; Truncated
/// failures carry exactly these messages.
bool is_unclosed_delimiter_message(std::string_view message);

enum class StageStatus { kOk, kFailed, kFallback, kSkipped };
std::string_view to_string(StageStatus v);
std::optional<StageStatus> parse_stage_status(std::string_view s);

enum class StatsProvenance { kPoT, kTemplate };
std::string_view to_string(StatsProvenance v);
std::optional<StatsProvenance> parse_stats_provenance(std::string_view s);

/// One model call or engine step inside a run.
struct StageOutput {
  std::string stage;  // chart_to_dict, dict_repair, dict_to_stats, template_stats, summarize, direct, mcot
  int attempt = 1;
  std::string model_id;
  std::string prompt;    // rendered transcript sent to the model
  std::string raw_text;  // model text (prefill included)
  std::optional<ValueTree> artifact;
  StageStatus status = StageStatus::kOk;
  std::optional<FailureClass> failure;
  std::vector<std::string> notes;
  std::int64_t elapsed_ms = 0;

  friend bool operator==(const StageOutput&, const StageOutput&) = default;
};

/// Full provenance of one pipeline execution over one chart.
struct RunRecord {
  std::string chart_id;
  Strategy strategy = Strategy::kPoT;
  InputComposition input_composition = InputComposition::kDictStatsTitle;
  std::vector<StageOutput> stage_outputs;
  std::optional<FailureClass> failure;
  std::optional<std::string> summary;
  std::optional<StatsProvenance> stats_provenance;
  std::vector<std::pair<std::string, std::int64_t>> timings_ms;
  std::vector<std::pair<std::string, std::string>> model_ids;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

}  // namespace chartpot
