#include "chartpot/chart.hpp"

#include <algorithm>
#include <cctype>

namespace chartpot {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

template <class Enum, std::size_t N>
std::optional<Enum> parse_enum(std::string_view s, const std::array<Enum, N>& values) {
  for (Enum v : values) {
    if (iequals(s, to_string(v))) return v;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(ChartType v) {
  switch (v) {
    case ChartType::kArea: return "Area";
    case ChartType::kBar: return "Bar";
    case ChartType::kLine: return "Line";
    case ChartType::kPie: return "Pie";
    case ChartType::kScatter: return "Scatter";
  }
  return "?";
}

std::string_view to_string(Complexity v) {
  return v == Complexity::kSimple ? "Simple" : "Complex";
}

std::string_view to_string(Dataset v) {
  switch (v) {
    case Dataset::kPew: return "Pew";
    case Dataset::kVisText: return "VisText";
    case Dataset::kCustom: return "Custom";
  }
  return "?";
}

std::string_view to_string(Strategy v) {
  switch (v) {
    case Strategy::kDirect: return "Direct";
    case Strategy::kMCoT: return "MCoT";
    case Strategy::kPoT: return "PoT";
    case Strategy::kPoTTemplate: return "PoTTemplate";
  }
  return "?";
}

std::string_view to_string(InputComposition v) {
  switch (v) {
    case InputComposition::kTitle: return "Title";
    case InputComposition::kDictTitle: return "DictTitle";
    case InputComposition::kStatsTitle: return "StatsTitle";
    case InputComposition::kDictStatsTitle: return "DictStatsTitle";
    case InputComposition::kDictStatsTTitle: return "DictStatsTTitle";
  }
  return "?";
}

std::string_view to_string(FailureStage v) {
  switch (v) {
    case FailureStage::kDictGen: return "DictGen";
    case FailureStage::kDictParse: return "DictParse";
    case FailureStage::kCodeGen: return "CodeGen";
    case FailureStage::kCodeParse: return "CodeParse";
    case FailureStage::kCodeExec: return "CodeExec";
    case FailureStage::kSummarize: return "Summarize";
  }
  return "?";
}

std::string_view to_string(FailureCategory v) {
  switch (v) {
    case FailureCategory::kTruncated: return "Truncated";
    case FailureCategory::kTypeMismatch: return "TypeMismatch";
    case FailureCategory::kAttributeError: return "AttributeError";
    case FailureCategory::kValueError: return "ValueError";
    case FailureCategory::kSyntaxError: return "SyntaxError";
    case FailureCategory::kBudgetExceeded: return "BudgetExceeded";
    case FailureCategory::kEmptyOutput: return "EmptyOutput";
    case FailureCategory::kOther: return "Other";
  }
  return "?";
}

std::string_view to_string(StageStatus v) {
  switch (v) {
    case StageStatus::kOk: return "ok";
    case StageStatus::kFailed: return "failed";
    case StageStatus::kFallback: return "fallback";
    case StageStatus::kSkipped: return "skipped";
  }
  return "?";
}

std::string_view to_string(StatsProvenance v) {
  return v == StatsProvenance::kPoT ? "PoT" : "Template";
}

std::optional<ChartType> parse_chart_type(std::string_view s) {
  return parse_enum(s, kAllChartTypes);
}

std::optional<Complexity> parse_complexity(std::string_view s) {
  return parse_enum(s, std::array{Complexity::kSimple, Complexity::kComplex});
}

std::optional<Dataset> parse_dataset(std::string_view s) {
  return parse_enum(s, std::array{Dataset::kPew, Dataset::kVisText, Dataset::kCustom});
}

std::optional<Strategy> parse_strategy(std::string_view s) {
  return parse_enum(s, std::array{Strategy::kDirect, Strategy::kMCoT, Strategy::kPoT, Strategy::kPoTTemplate});
}

std::optional<InputComposition> parse_composition(std::string_view s) {
  return parse_enum(s, kAllCompositions);
}

std::optional<FailureStage> parse_failure_stage(std::string_view s) {
  return parse_enum(s, std::array{FailureStage::kDictGen, FailureStage::kDictParse, FailureStage::kCodeGen,
                                  FailureStage::kCodeParse, FailureStage::kCodeExec, FailureStage::kSummarize});
}

std::optional<FailureCategory> parse_failure_category(std::string_view s) {
  return parse_enum(s, std::array{FailureCategory::kTruncated, FailureCategory::kTypeMismatch,
                                  FailureCategory::kAttributeError, FailureCategory::kValueError,
                                  FailureCategory::kSyntaxError, FailureCategory::kBudgetExceeded,
                                  FailureCategory::kEmptyOutput, FailureCategory::kOther});
}

std::optional<StageStatus> parse_stage_status(std::string_view s) {
  return parse_enum(s, std::array{StageStatus::kOk, StageStatus::kFailed, StageStatus::kFallback,
                                  StageStatus::kSkipped});
}

std::optional<StatsProvenance> parse_stats_provenance(std::string_view s) {
  return parse_enum(s, std::array{StatsProvenance::kPoT, StatsProvenance::kTemplate});
}

bool is_unclosed_delimiter_message(std::string_view message) {
  return message.find("was never closed") != std::string_view::npos;
}

}  // namespace chartpot
