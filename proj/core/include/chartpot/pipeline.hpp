#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chartpot/chart.hpp"
#include "chartpot/config.hpp"
#include "chartpot/llm_client.hpp"
#include "chartpot/pyliteral.hpp"
#include "chartpot/value_tree.hpp"

namespace chartpot {

/// Note attached to the repair call's output when the repair model produced
/// the accepted dictionary.
inline constexpr std::string_view kRepairModelUsedNote = "RepairModelUsed";
/// Note attached when a repair was needed but no repair endpoint exists.
inline constexpr std::string_view kMissingRepairEndpointNote = "MissingRepairEndpoint";
inline constexpr std::string_view kTemplateFallbackNote = "fallback: Template";

struct DictStageResult {
  std::optional<ValueTree> tree;
  std::vector<Repair> repairs;
  bool repair_model_used = false;
  std::optional<FailureClass> failure;
  std::vector<StageOutput> outputs;
};

struct StatsStageResult {
  std::optional<StatsMap> stats;
  std::optional<StatsProvenance> provenance;
  /// Last generated-program failure when the template took over, or the
  /// EmptyStats failure when even the template found nothing.
  std::optional<FailureClass> failure;
  bool empty_stats = false;
  std::vector<StageOutput> outputs;
};

struct SummaryStageResult {
  std::optional<std::string> summary;
  std::optional<FailureClass> failure;
  StageOutput output;
};

/// Runs the configured strategy over single charts. Thread-safe: concurrent
/// run_chart calls share only the client.
class Pipeline {
 public:
  /// Throws Error(kConfig) when the config does not validate.
  Pipeline(PipelineConfig cfg, std::shared_ptr<LlmClient> client);

  const PipelineConfig& config() const noexcept { return cfg_; }

  /// Chart image to dictionary on the VLM, with one repair hop on the repair
  /// endpoint when the first answer does not parse.
  DictStageResult stage_chart_to_dict(const ChartRecord& chart) const;

  /// Generated statistics program with retries, falling back to the template
  /// engine; template only for PoTTemplate and DictStatsTTitle.
  StatsStageResult stage_dict_to_stats(const ValueTree& tree) const;

  /// Summary prompt with exactly the composition's slots. Throws
  /// Error(kMissingSlot) when a needed slot is absent; model errors propagate.
  SummaryStageResult stage_summarize(const ChartRecord& chart, const ValueTree* tree, const StatsMap* stats,
                                     InputComposition composition) const;
  SummaryStageResult stage_summarize(const ChartRecord& chart, const ValueTree* tree, const StatsMap* stats) const {
    return stage_summarize(chart, tree, stats, cfg_.composition);
  }

  /// Full stage sequence. Never throws for model or program faults; every
  /// outcome lands in the record.
  RunRecord run_chart(const ChartRecord& chart) const;

  /// Image reference the chart stages attach (image_root applied), or empty.
  std::string resolve_image(const ChartRecord& chart) const;

 private:
  struct Call;
  StageOutput call(Call& c) const;

  PipelineConfig cfg_;
  std::shared_ptr<LlmClient> client_;
};

}  // namespace chartpot
