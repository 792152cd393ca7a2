#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chartpot/chart.hpp"
#include "chartpot/config.hpp"
#include "chartpot/llm_client.hpp"
#include "chartpot/metrics.hpp"

namespace chartpot {

/// Fisher-Yates permutation of 0..n-1 driven by mt19937_64(seed); identical
/// on every platform.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

struct BatchOptions {
  /// Shuffle the manifest with this seed before applying `limit`.
  std::optional<std::uint64_t> seed;
  /// Process only the first N charts (after shuffling).
  std::optional<std::size_t> limit;
  /// Called on the writer thread after each record is persisted.
  std::function<void(const RunRecord&)> on_record;
};

struct BatchSummary {
  std::size_t selected = 0;  // charts after seed/limit
  std::size_t skipped = 0;   // already present in the output file
  std::size_t written = 0;
  std::size_t failed = 0;  // written records carrying a failure
};

/// Runs the pipeline over the charts and appends one RunRecord line per chart
/// to `out`, in chart order regardless of worker scheduling. Charts whose
/// (chart_id, strategy, composition) already appear in `out` are skipped.
///
/// Config and credentials are checked before any model call: throws
/// Error(kConfig) or Error(kAuthMissing); Error(kIo) when `out` is not
/// writable.
BatchSummary run_batch(std::span<const ChartRecord> charts, const PipelineConfig& cfg,
                       const std::filesystem::path& out, std::shared_ptr<LlmClient> client,
                       const BatchOptions& options = {});
BatchSummary run_batch(const std::filesystem::path& manifest, const PipelineConfig& cfg,
                       const std::filesystem::path& out, std::shared_ptr<LlmClient> client,
                       const BatchOptions& options = {});

/// Column order of report tables: the five chart types, then All.
inline constexpr std::size_t kReportColumns = kAllChartTypes.size() + 1;
inline constexpr std::size_t kAllColumn = kAllChartTypes.size();

struct ReportRow {
  std::string label;  // "Direct", "MCoT", "PoT|DictStatsTitle", ...
  Strategy strategy = Strategy::kPoT;
  InputComposition composition = InputComposition::kDictStatsTitle;
  std::array<MetricReport, kReportColumns> cells{};
  std::size_t runs = 0;
  std::int64_t runtime_ms = 0;
};

struct FailureCount {
  FailureStage stage;
  FailureCategory category;
  std::size_t count = 0;
};

struct EvalReport {
  std::vector<ReportRow> rows;  // ordered by (strategy, composition)
  std::vector<FailureCount> failure_histogram;  // ordered by (stage, category)
  std::int64_t runtime_ms = 0;
};

/// Groups runs per configuration and chart type. Runs without a summary are
/// scored with an empty candidate; charts without a gold summary are not
/// scored. Throws Error(kOrphanRun) naming the first unknown chart id.
EvalReport build_report(std::span<const RunRecord> runs, std::span<const ChartRecord> manifest);
EvalReport build_report(const std::filesystem::path& runs, const std::filesystem::path& manifest);

enum class TableFormat { kMarkdown, kTsv };
std::optional<TableFormat> parse_table_format(std::string_view s);

/// Metric table (one row per configuration and metric). Markdown output adds
/// the failure histogram as a second table.
std::string render_tables(const EvalReport& report, TableFormat format);

}  // namespace chartpot
