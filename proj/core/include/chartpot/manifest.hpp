#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "chartpot/chart.hpp"

namespace chartpot {

/// Per-chart-type record counts, indexed in kAllChartTypes order.
struct TypeCounts {
  std::array<std::size_t, kAllChartTypes.size()> by_type{};
  std::size_t total = 0;

  std::size_t operator[](ChartType t) const { return by_type[static_cast<std::size_t>(t)]; }
};

TypeCounts count_by_type(std::span<const ChartRecord> records);

/// Reads a line-delimited JSON manifest. Blank lines are ignored.
///
/// Throws Error with kMalformedLine (1-based line number in the message),
/// kDuplicateId, kUnknownChartType or kIo.
std::vector<ChartRecord> load_manifest(const std::filesystem::path& path);
std::vector<ChartRecord> parse_manifest(std::istream& in);

/// One JSON object per record, fields in manifest order.
void write_manifest(std::ostream& out, std::span<const ChartRecord> records);

/// Longest candidate by character count; the first one wins ties.
/// Throws Error(kEmptyCandidateList) for an empty list.
std::string select_gold_caption(std::span<const std::string> candidates);

}  // namespace chartpot
