#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "chartpot/chart.hpp"

namespace chartpot {

/// One system's outputs for the comparison.
struct SystemRuns {
  std::string label;  // e.g. "pot", "template"; never shown to evaluators
  std::vector<RunRecord> runs;
};

struct PreferencePair {
  std::string pair_id;
  std::string chart_id;
  std::string image_path;
  std::string left_system;
  std::string left_text;
  std::string right_system;
  std::string right_text;
  /// Its lowest bit decides the sides: even puts the first system on the left.
  std::uint64_t presentation_seed = 0;

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

/// True when `presentation_seed` puts the first system on the left.
constexpr bool first_system_left(std::uint64_t presentation_seed) { return (presentation_seed & 1u) == 0; }

struct PairSample {
  std::vector<PreferencePair> pairs;
  /// "InsufficientCharts(Pie, have 3, want 10)" for types with too few charts.
  std::vector<std::string> warnings;
};

/// Seeded uniform sample of `per_type` charts per chart type among charts
/// where both systems produced a summary; the first summary per chart wins.
/// Sides are balanced: the first system is on the left for ceil(n/2) pairs.
PairSample sample_pairs(const SystemRuns& a, const SystemRuns& b, std::span<const ChartRecord> manifest,
                        std::size_t per_type, std::uint64_t seed);

struct ChoiceRecord {
  std::string pair_id;
  std::string evaluator_id;
  std::string chosen_system;
  std::string timestamp;  // ISO-8601 UTC

  friend bool operator==(const ChoiceRecord&, const ChoiceRecord&) = default;
};

std::string encode_choice(const ChoiceRecord& c);
/// Throws Error(kSerialization).
ChoiceRecord decode_choice(std::string_view line);

/// Pairs plus the append-only choice log. Thread-safe.
class ChoiceStore {
 public:
  /// Replays an existing log at `log_path` (empty path: memory only).
  /// Throws Error(kIo) or Error(kSerialization) for unreadable logs.
  ChoiceStore(std::vector<PreferencePair> pairs, std::filesystem::path log_path = {});

  const std::vector<PreferencePair>& pairs() const noexcept { return pairs_; }
  const PreferencePair* find_pair(std::string_view pair_id) const;

  /// Throws Error with kUnknownPair, kInvalidChoice (system not in the pair)
  /// or kDuplicateChoice. The record is on disk when this returns.
  void record_choice(const ChoiceRecord& choice);

  std::vector<ChoiceRecord> choices() const;
  std::size_t choices_by(std::string_view evaluator_id) const;
  bool has_choice(std::string_view pair_id, std::string_view evaluator_id) const;
  std::size_t evaluator_count() const;

 private:
  void insert(const ChoiceRecord& choice, bool persist);

  std::vector<PreferencePair> pairs_;
  std::map<std::string, std::size_t, std::less<>> pair_index_;
  std::filesystem::path log_path_;
  mutable std::mutex mu_;
  std::vector<ChoiceRecord> choices_;
  std::map<std::pair<std::string, std::string>, std::size_t> seen_;
};

/// Selections per system divided by the evaluator count. Systems listed in
/// `systems` appear even with no selections. Throws Error(kInvalidArgument)
/// when evaluators < 1.
std::map<std::string, double> aggregate_scores(std::span<const ChoiceRecord> choices, int evaluators,
                                               const std::vector<std::string>& systems = {});

/// Current UTC time as ISO-8601 with seconds.
std::string utc_timestamp();

}  // namespace chartpot
