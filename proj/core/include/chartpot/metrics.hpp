#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chartpot/llm_client.hpp"

namespace chartpot {

struct ScoredPair {
  std::string candidate;
  std::vector<std::string> references;  // at least one
};

/// Lowercased 13a-style tokens (punctuation split, periods and commas kept
/// inside numbers, whitespace collapsed). Shared by every metric.
std::vector<std::string> tokenize(std::string_view text);

/// Corpus BLEU on a 0..100 scale: clipped 1..4-gram precisions, exponential
/// smoothing of zero counts, closest-reference brevity penalty. A corpus with
/// no matching n-gram of any order scores 0.
/// Throws Error(kEmptyCorpus).
double corpus_bleu(std::span<const ScoredPair> pairs);

struct RougeScores {
  double rouge1_f1 = 0.0;
  double rougeL_f1 = 0.0;
};

/// Unigram-overlap F1 and LCS F1 (beta 1); maximum over references.
RougeScores rouge_scores(const ScoredPair& pair);

/// CIDEr (no length penalty, no clipping): TF-IDF n-gram vectors with document
/// frequencies over the reference sets, cosine averaged over references and
/// n = 1..4, mean over pairs, times 10.
/// Throws Error(kCorpusTooSmall) for fewer than two pairs.
double cider(std::span<const ScoredPair> pairs);

struct MetricReport {
  double bleu = 0.0;
  double cider = 0.0;
  double rouge1_f1 = 0.0;  // mean over pairs
  double rougeL_f1 = 0.0;
  std::size_t n = 0;
  /// False when the group had fewer than two pairs; cider is then 0.
  bool cider_defined = false;
};

/// All metrics over one group. An empty group yields n = 0 and zeros.
MetricReport score_corpus(std::span<const ScoredPair> pairs);

/// Delegates scoring to an external service: POST {base_url}/score with
/// {"scorer": id, "pairs": [...]}, expecting {"scores": [...]}.
/// Throws Error with kTransport, kTimeout or kShapeMismatch.
std::vector<double> external_score(std::span<const ScoredPair> batch, const ModelEndpoint& endpoint,
                                   std::string_view scorer_id, Transport& transport);

}  // namespace chartpot
