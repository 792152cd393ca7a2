#include "chartpot/humaneval.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <random>
#include <set>
#include <unordered_map>

#include "chartpot/error.hpp"
#include "chartpot/harness.hpp"

namespace chartpot {

using json = nlohmann::ordered_json;

namespace {

std::unordered_map<std::string, const std::string*> first_summaries(const SystemRuns& s) {
  std::unordered_map<std::string, const std::string*> out;
  for (const auto& r : s.runs) {
    if (r.summary && !r.summary->empty()) out.emplace(r.chart_id, &*r.summary);
  }
  return out;
}

}  // namespace

PairSample sample_pairs(const SystemRuns& a, const SystemRuns& b, std::span<const ChartRecord> manifest,
                        std::size_t per_type, std::uint64_t seed) {
  if (a.label == b.label) throw Error(ErrorCode::kInvalidArgument, "the two systems need distinct labels");
  const auto sa = first_summaries(a);
  const auto sb = first_summaries(b);
  PairSample out;

  std::vector<const ChartRecord*> chosen;
  for (std::size_t t = 0; t < kAllChartTypes.size(); ++t) {
    const ChartType type = kAllChartTypes[t];
    std::vector<const ChartRecord*> eligible;
    bool present = false;
    for (const auto& c : manifest) {
      if (c.chart_type != type) continue;
      present = true;
      if (sa.count(c.id) != 0 && sb.count(c.id) != 0) eligible.push_back(&c);
    }
    if (!present) continue;
    if (eligible.size() < per_type) {
      out.warnings.push_back(
          fmt::format("InsufficientCharts({}, have {}, want {})", to_string(type), eligible.size(), per_type));
    }
    const auto perm = seeded_permutation(eligible.size(), seed + t);
    for (std::size_t k = 0; k < std::min(per_type, eligible.size()); ++k) chosen.push_back(eligible[perm[k]]);
  }

  // Exactly ceil(n/2) pairs show the first system on the left; which ones is
  // decided by the seed.
  const std::size_t n = chosen.size();
  std::vector<bool> a_left(n, false);
  for (std::size_t k = 0; k < (n + 1) / 2; ++k) a_left[k] = true;
  const auto perm = seeded_permutation(n, seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < n; ++k) {
    const ChartRecord& c = *chosen[k];
    PreferencePair p;
    p.pair_id = fmt::format("pair-{:03}", k + 1);
    p.chart_id = c.id;
    p.image_path = c.image_path;
    const bool left_a = a_left[perm[k]];
    p.presentation_seed = (rng() & ~std::uint64_t{1}) | (left_a ? 0u : 1u);
    const std::string& ta = *sa.at(c.id);
    const std::string& tb = *sb.at(c.id);
    if (first_system_left(p.presentation_seed)) {
      p.left_system = a.label, p.left_text = ta, p.right_system = b.label, p.right_text = tb;
    } else {
      p.left_system = b.label, p.left_text = tb, p.right_system = a.label, p.right_text = ta;
    }
    out.pairs.push_back(std::move(p));
  }
  return out;
}

std::string encode_choice(const ChoiceRecord& c) {
  return json{{"pair_id", c.pair_id},
              {"evaluator_id", c.evaluator_id},
              {"chosen_system", c.chosen_system},
              {"timestamp", c.timestamp}}
      .dump();
}

ChoiceRecord decode_choice(std::string_view line) {
  const json j = json::parse(line, nullptr, false);
  auto str = [&](const char* key) {
    if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
      throw Error(ErrorCode::kSerialization, std::string("choice record lacks string field '") + key + "'");
    }
    return j[key].get<std::string>();
  };
  return ChoiceRecord{str("pair_id"), str("evaluator_id"), str("chosen_system"), str("timestamp")};
}

ChoiceStore::ChoiceStore(std::vector<PreferencePair> pairs, std::filesystem::path log_path)
    : pairs_(std::move(pairs)), log_path_(std::move(log_path)) {
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    if (!pair_index_.emplace(pairs_[k].pair_id, k).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate pair id " + pairs_[k].pair_id);
    }
  }
  if (log_path_.empty() || !std::filesystem::exists(log_path_)) return;
  std::ifstream in(log_path_, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read choice log '" + log_path_.string() + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    insert(decode_choice(line), false);
  }
}

const PreferencePair* ChoiceStore::find_pair(std::string_view pair_id) const {
  auto it = pair_index_.find(pair_id);
  return it == pair_index_.end() ? nullptr : &pairs_[it->second];
}

void ChoiceStore::insert(const ChoiceRecord& choice, bool persist) {
  const PreferencePair* p = find_pair(choice.pair_id);
  if (p == nullptr) throw Error(ErrorCode::kUnknownPair, choice.pair_id);
  if (choice.chosen_system != p->left_system && choice.chosen_system != p->right_system) {
    throw Error(ErrorCode::kInvalidChoice,
                "system '" + choice.chosen_system + "' is not part of pair " + choice.pair_id);
  }
  std::lock_guard lock(mu_);
  const auto key = std::make_pair(choice.pair_id, choice.evaluator_id);
  if (seen_.count(key) != 0) {
    throw Error(ErrorCode::kDuplicateChoice, choice.evaluator_id + " already chose for " + choice.pair_id);
  }
  if (persist && !log_path_.empty()) {
    std::ofstream out(log_path_, std::ios::binary | std::ios::app);
    out << encode_choice(choice) << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "cannot append to choice log '" + log_path_.string() + "'");
  }
  seen_.emplace(key, choices_.size());
  choices_.push_back(choice);
}

void ChoiceStore::record_choice(const ChoiceRecord& choice) { insert(choice, true); }

std::vector<ChoiceRecord> ChoiceStore::choices() const {
  std::lock_guard lock(mu_);
  return choices_;
}

std::size_t ChoiceStore::choices_by(std::string_view evaluator_id) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(choices_.begin(), choices_.end(), [&](const auto& c) { return c.evaluator_id == evaluator_id; }));
}

bool ChoiceStore::has_choice(std::string_view pair_id, std::string_view evaluator_id) const {
  std::lock_guard lock(mu_);
  return seen_.count({std::string(pair_id), std::string(evaluator_id)}) != 0;
}

std::size_t ChoiceStore::evaluator_count() const {
  std::lock_guard lock(mu_);
  std::set<std::string_view> ids;
  for (const auto& c : choices_) ids.insert(c.evaluator_id);
  return ids.size();
}

std::map<std::string, double> aggregate_scores(std::span<const ChoiceRecord> choices, int evaluators,
                                               const std::vector<std::string>& systems) {
  if (evaluators < 1) throw Error(ErrorCode::kInvalidArgument, "evaluators must be >= 1");
  std::map<std::string, std::size_t> totals;
  for (const auto& s : systems) totals[s] = 0;
  for (const auto& c : choices) ++totals[c.chosen_system];
  std::map<std::string, double> out;
  for (const auto& [system, n] : totals) out[system] = static_cast<double>(n) / evaluators;
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace chartpot
