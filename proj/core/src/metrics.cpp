#include "chartpot/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <unordered_map>

#include "chartpot/error.hpp"

namespace chartpot {

namespace {

using Ngram = std::vector<std::string>;
using NgramCounts = std::map<Ngram, std::size_t>;

constexpr int kMaxOrder = 4;

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Python's str.split() whitespace in the ASCII range.
bool is_split_space(char c) { return c == ' ' || (c >= '\t' && c <= '\r') || (c >= '\x1c' && c <= '\x1f'); }

bool is_symbol(char c) {
  return (c >= '{' && c <= '~') || (c >= '[' && c <= '`') || (c >= ' ' && c <= '&') || (c >= '(' && c <= '+') ||
         (c >= ':' && c <= '@') || c == '/';
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto at = s.find(from); at != std::string::npos; at = s.find(from, at + to.size())) {
    s.replace(at, from.size(), to);
  }
}

NgramCounts ngrams(const std::vector<std::string>& tokens, int n) {
  NgramCounts out;
  if (tokens.size() < static_cast<std::size_t>(n)) return out;
  for (std::size_t k = 0; k + n <= tokens.size(); ++k) {
    ++out[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(k), tokens.begin() + static_cast<std::ptrdiff_t>(k + n))];
  }
  return out;
}

double f1(double overlap, std::size_t cand_len, std::size_t ref_len) {
  if (cand_len == 0 || ref_len == 0) return 0.0;
  const double p = overlap / static_cast<double>(cand_len);
  const double r = overlap / static_cast<double>(ref_len);
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (const auto& x : a) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = x == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

void require_refs(const ScoredPair& p) {
  if (p.references.empty()) throw Error(ErrorCode::kInvalidArgument, "scored pair has no references");
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::string line(text);
  for (char& c : line) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  replace_all(line, "<skipped>", "");
  replace_all(line, "-\n", "");
  std::replace(line.begin(), line.end(), '\n', ' ');
  if (line.find('&') != std::string::npos) {
    replace_all(line, "&quot;", "\"");
    replace_all(line, "&amp;", "&");
    replace_all(line, "&lt;", "<");
    replace_all(line, "&gt;", ">");
  }
  line = " " + line + " ";

  std::string a;
  for (char c : line) {
    if (is_symbol(c)) {
      a += ' ';
      a += c;
      a += ' ';
    } else {
      a += c;
    }
  }
  // Each remaining pass mirrors one non-overlapping left-to-right regex
  // substitution.
  auto pass = [](const std::string& s, auto&& match, auto&& emit) {
    std::string out;
    std::size_t k = 0;
    while (k < s.size()) {
      if (k + 1 < s.size() && match(s[k], s[k + 1])) {
        emit(out, s[k], s[k + 1]);
        k += 2;
      } else {
        out += s[k++];
      }
    }
    return out;
  };
  auto is_pc = [](char c) { return c == '.' || c == ','; };
  std::string b = pass(
      a, [&](char x, char y) { return !is_digit(x) && is_pc(y); },
      [](std::string& o, char x, char y) { o += x, o += ' ', o += y, o += ' '; });
  std::string c = pass(
      b, [&](char x, char y) { return is_pc(x) && !is_digit(y); },
      [](std::string& o, char x, char y) { o += ' ', o += x, o += ' ', o += y; });
  std::string d = pass(
      c, [](char x, char y) { return is_digit(x) && y == '-'; },
      [](std::string& o, char x, char y) { o += x, o += ' ', o += y, o += ' '; });

  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : d) {
    if (is_split_space(ch)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

double corpus_bleu(std::span<const ScoredPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyCorpus, "BLEU needs at least one pair");
  std::array<double, kMaxOrder> correct{};
  std::array<double, kMaxOrder> total{};
  double sys_len = 0.0;
  double ref_len = 0.0;
  for (const auto& p : pairs) {
    require_refs(p);
    const auto hyp = tokenize(p.candidate);
    std::vector<std::vector<std::string>> refs;
    for (const auto& r : p.references) refs.push_back(tokenize(r));

    // Closest reference length; ties go to the shorter one.
    std::ptrdiff_t best_diff = -1;
    std::size_t best_len = 0;
    for (const auto& r : refs) {
      const auto diff = std::abs(static_cast<std::ptrdiff_t>(hyp.size()) - static_cast<std::ptrdiff_t>(r.size()));
      if (best_diff == -1 || diff < best_diff || (diff == best_diff && r.size() < best_len)) {
        best_diff = diff;
        best_len = r.size();
      }
    }
    sys_len += static_cast<double>(hyp.size());
    ref_len += static_cast<double>(best_len);

    for (int n = 1; n <= kMaxOrder; ++n) {
      const NgramCounts h = ngrams(hyp, n);
      NgramCounts max_ref;
      for (const auto& r : refs) {
        for (const auto& [g, cnt] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], cnt);
      }
      for (const auto& [g, cnt] : h) {
        auto it = max_ref.find(g);
        if (it != max_ref.end()) correct[n - 1] += static_cast<double>(std::min(cnt, it->second));
      }
      if (hyp.size() >= static_cast<std::size_t>(n)) total[n - 1] += static_cast<double>(hyp.size() - n + 1);
    }
  }

  double bp = 1.0;
  if (sys_len < ref_len) bp = sys_len > 0.0 ? std::exp(1.0 - ref_len / sys_len) : 0.0;
  if (std::all_of(correct.begin(), correct.end(), [](double c) { return c == 0.0; })) return 0.0;

  std::array<double, kMaxOrder> precisions{};
  double smooth = 1.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (total[n] == 0.0) break;
    if (correct[n] == 0.0) {
      smooth *= 2.0;
      precisions[n] = 100.0 / (smooth * total[n]);
    } else {
      precisions[n] = 100.0 * correct[n] / total[n];
    }
  }
  double log_sum = 0.0;
  for (double p : precisions) log_sum += p > 0.0 ? std::log(p) : -9999999999.0;
  return bp * std::exp(log_sum / kMaxOrder);
}

RougeScores rouge_scores(const ScoredPair& pair) {
  require_refs(pair);
  const auto cand = tokenize(pair.candidate);
  const NgramCounts cand_uni = ngrams(cand, 1);
  RougeScores best;
  for (const auto& r : pair.references) {
    const auto ref = tokenize(r);
    const NgramCounts ref_uni = ngrams(ref, 1);
    double overlap = 0.0;
    for (const auto& [g, cnt] : cand_uni) {
      if (auto it = ref_uni.find(g); it != ref_uni.end()) overlap += static_cast<double>(std::min(cnt, it->second));
    }
    best.rouge1_f1 = std::max(best.rouge1_f1, f1(overlap, cand.size(), ref.size()));
    best.rougeL_f1 =
        std::max(best.rougeL_f1, f1(static_cast<double>(lcs_length(cand, ref)), cand.size(), ref.size()));
  }
  return best;
}

double cider(std::span<const ScoredPair> pairs) {
  if (pairs.size() < 2) throw Error(ErrorCode::kCorpusTooSmall, "CIDEr needs at least two pairs");
  struct Doc {
    std::array<NgramCounts, kMaxOrder> cand;
    std::vector<std::array<NgramCounts, kMaxOrder>> refs;
  };
  std::vector<Doc> docs;
  std::map<Ngram, double> df;
  for (const auto& p : pairs) {
    require_refs(p);
    Doc d;
    const auto cand = tokenize(p.candidate);
    for (int n = 1; n <= kMaxOrder; ++n) d.cand[n - 1] = ngrams(cand, n);
    std::set<Ngram> seen;
    for (const auto& r : p.references) {
      const auto ref = tokenize(r);
      std::array<NgramCounts, kMaxOrder> counts;
      for (int n = 1; n <= kMaxOrder; ++n) {
        counts[n - 1] = ngrams(ref, n);
        for (const auto& [g, cnt] : counts[n - 1]) seen.insert(g);
      }
      d.refs.push_back(std::move(counts));
    }
    for (const auto& g : seen) df[g] += 1.0;
    docs.push_back(std::move(d));
  }

  const double log_n = std::log(static_cast<double>(pairs.size()));
  auto weight = [&](const Ngram& g) {
    auto it = df.find(g);
    return log_n - std::log(std::max(1.0, it == df.end() ? 0.0 : it->second));
  };
  auto cosine = [&](const NgramCounts& a, const NgramCounts& b) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [g, cnt] : a) {
      const double va = static_cast<double>(cnt) * weight(g);
      na += va * va;
      if (auto it = b.find(g); it != b.end()) dot += va * static_cast<double>(it->second) * weight(g);
    }
    for (const auto& [g, cnt] : b) {
      const double vb = static_cast<double>(cnt) * weight(g);
      nb += vb * vb;
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
  };

  double sum = 0.0;
  for (const auto& d : docs) {
    double score = 0.0;
    for (int n = 0; n < kMaxOrder; ++n) {
      double s = 0.0;
      for (const auto& r : d.refs) s += cosine(d.cand[n], r[n]);
      score += s / static_cast<double>(d.refs.size());
    }
    sum += score / kMaxOrder;
  }
  return 10.0 * sum / static_cast<double>(docs.size());
}

MetricReport score_corpus(std::span<const ScoredPair> pairs) {
  MetricReport r;
  r.n = pairs.size();
  if (pairs.empty()) return r;
  r.bleu = corpus_bleu(pairs);
  if (pairs.size() >= 2) {
    r.cider = cider(pairs);
    r.cider_defined = true;
  }
  for (const auto& p : pairs) {
    const RougeScores s = rouge_scores(p);
    r.rouge1_f1 += s.rouge1_f1;
    r.rougeL_f1 += s.rougeL_f1;
  }
  r.rouge1_f1 /= static_cast<double>(pairs.size());
  r.rougeL_f1 /= static_cast<double>(pairs.size());
  return r;
}

std::vector<double> external_score(std::span<const ScoredPair> batch, const ModelEndpoint& endpoint,
                                   std::string_view scorer_id, Transport& transport) {
  if (batch.empty()) return {};
  using json = nlohmann::ordered_json;
  json pairs = json::array();
  for (const auto& p : batch) pairs.push_back({{"candidate", p.candidate}, {"references", p.references}});
  HttpRequest req;
  std::string url = endpoint.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  req.url = url + "/score";
  req.timeout_ms = endpoint.request_timeout_ms;
  req.headers.emplace_back("Content-Type", "application/json");
  if (!endpoint.api_key_env.empty()) {
    const char* key = std::getenv(endpoint.api_key_env.c_str());
    if (key == nullptr || *key == '\0') throw Error(ErrorCode::kAuthMissing, endpoint.api_key_env);
    req.headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  req.body = json{{"scorer", scorer_id}, {"pairs", std::move(pairs)}}.dump();
  const HttpResponse resp = transport.post(req);
  if (resp.status < 200 || resp.status >= 300) {
    throw Error(ErrorCode::kTransport, "HTTP " + std::to_string(resp.status) + " from " + req.url);
  }
  const json doc = json::parse(resp.body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("scores") || !doc["scores"].is_array()) {
    throw Error(ErrorCode::kShapeMismatch, "scorer response has no scores list");
  }
  std::vector<double> out;
  for (const auto& v : doc["scores"]) {
    if (!v.is_number()) throw Error(ErrorCode::kShapeMismatch, "scorer returned a non-number");
    out.push_back(v.get<double>());
  }
  if (out.size() != batch.size()) {
    throw Error(ErrorCode::kShapeMismatch, "scorer returned " + std::to_string(out.size()) + " scores for " +
                                               std::to_string(batch.size()) + " pairs");
  }
  return out;
}

}  // namespace chartpot
