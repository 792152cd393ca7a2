// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria. Set CHARTPOT_PEW_MANIFEST to also check the full Pew
// manifest counts.

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "chartpot/harness.hpp"
#include "chartpot/humaneval.hpp"
#include "chartpot/interpreter.hpp"
#include "chartpot/manifest.hpp"
#include "chartpot/metrics.hpp"
#include "chartpot/mock_model.hpp"
#include "chartpot/prompts.hpp"
#include "chartpot/run_io.hpp"
#include "chartpot/template_stats.hpp"
#include "test_support.hpp"

using namespace chartpot;
namespace t = chartpot::testing;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) {
      pass = false;
      detail = why;
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<ScoredPair> load_pairs(const std::string& name) {
  std::vector<ScoredPair> out;
  std::istringstream in(t::read_file(t::data_path("metrics/" + name)));
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    out.push_back({j["candidate"], j["references"].get<std::vector<std::string>>()});
  }
  return out;
}

Verdict metric_oracle() {
  Verdict v;
  const auto start = Clock::now();
  const auto pairs = load_pairs("golden20.jsonl");
  const json golden = json::parse(t::read_file(t::data_path("metrics/golden20.golden.json")));
  v.require(pairs.size() == 20, "golden corpus does not have 20 pairs");
  const double bleu = corpus_bleu(pairs);
  const double cid = cider(pairs);
  double worst = std::max(std::fabs(bleu - golden["bleu"].get<double>()), std::fabs(cid - golden["cider"].get<double>()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const RougeScores r = rouge_scores(pairs[k]);
    worst = std::max(worst, std::fabs(r.rouge1_f1 - golden["rouge"][k]["rouge1_f1"].get<double>()));
    worst = std::max(worst, std::fabs(r.rougeL_f1 - golden["rouge"][k]["rougeL_f1"].get<double>()));
  }
  const double secs = seconds_since(start);
  v.require(worst <= 1e-4, "max deviation " + std::to_string(worst));
  v.require(secs < 5.0, "took " + fixed(secs, 2) + " s");
  if (v.pass) {
    v.detail = "BLEU " + fixed(bleu) + ", CIDEr " + fixed(cid) + ", max |diff| " + fixed(worst, 12) + " in " +
               fixed(secs, 3) + " s";
  }
  return v;
}

Verdict metric_identities() {
  Verdict v;
  const std::vector<ScoredPair> same{{"support for the policy rose to 52 percent", {"support for the policy rose to 52 percent"}},
                                     {"democrats lag far behind republicans", {"democrats lag far behind republicans"}},
                                     {"sales peaked in march", {"sales peaked in march"}}};
  const std::vector<ScoredPair> disjoint{{"alpha beta gamma delta", {"one two three four"}},
                                         {"epsilon zeta eta theta", {"five six seven eight"}},
                                         {"iota kappa lambda mu", {"nine ten eleven twelve"}}};
  const double tol = 1e-9;
  v.require(std::fabs(corpus_bleu(same) - 100.0) <= tol, "identical BLEU " + fixed(corpus_bleu(same), 12));
  v.require(std::fabs(cider(same) - 10.0) <= tol, "identical CIDEr " + fixed(cider(same), 12));
  v.require(std::fabs(corpus_bleu(disjoint)) <= tol, "disjoint BLEU " + fixed(corpus_bleu(disjoint), 12));
  v.require(std::fabs(cider(disjoint)) <= tol, "disjoint CIDEr " + fixed(cider(disjoint), 12));
  for (const auto& p : same) {
    const RougeScores r = rouge_scores(p);
    v.require(std::fabs(r.rouge1_f1 - 1.0) <= tol && std::fabs(r.rougeL_f1 - 1.0) <= tol, "identical ROUGE below 1");
  }
  for (const auto& p : disjoint) {
    const RougeScores r = rouge_scores(p);
    v.require(std::fabs(r.rouge1_f1) <= tol && std::fabs(r.rougeL_f1) <= tol, "disjoint ROUGE above 0");
  }
  if (v.pass) v.detail = "identical 100 / 10 / 1, disjoint 0 / 0 / 0 (tol 1e-9)";
  return v;
}

Verdict template_differential() {
  Verdict v;
  const auto start = Clock::now();
  const ProgramParse program = parse_program(kCanonicalTemplateSource);
  v.require(program.ok(), "canonical template program does not parse");
  if (!v.pass) return v;
  std::mt19937_64 rng(1393);
  int trees = 0;
  int records = 0;
  for (; trees < 64; ++trees) {
    const ValueTree tree = t::random_chart_tree(rng);
    const StatsMap native = template_statistics(tree);
    const ExecOutcome sandbox = execute(*program.ast, tree);
    records += static_cast<int>(native.size());
    const bool agree = sandbox.ok() ? *sandbox.stats == native : false;
    v.require(agree, "mismatch on " + to_python_literal(tree) +
                         (sandbox.failure ? " (" + sandbox.failure->message + ")" : std::string()));
  }
  const double secs = seconds_since(start);
  v.require(secs < 10.0, "took " + fixed(secs, 2) + " s");
  if (v.pass) {
    v.detail = std::to_string(trees) + " seeded trees, " + std::to_string(records) + " groups, field-for-field equal in " +
               fixed(secs, 3) + " s";
  }
  return v;
}

Verdict sandbox_safety() {
  Verdict v;
  const auto corpus = t::forbidden_programs();
  v.require(corpus.size() == 30, "forbidden corpus has " + std::to_string(corpus.size()) + " programs");
  for (const auto& p : corpus) {
    const ExecOutcome out = run_program_source(p.source, ValueTree::mapping());
    v.require(!out.ok() && out.failure->stage == FailureStage::kCodeParse && out.steps_used == 0,
              "not rejected before execution: " + p.label);
  }
  const SandboxLimits limits;
  const ExecOutcome spin =
      run_program_source("def get_summary_statistics(chart_dict):\n    while True: pass\n", ValueTree::mapping(), limits);
  v.require(!spin.ok() && spin.failure->category == FailureCategory::kBudgetExceeded,
            "while True did not end in BudgetExceeded" + (spin.failure ? ": " + spin.failure->message : std::string()));
  v.require(spin.steps_used == limits.max_steps,
            "steps_used " + std::to_string(spin.steps_used) + " != " + std::to_string(limits.max_steps));
  if (v.pass) {
    v.detail = "30/30 rejected at parse or policy; while True stopped at " + std::to_string(spin.steps_used) + " steps";
  }
  return v;
}

Verdict failure_taxonomy() {
  Verdict v;
  int matched = 0;
  bool never_closed = false;
  bool unterminated = false;
  for (const auto& c : t::taxonomy_cases()) {
    const auto f = t::classify(c);
    const bool ok = f && f->stage == c.stage && f->category == c.category && f->message == c.message;
    v.require(ok, c.label + ": got " +
                      (f ? std::string(to_string(f->stage)) + "/" + std::string(to_string(f->category)) + " '" +
                               f->message + "'"
                         : std::string("no failure")));
    if (!ok) continue;
    ++matched;
    never_closed = never_closed || f->message.find("was never closed") != std::string::npos;
    unterminated = unterminated || f->message.find("unterminated string literal") != std::string::npos;
  }
  v.require(never_closed, "no message contains \"was never closed\"");
  v.require(unterminated, "no message contains \"unterminated string literal\"");
  if (v.pass) v.detail = std::to_string(matched) + " failure sources classified with exact messages";
  return v;
}

std::string e2e_pass(const std::filesystem::path& out, std::size_t& records, std::vector<std::string>& bodies) {
  auto model = ScriptedModel::load(t::data_path("e2e/mock_script.json"));
  MockModelServer server(model);
  server.start(0);
  auto client = std::make_shared<LlmClient>(make_http_transport(), BackoffPolicy{}, [](std::chrono::milliseconds) {});
  const auto charts = load_manifest(t::data_path("e2e/manifest.jsonl"));
  for (const auto& m : t::e2e_matrix()) {
    run_batch(charts, t::e2e_config(server.base_url(), m.strategy, m.composition), out, client);
  }
  server.stop();
  bodies = model->request_bodies();
  records = read_runs(out).size();
  return t::read_file(out);
}

Verdict end_to_end(std::vector<std::string>& bodies) {
  Verdict v;
  const auto start = Clock::now();
  t::TempDir dir("acceptance-e2e");
  std::size_t first_records = 0;
  std::size_t second_records = 0;
  std::vector<std::string> ignored;
  const std::string a = e2e_pass(dir / "first.jsonl", first_records, bodies);
  const std::string b = e2e_pass(dir / "second.jsonl", second_records, ignored);
  const double secs = seconds_since(start);
  v.require(a == b, "run files differ");
  v.require(first_records >= 20, "only " + std::to_string(first_records) + " records");
  std::set<Strategy> strategies;
  std::set<InputComposition> compositions;
  for (const auto& r : read_runs(dir / "first.jsonl")) {
    strategies.insert(r.strategy);
    if (r.strategy == Strategy::kPoT || r.strategy == Strategy::kPoTTemplate) compositions.insert(r.input_composition);
  }
  v.require(strategies.size() == 4, "strategies exercised: " + std::to_string(strategies.size()));
  v.require(compositions.size() == 5, "compositions exercised: " + std::to_string(compositions.size()));
  v.require(secs < 30.0, "took " + fixed(secs, 2) + " s");
  if (v.pass) {
    v.detail = std::to_string(first_records) + " records x 2 runs byte-identical (" + std::to_string(a.size()) +
               " bytes), 4 strategies, 5 compositions, " + fixed(secs, 2) + " s";
  }
  return v;
}

Verdict prompt_fidelity(const std::vector<std::string>& bodies) {
  Verdict v;
  PromptSet p = PromptSet::defaults();
  int files = 0;
  for (const char* name : {"dict_gen", "dict_prefill", "dict_repair", "pot_system", "pot_user", "pot_prefill",
                           "summary_user", "summary_prefill"}) {
    const std::string golden = t::read_file(t::data_path(std::string("prompts/") + name + ".txt"));
    v.require(*prompt_field(p, name) == golden, std::string(name) + " differs from its golden transcription");
    ++files;
  }
  v.require(!bodies.empty(), "no rendered requests captured");
  for (const auto& body : bodies) {
    const json j = json::parse(body);
    v.require(j["temperature"].get<double>() == 0.2 && j["repetition_penalty"].get<double>() == 1.2,
              "request with temperature " + j["temperature"].dump() + ", repetition_penalty " +
                  j["repetition_penalty"].dump());
  }
  if (v.pass) {
    v.detail = std::to_string(files) + " prompts byte-equal; " + std::to_string(bodies.size()) +
               " rendered requests carry temperature 0.2, repetition_penalty 1.2";
  }
  return v;
}

Verdict score_identity() {
  Verdict v;
  struct Row {
    int a_selected, b_selected;
    double a_score, b_score;
  };
  const Row rows[] = {{56, 94, 18.67, 31.33}, {57, 93, 19.00, 31.00}, {68, 82, 22.67, 27.33}};
  const int evaluators = 3;
  std::string shown;
  for (const Row& row : rows) {
    std::vector<PreferencePair> pairs;
    for (int k = 1; k <= 50; ++k) {
      char id[16];
      std::snprintf(id, sizeof id, "pair-%03d", k);
      pairs.push_back({id, "c" + std::to_string(k), "", "A", "a", "B", "b", static_cast<std::uint64_t>(k)});
    }
    ChoiceStore store(pairs);
    int a_left = row.a_selected;
    for (int ev = 0; ev < evaluators; ++ev) {
      for (const auto& pair : pairs) {
        store.record_choice({pair.pair_id, "ev" + std::to_string(ev), a_left-- > 0 ? "A" : "B", ""});
      }
    }
    const auto all = store.choices();
    const auto scores = aggregate_scores(all, evaluators, {"A", "B"});
    const double a = scores.at("A");
    const double b = scores.at("B");
    v.require(std::fabs(a - row.a_score) < 0.005 && std::fabs(b - row.b_score) < 0.005,
              "scores " + fixed(a, 2) + "/" + fixed(b, 2) + " for " + std::to_string(row.a_selected) + "/" +
                  std::to_string(row.b_selected));
    v.require(std::fabs(a + b - 50.0) <= 0.01, "pair sums to " + fixed(a + b, 4));
    shown += (shown.empty() ? "" : ", ") + fixed(a, 2) + "/" + fixed(b, 2);
  }
  if (v.pass) v.detail = shown + " (3 evaluators x 50 pairs, sums 50.00)";
  return v;
}

bool additive(const TypeCounts& c) {
  std::size_t sum = 0;
  for (std::size_t n : c.by_type) sum += n;
  return sum == c.total;
}

Verdict manifest_counting() {
  Verdict v;
  for (const char* name : {"manifests/fixture3.jsonl", "e2e/manifest.jsonl"}) {
    const auto charts = load_manifest(t::data_path(name));
    const TypeCounts c = count_by_type(charts);
    v.require(additive(c) && c.total == charts.size(), std::string(name) + " counts are not additive");
  }
  // A synthetic manifest with the Pew per-type distribution.
  const std::pair<ChartType, std::size_t> table[] = {
      {ChartType::kBar, 968}, {ChartType::kLine, 349}, {ChartType::kPie, 41}, {ChartType::kArea, 20}, {ChartType::kScatter, 15}};
  std::vector<ChartRecord> synthetic;
  for (const auto& [type, n] : table) {
    for (std::size_t k = 0; k < n; ++k) {
      ChartRecord c;
      c.id = std::string(to_string(type)) + "-" + std::to_string(k);
      c.chart_type = type;
      c.dataset = Dataset::kPew;
      synthetic.push_back(c);
    }
  }
  t::TempDir dir("acceptance-manifest");
  {
    std::ofstream out(dir / "pew_synthetic.jsonl");
    write_manifest(out, synthetic);
  }
  const TypeCounts s = count_by_type(load_manifest(dir / "pew_synthetic.jsonl"));
  v.require(additive(s) && s.total == 1393, "synthetic total " + std::to_string(s.total));
  for (const auto& [type, n] : table) v.require(s[type] == n, std::string(to_string(type)) + " count mismatch");

  std::string real = "real Pew manifest not supplied (set CHARTPOT_PEW_MANIFEST)";
  if (const char* path = std::getenv("CHARTPOT_PEW_MANIFEST"); path != nullptr && *path != '\0') {
    const TypeCounts r = count_by_type(load_manifest(path));
    v.require(additive(r), "real manifest counts are not additive");
    v.require(r.total == 1393, "real manifest total " + std::to_string(r.total) + " != 1393");
    for (const auto& [type, n] : table) {
      v.require(r[type] == n, std::string(to_string(type)) + " has " + std::to_string(r[type]) + ", want " +
                                  std::to_string(n));
    }
    real = "real Pew manifest totals match";
  }
  if (v.pass) v.detail = "fixtures additive; 1393-chart distribution round-trips; " + real;
  return v;
}

}  // namespace

int main() {
  int failed = 0;
  std::vector<std::string> bodies;
  auto report = [&](int number, const char* name, const std::function<Verdict()>& check) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s [%d] %s: %s\n", v.pass ? "PASS" : "FAIL", number, name, v.detail.c_str());
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  };
  report(1, "metric oracle equivalence", metric_oracle);
  report(2, "metric trivial identities", metric_identities);
  report(3, "interpreter-template differential", template_differential);
  report(4, "sandbox safety", sandbox_safety);
  report(5, "failure taxonomy fidelity", failure_taxonomy);
  report(6, "end-to-end determinism", [&] { return end_to_end(bodies); });
  report(7, "prompt fidelity", [&] { return prompt_fidelity(bodies); });
  report(8, "human-evaluation score identity", score_identity);
  report(9, "manifest counting", manifest_counting);
  return failed;
}
