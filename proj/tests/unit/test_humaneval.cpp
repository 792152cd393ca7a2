#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include <map>

#include "chartpot/error.hpp"
#include "chartpot/humaneval.hpp"
#include "chartpot/humaneval_server.hpp"
#include "test_support.hpp"

using namespace chartpot;
namespace t = chartpot::testing;
using json = nlohmann::json;

namespace {

std::vector<ChartRecord> manifest(std::size_t per_type) {
  std::vector<ChartRecord> out;
  for (ChartType type : kAllChartTypes) {
    for (std::size_t k = 0; k < per_type; ++k) {
      ChartRecord c;
      c.id = std::string(to_string(type)) + std::to_string(k);
      c.chart_type = type;
      c.image_path = c.id + ".png";
      c.title = c.id;
      out.push_back(c);
    }
  }
  return out;
}

SystemRuns system(const std::string& label, const std::vector<ChartRecord>& charts, const std::string& voice = "") {
  SystemRuns s{label, {}};
  for (const auto& c : charts) {
    RunRecord r;
    r.chart_id = c.id;
    r.summary = (voice.empty() ? label : voice) + " summary of " + c.id;
    s.runs.push_back(r);
  }
  return s;
}

std::vector<ChoiceRecord> choices(const std::string& a, int a_count, const std::string& b, int b_count,
                                  int evaluators) {
  std::vector<ChoiceRecord> out;
  int pair = 0;
  for (int k = 0; k < a_count + b_count; ++k) {
    out.push_back({"pair-" + std::to_string(pair), "ev" + std::to_string(k % evaluators), k < a_count ? a : b, ""});
    if (k % evaluators == evaluators - 1) ++pair;
  }
  return out;
}

}  // namespace

TEST(SamplePairs, BalancedAndDeterministic) {
  const auto charts = manifest(12);
  const SystemRuns a = system("pot", charts);
  const SystemRuns b = system("direct", charts);
  const PairSample s = sample_pairs(a, b, charts, 10, 42);
  ASSERT_EQ(s.pairs.size(), 50u);
  EXPECT_TRUE(s.warnings.empty());
  std::size_t a_left = 0;
  for (const auto& p : s.pairs) {
    a_left += p.left_system == "pot";
    EXPECT_EQ(first_system_left(p.presentation_seed), p.left_system == "pot");
    EXPECT_NE(p.left_system, p.right_system);
    EXPECT_EQ(p.left_text, p.left_system + " summary of " + p.chart_id);
  }
  EXPECT_EQ(a_left, 25u);
  EXPECT_EQ(s.pairs[0].pair_id, "pair-001");
  EXPECT_EQ(sample_pairs(a, b, charts, 10, 42).pairs, s.pairs);
  EXPECT_NE(sample_pairs(a, b, charts, 10, 43).pairs, s.pairs);
}

TEST(SamplePairs, WarnsWhenTypeIsShort) {
  const auto charts = manifest(3);
  const PairSample s = sample_pairs(system("a", charts), system("b", charts), charts, 5, 1);
  EXPECT_EQ(s.pairs.size(), 15u);
  ASSERT_EQ(s.warnings.size(), 5u);
  EXPECT_EQ(s.warnings[0], "InsufficientCharts(Area, have 3, want 5)");
}

TEST(AggregateScores, ReproducesReferenceTotals) {
  const auto scores = aggregate_scores(choices("pot", 56, "direct", 94, 3), 3);
  EXPECT_NEAR(scores.at("pot"), 18.67, 0.005);
  EXPECT_NEAR(scores.at("direct"), 31.33, 0.005);
  EXPECT_NEAR(scores.at("pot") + scores.at("direct"), 50.0, 0.01);
  EXPECT_THROW(aggregate_scores({}, 0), Error);
  const auto empty = aggregate_scores({}, 3, {"x", "y"});
  EXPECT_EQ(empty.at("x"), 0.0);
}

TEST(ChoiceStore, ValidatesAndPersists) {
  const auto charts = manifest(2);
  const PairSample s = sample_pairs(system("a", charts), system("b", charts), charts, 2, 5);
  t::TempDir dir("choices");
  const auto log = dir / "choices.jsonl";
  {
    ChoiceStore store(s.pairs, log);
    store.record_choice({"pair-001", "ev1", "a", utc_timestamp()});
    auto code = [&](const ChoiceRecord& c) {
      try {
        store.record_choice(c);
      } catch (const Error& e) {
        return e.code();
      }
      return ErrorCode::kInvalidArgument;
    };
    EXPECT_EQ(code({"pair-001", "ev1", "b", ""}), ErrorCode::kDuplicateChoice);
    EXPECT_EQ(code({"pair-999", "ev1", "a", ""}), ErrorCode::kUnknownPair);
    EXPECT_EQ(code({"pair-002", "ev1", "zzz", ""}), ErrorCode::kInvalidChoice);
  }
  ChoiceStore replayed(s.pairs, log);
  EXPECT_EQ(replayed.choices().size(), 1u);
  EXPECT_TRUE(replayed.has_choice("pair-001", "ev1"));
  EXPECT_EQ(replayed.evaluator_count(), 1u);
  const ChoiceRecord c{"pair-003", "ev2", "b", "2026-01-01T00:00:00Z"};
  EXPECT_EQ(decode_choice(encode_choice(c)), c);
}

TEST(HumanEvalServer, BlindedSessionFlow) {
  const auto charts = manifest(2);
  const PairSample s = sample_pairs(system("secret-pot", charts, "first"), system("secret-direct", charts, "second"), charts, 1, 9);
  t::TempDir dir("server");
  HumanEvalOptions opts;
  opts.pairs = s.pairs;
  opts.choice_log = dir / "choices.jsonl";
  opts.admin_token = "admin";
  opts.evaluators = 1;
  HumanEvalServer server(opts);
  const int port = server.start(0);
  httplib::Client http("127.0.0.1", port);

  auto session = http.Post("/session", R"({"evaluator_id": "ev1"})", "application/json");
  ASSERT_TRUE(session);
  ASSERT_EQ(session->status, 200);
  const json sj = json::parse(session->body);
  const std::string id = sj["session_id"];
  EXPECT_EQ(sj["total"], 5);

  std::map<std::string, int> picks;
  for (int k = 0; k < 5; ++k) {
    auto next = http.Get("/session/" + id + "/next");
    ASSERT_TRUE(next);
    ASSERT_EQ(next->status, 200);
    EXPECT_EQ(next->body.find("secret-"), std::string::npos) << next->body;
    const json nj = json::parse(next->body);
    ASSERT_FALSE(nj["complete"].get<bool>());
    EXPECT_EQ(nj["progress"]["done"], k);
    const std::string pair_id = nj["pair_id"];
    auto choice = http.Post("/session/" + id + "/choice", json{{"pair_id", pair_id}, {"side", "left"}}.dump(),
                            "application/json");
    ASSERT_TRUE(choice);
    EXPECT_EQ(choice->status, 200);
    auto dup = http.Post("/session/" + id + "/choice", json{{"pair_id", pair_id}, {"side", "right"}}.dump(),
                         "application/json");
    EXPECT_EQ(dup->status, 409);
    ++picks[server.store().find_pair(pair_id)->left_system];
  }
  auto done = http.Get("/session/" + id + "/next");
  EXPECT_TRUE(json::parse(done->body)["complete"].get<bool>());

  EXPECT_EQ(http.Get("/session/ffff/next")->status, 404);
  EXPECT_EQ(http.Post("/session/" + id + "/choice", R"({"pair_id": "pair-001", "side": "up"})", "application/json")->status,
            400);
  EXPECT_EQ(http.Get("/scores")->status, 401);
  auto scores = http.Get("/scores", httplib::Headers{{"Authorization", "Bearer admin"}});
  ASSERT_EQ(scores->status, 200);
  const json scj = json::parse(scores->body);
  for (const auto& [label, n] : picks) EXPECT_DOUBLE_EQ(scj["scores"][label].get<double>(), n);
  server.stop();
}
