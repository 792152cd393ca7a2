#include <gtest/gtest.h>

#include <json.hpp>

#include <sstream>

#include "chartpot/error.hpp"
#include "chartpot/metrics.hpp"
#include "chartpot/mock_model.hpp"
#include "test_support.hpp"

using namespace chartpot;
using chartpot::testing::data_path;
using chartpot::testing::read_file;
using json = nlohmann::json;

namespace {

std::vector<ScoredPair> load_pairs(const std::string& name) {
  std::vector<ScoredPair> out;
  std::istringstream in(read_file(data_path("metrics/" + name)));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    out.push_back({j["candidate"], j["references"].get<std::vector<std::string>>()});
  }
  return out;
}

class GoldenCorpus : public ::testing::TestWithParam<std::string> {};

class FixedTransport final : public Transport {
 public:
  explicit FixedTransport(HttpResponse r) : response_(std::move(r)) {}
  HttpResponse post(const HttpRequest& request) override {
    last = request;
    return response_;
  }
  HttpRequest last;

 private:
  HttpResponse response_;
};

}  // namespace

TEST_P(GoldenCorpus, MatchesReferenceScorers) {
  const auto pairs = load_pairs(GetParam() + ".jsonl");
  const json golden = json::parse(read_file(data_path("metrics/" + GetParam() + ".golden.json")));
  EXPECT_NEAR(corpus_bleu(pairs), golden["bleu"].get<double>(), 1e-4);
  EXPECT_NEAR(cider(pairs), golden["cider"].get<double>(), 1e-4);
  ASSERT_EQ(golden["rouge"].size(), pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const RougeScores r = rouge_scores(pairs[k]);
    EXPECT_NEAR(r.rouge1_f1, golden["rouge"][k]["rouge1_f1"].get<double>(), 1e-4) << k;
    EXPECT_NEAR(r.rougeL_f1, golden["rouge"][k]["rougeL_f1"].get<double>(), 1e-4) << k;
    EXPECT_EQ(tokenize(pairs[k].candidate), golden["tokens"][k].get<std::vector<std::string>>()) << k;
  }
  const MetricReport report = score_corpus(pairs);
  EXPECT_EQ(report.n, pairs.size());
  EXPECT_TRUE(report.cider_defined);
  EXPECT_NEAR(report.rouge1_f1, golden["rouge1_mean"].get<double>(), 1e-4);
  EXPECT_NEAR(report.rougeL_f1, golden["rougeL_mean"].get<double>(), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Metrics, GoldenCorpus, ::testing::Values("golden20", "golden5"));

TEST(Metrics, Tokenizer) {
  EXPECT_EQ(tokenize("Hello, world!"), (std::vector<std::string>{"hello", ",", "world", "!"}));
  EXPECT_EQ(tokenize("It cost $1,250.50 in 2021."),
            (std::vector<std::string>{"it", "cost", "$", "1,250.50", "in", "2021", "."}));
  EXPECT_EQ(tokenize("A&amp;B"), (std::vector<std::string>{"a", "&", "b"}));
  EXPECT_TRUE(tokenize("   ").empty());
}

TEST(Metrics, Identities) {
  const std::vector<ScoredPair> same{{"the share rose to 52 percent", {"the share rose to 52 percent"}},
                                     {"democrats lag far behind", {"democrats lag far behind"}}};
  EXPECT_NEAR(corpus_bleu(same), 100.0, 1e-9);
  EXPECT_NEAR(cider(same), 10.0, 1e-9);
  for (const auto& p : same) {
    EXPECT_NEAR(rouge_scores(p).rouge1_f1, 1.0, 1e-9);
    EXPECT_NEAR(rouge_scores(p).rougeL_f1, 1.0, 1e-9);
  }
  const std::vector<ScoredPair> disjoint{{"alpha beta gamma delta", {"one two three four"}},
                                         {"epsilon zeta eta theta", {"five six seven eight"}}};
  EXPECT_NEAR(corpus_bleu(disjoint), 0.0, 1e-9);
  EXPECT_NEAR(cider(disjoint), 0.0, 1e-9);
  EXPECT_NEAR(rouge_scores(disjoint[0]).rouge1_f1, 0.0, 1e-9);
}

TEST(Metrics, RougeBestReference) {
  const RougeScores r = rouge_scores({"a x c", {"q r s", "a b c"}});
  EXPECT_NEAR(r.rouge1_f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.rougeL_f1, 2.0 / 3.0, 1e-12);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(corpus_bleu({}), Error);
  const std::vector<ScoredPair> one{{"a", {"a"}}};
  try {
    cider(one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorpusTooSmall);
  }
  const MetricReport single = score_corpus(one);
  EXPECT_FALSE(single.cider_defined);
  EXPECT_EQ(single.n, 1u);
  EXPECT_EQ(score_corpus({}).n, 0u);
}

TEST(ExternalScore, PostsBatchAndParsesScores) {
  FixedTransport transport({200, R"({"scores": [0.5, 0.25]})"});
  ModelEndpoint e;
  e.base_url = "http://scorer.invalid/v1";
  e.model_id = "scorer";
  e.api_key_env.clear();
  const std::vector<ScoredPair> batch{{"a", {"b"}}, {"c", {"d", "e"}}};
  const auto scores = external_score(batch, e, "bertscore", transport);
  EXPECT_EQ(scores, (std::vector<double>{0.5, 0.25}));
  EXPECT_EQ(transport.last.url, "http://scorer.invalid/v1/score");
  const json body = json::parse(transport.last.body);
  EXPECT_EQ(body["scorer"], "bertscore");
  EXPECT_EQ(body["pairs"].size(), 2u);
  EXPECT_TRUE(external_score({}, e, "bertscore", transport).empty());
}

TEST(ExternalScore, ShapeAndStatusErrors) {
  ModelEndpoint e;
  e.base_url = "http://scorer.invalid/v1";
  e.model_id = "scorer";
  e.api_key_env.clear();
  const std::vector<ScoredPair> batch{{"a", {"b"}}};
  FixedTransport wrong_count({200, R"({"scores": [0.5, 0.25]})"});
  try {
    external_score(batch, e, "s", wrong_count);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kShapeMismatch);
  }
  FixedTransport down({503, "busy"});
  try {
    external_score(batch, e, "s", down);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kTransport);
  }
}
