#include <gtest/gtest.h>

#include <algorithm>

#include "chartpot/error.hpp"
#include "chartpot/manifest.hpp"
#include "chartpot/mock_model.hpp"
#include "chartpot/pipeline.hpp"
#include "test_support.hpp"

using namespace chartpot;
namespace t = chartpot::testing;

namespace {

struct Fixture {
  std::shared_ptr<ScriptedModel> model = ScriptedModel::load(t::data_path("e2e/mock_script.json"));
  std::shared_ptr<MockTransport> transport = std::make_shared<MockTransport>(model);
  std::shared_ptr<LlmClient> client =
      std::make_shared<LlmClient>(transport, BackoffPolicy{}, [](std::chrono::milliseconds) {});
  std::vector<ChartRecord> charts = load_manifest(t::data_path("e2e/manifest.jsonl"));

  const ChartRecord& chart(const std::string& id) const {
    return *std::find_if(charts.begin(), charts.end(), [&](const ChartRecord& c) { return c.id == id; });
  }

  RunRecord run(const std::string& id, Strategy s, InputComposition c, PipelineConfig* custom = nullptr) {
    PipelineConfig cfg = custom ? *custom : t::e2e_config("http://mock.invalid/v1", s, c);
    return Pipeline(cfg, client).run_chart(chart(id));
  }

  std::size_t requests_to(const std::string& model_id) const {
    std::size_t n = 0;
    for (const auto& r : transport->requests()) n += r.body.find("\"model\":\"" + model_id + "\"") != std::string::npos;
    return n;
  }
};

std::vector<std::string> stages(const RunRecord& r) {
  std::vector<std::string> out;
  for (const auto& s : r.stage_outputs) out.push_back(s.stage);
  return out;
}

bool has_note(const StageOutput& s, std::string_view note) {
  return std::find(s.notes.begin(), s.notes.end(), note) != s.notes.end();
}

using V = std::vector<std::string>;

}  // namespace

TEST(Pipeline, DirectIsOneImageCall) {
  Fixture f;
  const RunRecord r = f.run("bar01", Strategy::kDirect, InputComposition::kTitle);
  EXPECT_EQ(stages(r), V{"direct"});
  ASSERT_TRUE(r.summary.has_value());
  EXPECT_FALSE(r.failure.has_value());
  EXPECT_EQ(f.transport->requests().size(), 1u);
  EXPECT_NE(f.transport->requests()[0].body.find("image_url"), std::string::npos);
}

TEST(Pipeline, McotKeepsOnlyTheFinalSummary) {
  Fixture f;
  const RunRecord r = f.run("area01", Strategy::kMCoT, InputComposition::kTitle);
  EXPECT_EQ(stages(r), V{"mcot"});
  ASSERT_TRUE(r.summary.has_value());
  EXPECT_EQ(r.summary->rfind("The U.S. immigrant population", 0), 0u);
}

TEST(Pipeline, TitleOnlySkipsDictAndStats) {
  Fixture f;
  const RunRecord r = f.run("bar01", Strategy::kPoT, InputComposition::kTitle);
  EXPECT_EQ(stages(r), V{"summarize"});
  EXPECT_EQ(f.requests_to(t::kCoderModel), 0u);
  const std::string& prompt = r.stage_outputs[0].prompt;
  EXPECT_EQ(prompt.find("dictionary"), std::string::npos);
  EXPECT_EQ(prompt.find("summary_statistics"), std::string::npos);
}

TEST(Pipeline, DictTitleSkipsStats) {
  Fixture f;
  const RunRecord r = f.run("bar01", Strategy::kPoT, InputComposition::kDictTitle);
  EXPECT_EQ(stages(r), (V{"chart_to_dict", "summarize"}));
  EXPECT_EQ(f.requests_to(t::kCoderModel), 0u);
  EXPECT_NE(r.stage_outputs[1].prompt.find("'Rep': 45"), std::string::npos);
  EXPECT_EQ(r.stage_outputs[1].prompt.find("summary_statistics"), std::string::npos);
}

TEST(Pipeline, StatsTitleOmitsDictionaryFromSummary) {
  Fixture f;
  const RunRecord r = f.run("bar01", Strategy::kPoT, InputComposition::kStatsTitle);
  EXPECT_EQ(stages(r), (V{"chart_to_dict", "dict_to_stats", "summarize"}));
  const std::string& prompt = r.stage_outputs.back().prompt;
  EXPECT_NE(prompt.find("summary_statistics"), std::string::npos);
  EXPECT_EQ(prompt.find("'Dem': 38"), std::string::npos);
  EXPECT_EQ(r.stats_provenance, StatsProvenance::kPoT);
}

TEST(Pipeline, FullPotRun) {
  Fixture f;
  const RunRecord r = f.run("bar01", Strategy::kPoT, InputComposition::kDictStatsTitle);
  EXPECT_EQ(stages(r), (V{"chart_to_dict", "dict_to_stats", "summarize"}));
  EXPECT_FALSE(r.failure.has_value());
  EXPECT_EQ(r.stats_provenance, StatsProvenance::kPoT);
  const StageOutput& stats = r.stage_outputs[1];
  EXPECT_EQ(stats.model_id, t::kCoderModel);
  ASSERT_TRUE(stats.artifact.has_value());
  const ValueTree* y = stats.artifact->find("2019");
  ASSERT_NE(y, nullptr);
  EXPECT_EQ(*y->find("Average"), ValueTree::real(41.5));
  EXPECT_EQ(r.stage_outputs[0].raw_text.rfind("```python", 0), 0u);
  EXPECT_EQ(f.requests_to(t::kCoderModel), 1u);
  for (const auto& [stage, ms] : r.timings_ms) EXPECT_EQ(ms, 0) << stage;
}

TEST(Pipeline, CodeRetryAfterRuntimeFault) {
  Fixture f;
  const RunRecord r = f.run("area01", Strategy::kPoT, InputComposition::kDictStatsTitle);
  EXPECT_EQ(stages(r), (V{"chart_to_dict", "dict_to_stats", "dict_to_stats", "summarize"}));
  EXPECT_EQ(r.stage_outputs[1].status, StageStatus::kFailed);
  ASSERT_TRUE(r.stage_outputs[1].failure.has_value());
  EXPECT_EQ(r.stage_outputs[1].failure->category, FailureCategory::kTypeMismatch);
  EXPECT_EQ(r.stage_outputs[2].attempt, 2);
  EXPECT_EQ(r.stage_outputs[2].status, StageStatus::kOk);
  EXPECT_EQ(r.stats_provenance, StatsProvenance::kPoT);
  EXPECT_FALSE(r.failure.has_value());
}

TEST(Pipeline, CommentOnlyCodeFallsBackToTemplate) {
  Fixture f;
  const RunRecord r = f.run("pie01", Strategy::kPoT, InputComposition::kDictStatsTitle);
  EXPECT_EQ(stages(r), (V{"chart_to_dict", "dict_to_stats", "dict_to_stats", "template_stats", "summarize"}));
  EXPECT_EQ(r.stats_provenance, StatsProvenance::kTemplate);
  const StageOutput& tmpl = r.stage_outputs[3];
  EXPECT_EQ(tmpl.status, StageStatus::kFallback);
  EXPECT_TRUE(has_note(tmpl, kTemplateFallbackNote));
  ASSERT_TRUE(r.failure.has_value());
  EXPECT_EQ(r.failure->stage, FailureStage::kCodeGen);
  EXPECT_EQ(r.stage_outputs.back().status, StageStatus::kFallback);
  ASSERT_TRUE(r.summary.has_value());
}

TEST(Pipeline, RepairModelFixesTruncatedDictionary) {
  Fixture f;
  const RunRecord r = f.run("line01", Strategy::kPoT, InputComposition::kDictTitle);
  EXPECT_EQ(stages(r), (V{"chart_to_dict", "dict_repair", "summarize"}));
  EXPECT_EQ(r.stage_outputs[0].failure->category, FailureCategory::kTruncated);
  EXPECT_EQ(r.stage_outputs[1].model_id, t::kRepairModel);
  EXPECT_TRUE(has_note(r.stage_outputs[1], kRepairModelUsedNote));
  EXPECT_FALSE(r.failure.has_value());
  // The repair prompt quotes the first answer after the repair instruction.
  EXPECT_NE(r.stage_outputs[1].prompt.find(r.stage_outputs[0].raw_text), std::string::npos);
}

TEST(Pipeline, MissingRepairEndpointIsNoted) {
  Fixture f;
  PipelineConfig cfg = t::e2e_config("http://mock.invalid/v1", Strategy::kPoT, InputComposition::kDictTitle);
  cfg.repair_endpoint.reset();
  const RunRecord r = f.run("line01", cfg.strategy, cfg.composition, &cfg);
  ASSERT_TRUE(r.failure.has_value());
  EXPECT_EQ(r.failure->category, FailureCategory::kTruncated);
  EXPECT_TRUE(has_note(r.stage_outputs[0], kMissingRepairEndpointNote));
  EXPECT_EQ(f.requests_to(t::kRepairModel), 0u);
}

TEST(Pipeline, UnrepairableDictionaryFallsBackToTitle) {
  Fixture f;
  const RunRecord r = f.run("scatter01", Strategy::kPoT, InputComposition::kDictStatsTitle);
  EXPECT_EQ(stages(r), (V{"chart_to_dict", "dict_repair", "summarize"}));
  ASSERT_TRUE(r.failure.has_value());
  EXPECT_EQ(r.failure->stage, FailureStage::kDictParse);
  EXPECT_EQ(r.stage_outputs.back().status, StageStatus::kFallback);
  EXPECT_TRUE(has_note(r.stage_outputs.back(), "composition used: Title"));
  EXPECT_EQ(f.requests_to(t::kCoderModel), 0u);
}

TEST(Pipeline, TemplateCompositionsNeverCallTheCoder) {
  Fixture f;
  const RunRecord tt = f.run("bar01", Strategy::kPoT, InputComposition::kDictStatsTTitle);
  EXPECT_EQ(stages(tt), (V{"chart_to_dict", "template_stats", "summarize"}));
  EXPECT_EQ(tt.stats_provenance, StatsProvenance::kTemplate);
  const RunRecord pt = f.run("bar01", Strategy::kPoTTemplate, InputComposition::kDictStatsTitle);
  EXPECT_EQ(stages(pt), (V{"chart_to_dict", "template_stats", "summarize"}));
  EXPECT_EQ(f.requests_to(t::kCoderModel), 0u);
  EXPECT_EQ(tt.stage_outputs[1].status, StageStatus::kOk);
}

TEST(Pipeline, SummarizeRequiresCompositionSlots) {
  Fixture f;
  Pipeline p(t::e2e_config("http://mock.invalid/v1", Strategy::kPoT, InputComposition::kDictStatsTitle), f.client);
  try {
    p.stage_summarize(f.chart("bar01"), nullptr, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingSlot);
  }
  EXPECT_TRUE(f.transport->requests().empty());
}

TEST(Pipeline, ImageRootResolvesRelativePaths) {
  Fixture f;
  PipelineConfig cfg = t::e2e_config("http://mock.invalid/v1", Strategy::kDirect, InputComposition::kTitle);
  cfg.image_root = "/data/charts";
  Pipeline p(cfg, f.client);
  ChartRecord c = f.chart("bar01");
  EXPECT_EQ(p.resolve_image(c), c.image_path);
  c.image_path = "img/a.png";
  EXPECT_EQ(p.resolve_image(c), "/data/charts/img/a.png");
}

TEST(Pipeline, ModelOutageBecomesFailureNotException) {
  auto model = std::make_shared<ScriptedModel>(std::vector<ScriptRule>{ScriptRule{{"model:"}, {"x"}, {503}}});
  auto client = std::make_shared<LlmClient>(std::make_shared<MockTransport>(model), BackoffPolicy{},
                                            [](std::chrono::milliseconds) {});
  Pipeline p(t::e2e_config("http://mock.invalid/v1", Strategy::kDirect, InputComposition::kTitle), client);
  Fixture f;
  const RunRecord r = p.run_chart(f.chart("bar01"));
  ASSERT_TRUE(r.failure.has_value());
  EXPECT_FALSE(r.summary.has_value());
  EXPECT_EQ(r.failure->category, FailureCategory::kOther);
}
