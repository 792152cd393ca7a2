#include <gtest/gtest.h>

#include "chartpot/config.hpp"
#include "chartpot/error.hpp"
#include "test_support.hpp"

using namespace chartpot;

namespace {

const char* kMinimal = R"({
  "strategy": "PoT", "composition": "DictStatsTitle",
  "endpoints": {
    "vlm": {"base_url": "http://127.0.0.1:8000/v1", "model_id": "vlm", "supports_images": true, "api_key_env": null},
    "coder": {"base_url": "http://127.0.0.1:8001/v1", "model_id": "coder", "api_key_env": null}
  }
})";

ErrorCode config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "accepted: " << text;
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(Config, ParsesMinimalConfigWithDefaults) {
  const PipelineConfig cfg = parse_config(kMinimal);
  EXPECT_EQ(cfg.strategy, Strategy::kPoT);
  EXPECT_EQ(cfg.vlm_endpoint.model_id, "vlm");
  EXPECT_TRUE(cfg.vlm_endpoint.api_key_env.empty());
  ASSERT_TRUE(cfg.coder_endpoint.has_value());
  EXPECT_FALSE(cfg.repair_endpoint.has_value());
  EXPECT_EQ(cfg.max_code_retries, 1);
  EXPECT_EQ(cfg.prompts, PromptSet::defaults());
  EXPECT_DOUBLE_EQ(cfg.dict_decode.temperature, 0.2);
  EXPECT_EQ(cfg.effective_workers(), cfg.vlm_endpoint.max_concurrency);
}

TEST(Config, OverridesAndRelativeImageRoot) {
  const PipelineConfig cfg = parse_config(R"({
    "strategy": "Direct", "composition": "Title",
    "endpoints": {"vlm": {"base_url": "http://h/v1", "model_id": "v", "supports_images": true}},
    "decode": {"summary": {"max_new_tokens": 64}},
    "prompts": {"direct": "<img_placeholder>\nSay {title}."},
    "image_root": "imgs", "workers": 2, "record_timings": false,
    "limits": {"max_steps": 10}
  })",
                                          "/base/dir");
  EXPECT_EQ(cfg.strategy, Strategy::kDirect);
  EXPECT_EQ(cfg.summary_decode.max_new_tokens, 64);
  EXPECT_EQ(cfg.prompts.direct, "<img_placeholder>\nSay {title}.");
  EXPECT_EQ(cfg.image_root, "/base/dir/imgs");
  EXPECT_EQ(cfg.effective_workers(), 2);
  EXPECT_FALSE(cfg.record_timings);
  EXPECT_EQ(cfg.limits.max_steps, 10);
  EXPECT_EQ(cfg.vlm_endpoint.api_key_env, kDefaultApiKeyEnv);
}

TEST(Config, RejectsBadContent) {
  EXPECT_EQ(config_error("not json"), ErrorCode::kConfig);
  EXPECT_EQ(config_error(R"({"bogus": 1})"), ErrorCode::kConfig);
  EXPECT_EQ(config_error(R"({"strategy": "Nope", "endpoints": {"vlm": {"base_url": "http://h", "model_id": "v", "supports_images": true}}})"),
            ErrorCode::kConfig);
  // Generated statistics need a coder endpoint.
  EXPECT_EQ(config_error(R"({"endpoints": {"vlm": {"base_url": "http://h", "model_id": "v", "supports_images": true}}})"),
            ErrorCode::kConfig);
  EXPECT_EQ(config_error(R"({"strategy": "Direct", "endpoints": {"vlm": {"base_url": "http://h", "model_id": "v"}}})"),
            ErrorCode::kConfig);
  EXPECT_EQ(config_error(R"({"strategy": "Direct", "endpoints": {"vlm": {"base_url": "ftp://h", "model_id": "v", "supports_images": true}}})"),
            ErrorCode::kConfig);
  EXPECT_EQ(config_error(R"({"strategy": "Direct", "prompts": {"nope": "x"}, "endpoints": {"vlm": {"base_url": "http://h", "model_id": "v", "supports_images": true}}})"),
            ErrorCode::kConfig);
}

TEST(Config, CompositionStageDiscipline) {
  PipelineConfig cfg;
  cfg.strategy = Strategy::kPoT;
  cfg.composition = InputComposition::kTitle;
  EXPECT_FALSE(cfg.runs_dict_stage());
  EXPECT_FALSE(cfg.runs_stats_stage());
  cfg.composition = InputComposition::kDictTitle;
  EXPECT_TRUE(cfg.runs_dict_stage());
  EXPECT_FALSE(cfg.runs_stats_stage());
  cfg.composition = InputComposition::kStatsTitle;
  EXPECT_TRUE(cfg.runs_stats_stage());
  EXPECT_TRUE(cfg.uses_generated_stats());
  cfg.composition = InputComposition::kDictStatsTTitle;
  EXPECT_TRUE(cfg.runs_stats_stage());
  EXPECT_FALSE(cfg.uses_generated_stats());
  cfg.strategy = Strategy::kPoTTemplate;
  cfg.composition = InputComposition::kDictStatsTitle;
  EXPECT_FALSE(cfg.uses_generated_stats());
  cfg.strategy = Strategy::kMCoT;
  EXPECT_FALSE(cfg.runs_dict_stage());
}

TEST(Config, LoadsFixtureFile) {
  const PipelineConfig cfg = load_config(chartpot::testing::data_path("configs/pot.json"));
  EXPECT_EQ(cfg.strategy, Strategy::kPoT);
  EXPECT_THROW(load_config("/nonexistent/config.json"), Error);
}
