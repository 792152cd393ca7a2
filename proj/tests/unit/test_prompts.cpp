#include <gtest/gtest.h>

#include "chartpot/prompts.hpp"
#include "test_support.hpp"

using namespace chartpot;
using chartpot::testing::data_path;
using chartpot::testing::read_file;

TEST(Prompts, DefaultsMatchGoldenTranscriptions) {
  PromptSet p = PromptSet::defaults();
  for (const char* name : {"dict_gen", "dict_prefill", "dict_repair", "pot_system", "pot_user", "pot_prefill",
                           "summary_user", "summary_prefill"}) {
    const std::string* field = prompt_field(p, name);
    ASSERT_NE(field, nullptr) << name;
    EXPECT_EQ(*field, read_file(data_path(std::string("prompts/") + name + ".txt"))) << name;
  }
}

TEST(Prompts, SummaryVariantsCarryOnlyTheirSlots) {
  const PromptSet p = PromptSet::defaults();
  using V = std::vector<std::string>;
  EXPECT_EQ(template_slots(p.summary_for(InputComposition::kTitle)), V{"title"});
  EXPECT_EQ(template_slots(p.summary_for(InputComposition::kDictTitle)), (V{"title", "dictionary_str"}));
  EXPECT_EQ(template_slots(p.summary_for(InputComposition::kStatsTitle)), (V{"title", "summary_dict"}));
  EXPECT_EQ(template_slots(p.summary_for(InputComposition::kDictStatsTitle)),
            (V{"title", "dictionary_str", "summary_dict"}));
  EXPECT_EQ(&p.summary_for(InputComposition::kDictStatsTTitle), &p.summary_user);
  EXPECT_EQ(template_slots(p.direct), V{"title"});
  EXPECT_EQ(template_slots(p.mcot), V{"title"});
  EXPECT_EQ(template_slots(p.pot_user), V{"chart_dict"});
}

TEST(Prompts, FieldNamesCoverEveryField) {
  PromptSet p;
  for (auto name : prompt_field_names()) EXPECT_NE(prompt_field(p, name), nullptr) << name;
  EXPECT_EQ(prompt_field(p, "nope"), nullptr);
  EXPECT_EQ(prompt_field_names().size(), 13u);
}

TEST(FillSlots, SinglePassAndVerbatimUnknowns) {
  EXPECT_EQ(fill_slots("{a} and {b} {c}", {{"a", "{b}"}, {"b", "2"}}), "{b} and 2 {c}");
  EXPECT_EQ(fill_slots("{'Rep': 45}", {{"title", "t"}}), "{'Rep': 45}");
  EXPECT_EQ(fill_slots("no slots", {}), "no slots");
}

TEST(PostprocessSummary, StripsPrefillEcho) {
  EXPECT_EQ(postprocess_summary("Summary: The share rose.", "Summary:"), "The share rose.");
  EXPECT_EQ(postprocess_summary("  The share rose.  ", "Summary:"), "The share rose.");
}

TEST(PostprocessSummary, LastSummaryLabelWins) {
  EXPECT_EQ(postprocess_summary("- values\n- trend\nSummary: Final text.", ""), "Final text.");
  EXPECT_EQ(postprocess_summary("Summary: draft\nSummary: final", ""), "final");
}

TEST(PostprocessSummary, SkipsScaffold) {
  EXPECT_EQ(postprocess_summary("Step 1: read.\n1. values\n2) trend\n* bullet\nThe chart shows growth.", ""),
            "The chart shows growth.");
  EXPECT_EQ(postprocess_summary("1.5 million people moved.", ""), "1.5 million people moved.");
  EXPECT_EQ(postprocess_summary("1. Only scaffold", ""), "Only scaffold");
}
