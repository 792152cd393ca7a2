#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "chartpot/error.hpp"
#include "chartpot/manifest.hpp"
#include "chartpot/run_io.hpp"
#include "chartpot/value_tree.hpp"
#include "test_support.hpp"

using namespace chartpot;
using chartpot::testing::data_path;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorCode::kInvalidArgument;
}

std::vector<ChartRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_manifest(in);
}

}  // namespace

TEST(ChartEnums, DisplayNamesRoundTrip) {
  for (ChartType t : kAllChartTypes) EXPECT_EQ(parse_chart_type(to_string(t)), t);
  EXPECT_EQ(to_string(ChartType::kScatter), "Scatter");
  EXPECT_EQ(parse_chart_type("BAR"), ChartType::kBar);
  EXPECT_EQ(parse_strategy("potTemplate"), Strategy::kPoTTemplate);
  EXPECT_EQ(parse_composition("DictStatsTTitle"), InputComposition::kDictStatsTTitle);
  EXPECT_EQ(to_string(FailureCategory::kBudgetExceeded), "BudgetExceeded");
  EXPECT_FALSE(parse_chart_type("histogram").has_value());
}

TEST(Manifest, LoadsFixtureAndPicksLongestGold) {
  const auto charts = load_manifest(data_path("manifests/fixture3.jsonl"));
  ASSERT_EQ(charts.size(), 3u);
  EXPECT_EQ(charts[0].id, "p001");
  EXPECT_EQ(charts[0].chart_type, ChartType::kBar);
  EXPECT_EQ(charts[0].gold_summary, "the bar chart gold caption");
  EXPECT_EQ(charts[2].dataset, Dataset::kPew);
}

TEST(Manifest, CountsAreAdditive) {
  const auto charts = load_manifest(data_path("e2e/manifest.jsonl"));
  const TypeCounts counts = count_by_type(charts);
  std::size_t sum = 0;
  for (auto c : counts.by_type) sum += c;
  EXPECT_EQ(sum, counts.total);
  EXPECT_EQ(counts.total, 5u);
  EXPECT_EQ(counts[ChartType::kPie], 1u);
}

TEST(Manifest, Errors) {
  auto rec = [](const std::string& id, const std::string& type) {
    return "{\"id\": \"" + id + "\", \"image_path\": \"a.png\", \"title\": \"t\", \"chart_type\": \"" + type +
           "\"}\n";
  };
  EXPECT_EQ(code_of([&] { parse(rec("a", "bar") + "not json\n"); }), ErrorCode::kMalformedLine);
  EXPECT_EQ(code_of([&] { parse("{\"id\": \"a\"}\n"); }), ErrorCode::kMalformedLine);
  try {
    parse("\n" + rec("a", "bar") + "{oops\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([&] { parse(rec("a", "bar") + rec("a", "pie")); }), ErrorCode::kDuplicateId);
  EXPECT_EQ(code_of([&] { parse(rec("a", "histogram")); }), ErrorCode::kUnknownChartType);
  EXPECT_EQ(code_of([] { load_manifest("/nonexistent/manifest.jsonl"); }), ErrorCode::kIo);
}

TEST(Manifest, RoundTripsThroughWriter) {
  const auto charts = load_manifest(data_path("e2e/manifest.jsonl"));
  std::ostringstream out;
  write_manifest(out, charts);
  EXPECT_EQ(parse(out.str()), charts);
}

TEST(GoldCaption, LongestWinsFirstOnTies) {
  const std::vector<std::string> c{"abc", "defg", "hijk"};
  EXPECT_EQ(select_gold_caption(c), "defg");
  EXPECT_EQ(code_of([] { select_gold_caption({}); }), ErrorCode::kEmptyCandidateList);
}

TEST(ValueTree, DepthAndNodes) {
  EXPECT_EQ(ValueTree::integer(1).depth(), 0u);
  EXPECT_EQ(ValueTree::sequence({ValueTree::integer(1)}).depth(), 1u);
  Mapping m{{ValueTree::string("a"), ValueTree::sequence({ValueTree::integer(1)})}};
  const ValueTree t = ValueTree::mapping(m);
  EXPECT_EQ(t.depth(), 2u);
  EXPECT_EQ(t.node_count(), 3u);
  ASSERT_NE(t.find("a"), nullptr);
  EXPECT_EQ(t.find("b"), nullptr);
}

TEST(ValueTree, PythonLiteralRendering) {
  Mapping m{{ValueTree::string("a"), ValueTree::integer(1)},
            {ValueTree::string("b"), ValueTree::sequence({ValueTree::real(2.5), ValueTree::null()})},
            {ValueTree::string("c"), ValueTree::real(45.0, "%")},
            {ValueTree::string("d"), ValueTree::boolean(true)}};
  EXPECT_EQ(to_python_literal(ValueTree::mapping(m)), "{'a': 1, 'b': [2.5, None], 'c': '45%', 'd': True}");
  EXPECT_EQ(python_str(ValueTree::real(1e16)), "1e+16");
  EXPECT_EQ(python_str(ValueTree::real(3.0)), "3.0");
  EXPECT_EQ(python_str(ValueTree::real(0.1)), "0.1");
  EXPECT_EQ(python_str(ValueTree::string("x")), "x");
}

TEST(StatsMap, FlattenIsIdempotent) {
  Mapping inner{{ValueTree::string("Rep"), ValueTree::integer(45)}, {ValueTree::string("Dem"), ValueTree::integer(38)}};
  Mapping deep{{ValueTree::string("x"), ValueTree::mapping(inner)}};
  Mapping top{{ValueTree::string("2019"), ValueTree::mapping(inner)},
              {ValueTree::string("nested"), ValueTree::mapping(deep)},
              {ValueTree::string("mean"), ValueTree::real(41.5)}};
  const StatsMap once = flatten_stats(ValueTree::mapping(top));
  ASSERT_NE(once.find("2019"), nullptr);
  ASSERT_NE(once.find("nested.x"), nullptr);
  EXPECT_EQ(flatten_stats(once.to_tree()), once);
  EXPECT_THROW(flatten_stats(ValueTree::integer(3)), Error);
}

TEST(StatsMap, RecordsKeyedByCategory) {
  Mapping r1{{ValueTree::string("Category"), ValueTree::string("a")}, {ValueTree::string("Sum"), ValueTree::integer(3)}};
  Mapping r2{{ValueTree::string("Sum"), ValueTree::integer(4)}};
  const StatsMap s = flatten_stats(ValueTree::sequence({ValueTree::mapping(r1), ValueTree::mapping(r2)}));
  EXPECT_NE(s.find("a"), nullptr);
  EXPECT_NE(s.find("1"), nullptr);
}

TEST(RunIo, RecordRoundTrip) {
  RunRecord r;
  r.chart_id = "bar01";
  r.strategy = Strategy::kPoT;
  r.input_composition = InputComposition::kStatsTitle;
  StageOutput s;
  s.stage = "chart_to_dict";
  s.model_id = "vlm";
  s.prompt = "<|im_start|>user\nhi";
  s.raw_text = "{'a': 1}";
  Mapping m{{ValueTree::integer(2019), ValueTree::real(45.0, "%")},
            {ValueTree::string("nan"), ValueTree::real(std::numeric_limits<double>::quiet_NaN())},
            {ValueTree::string("f"), ValueTree::real(2.0)}};
  s.artifact = ValueTree::mapping(m);
  s.notes = {"steps_used=10"};
  s.status = StageStatus::kFallback;
  s.failure = FailureClass{FailureStage::kCodeExec, FailureCategory::kTypeMismatch, "bad"};
  r.stage_outputs.push_back(s);
  r.summary = "A summary.";
  r.stats_provenance = StatsProvenance::kTemplate;
  r.timings_ms = {{"chart_to_dict", 12}};
  r.model_ids = {{"vlm", "vlm"}};
  const std::string line = encode_run(r);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(decode_run(line), r);
  EXPECT_EQ(encode_run(decode_run(line)), line);
  EXPECT_THROW(decode_run("{\"chart_id\": 3}"), Error);
}

TEST(RunIo, MissingFileReadsEmpty) { EXPECT_TRUE(read_runs(std::filesystem::path("/nonexistent/runs.jsonl")).empty()); }

TEST(RunIo, ValueTreeJson) {
  const ValueTree t = ValueTree::sequence({ValueTree::real(45.0, "%"), ValueTree::integer(1), ValueTree::real(1.0)});
  EXPECT_EQ(decode_value_tree(encode_value_tree(t)), t);
}
