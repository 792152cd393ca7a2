#include <gtest/gtest.h>

#include <algorithm>

#include "chartpot/error.hpp"
#include "chartpot/pyliteral.hpp"
#include "test_support.hpp"

using namespace chartpot;

namespace {

bool has_repair(const std::vector<Repair>& rs, Repair r) { return std::find(rs.begin(), rs.end(), r) != rs.end(); }

ValueTree parsed(std::string_view text) {
  ParseOutcome out = parse_model_dict(text);
  EXPECT_TRUE(out.ok()) << (out.failure ? out.failure->message : "");
  return out.ok() ? *out.result : ValueTree::null();
}

}  // namespace

TEST(PyLiteral, ParsesObjectLanguageLiteral) {
  const ValueTree t = parsed("{'a': 1, \"b\": [2.5, None, True], 3: -4e2, 'c': (1, 2)}");
  ASSERT_EQ(t.kind(), ValueTree::Kind::kMapping);
  EXPECT_EQ(*t.find("a"), ValueTree::integer(1));
  EXPECT_EQ(t.find("b")->as_sequence()[2], ValueTree::boolean(true));
  EXPECT_EQ(t.as_mapping()[2].key, ValueTree::integer(3));
  EXPECT_EQ(t.as_mapping()[2].value, ValueTree::real(-400.0));
  EXPECT_EQ(t.find("c")->as_sequence().size(), 2u);
}

TEST(PyLiteral, ParsesJson) {
  const ValueTree t = parsed(R"({"a": true, "b": null, "c": [1, 2.0]})");
  EXPECT_EQ(*t.find("a"), ValueTree::boolean(true));
  EXPECT_TRUE(t.find("b")->is_null());
  EXPECT_EQ(t.find("c")->as_sequence()[1], ValueTree::real(2.0));
}

TEST(PyLiteral, PercentCarriesUnit) {
  const ValueTree t = parsed("{'share': '45%', 'bare': 45%, 'income': '$30K-$99999'}");
  EXPECT_EQ(*t.find("share"), ValueTree::real(45.0, "%"));
  EXPECT_EQ(t.find("share")->unit(), "%");
  EXPECT_EQ(*t.find("income"), ValueTree::string("$30K-$99999"));
}

TEST(PyLiteral, ExtractionRepairs) {
  const ParseOutcome out = parse_model_dict("Here is the dictionary:\n```python\nchart_dict = {'a': [1, 2,],}\n```\nDone.");
  ASSERT_TRUE(out.ok());
  EXPECT_TRUE(has_repair(out.repairs_applied, Repair::kFenceStripped));
  EXPECT_TRUE(has_repair(out.repairs_applied, Repair::kPrefixStripped));
  EXPECT_TRUE(has_repair(out.repairs_applied, Repair::kTrailingCommaDropped));
  EXPECT_EQ(out.result->find("a")->as_sequence().size(), 2u);
}

TEST(PyLiteral, CurlyQuotesAndDuplicateKeys) {
  const ParseOutcome out = parse_model_dict("{\xE2\x80\x98" "a\xE2\x80\x99: 1, 'a': 2}");
  ASSERT_TRUE(out.ok());
  EXPECT_TRUE(has_repair(out.repairs_applied, Repair::kQuoteNormalized));
  EXPECT_TRUE(has_repair(out.repairs_applied, Repair::kDuplicateKeyMerged));
  EXPECT_EQ(*out.result->find("a"), ValueTree::integer(2));
  EXPECT_EQ(out.result->as_mapping().size(), 1u);
}

TEST(PyLiteral, TruncationIsDiagnosedAsNeverClosed) {
  const ParseOutcome out = parse_model_dict("{'years': {'2019': 10, '2020': ");
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure->stage, FailureStage::kDictParse);
  EXPECT_EQ(out.failure->category, FailureCategory::kTruncated);
  EXPECT_NE(out.failure->message.find("was never closed"), std::string::npos);
  EXPECT_TRUE(is_unclosed_delimiter_message(out.failure->message));
}

TEST(PyLiteral, UnterminatedStringIsSyntaxError) {
  const ParseOutcome out = parse_model_dict("{'a': 'unclosed}");
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure->category, FailureCategory::kSyntaxError);
  EXPECT_EQ(out.failure->message, "unterminated string literal (detected at line 1) (<string>, line 1)");
}

TEST(PyLiteral, MissingPayload) {
  EXPECT_THROW(extract_payload("no dictionary here"), Error);
  const ParseOutcome out = parse_model_dict("no dictionary here");
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure->stage, FailureStage::kDictParse);
  EXPECT_EQ(parse_model_dict("").failure->stage, FailureStage::kDictParse);
}

TEST(PyLiteral, MismatchedCloser) {
  const ParseOutcome out = parse_value_tree("{'a': [1, 2}");
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure->category, FailureCategory::kSyntaxError);
  EXPECT_NE(out.failure->message.find("does not match"), std::string::npos);
}

TEST(PyLiteral, TaxonomyDictionaryCases) {
  for (const auto& c : chartpot::testing::taxonomy_cases()) {
    if (c.kind != chartpot::testing::TaxonomyCase::Kind::kDict) continue;
    const auto failure = chartpot::testing::classify(c);
    ASSERT_TRUE(failure.has_value()) << c.label;
    EXPECT_EQ(failure->stage, c.stage) << c.label;
    EXPECT_EQ(failure->category, c.category) << c.label;
    EXPECT_EQ(failure->message, c.message) << c.label;
  }
}

TEST(PyLiteral, RoundTripsRenderedLiterals) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 40; ++k) {
    const ValueTree t = chartpot::testing::random_chart_tree(rng);
    const ParseOutcome out = parse_value_tree(to_python_literal(t));
    ASSERT_TRUE(out.ok()) << to_python_literal(t);
    EXPECT_EQ(*out.result, t) << to_python_literal(t);
  }
}

TEST(ValidateExecutable, EnforcesLimits) {
  ValueTree deep = ValueTree::integer(1);
  for (int k = 0; k < 10; ++k) deep = ValueTree::sequence({deep});
  SandboxLimits limits;
  limits.max_depth = 5;
  auto bad = validate_executable(deep, limits);
  ASSERT_TRUE(bad.has_value());
  EXPECT_EQ(bad->category, FailureCategory::kBudgetExceeded);
  limits = {};
  limits.max_nodes = 3;
  EXPECT_TRUE(validate_executable(deep, limits).has_value());
  EXPECT_FALSE(validate_executable(deep, SandboxLimits{}).has_value());
}
