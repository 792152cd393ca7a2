#include <gtest/gtest.h>

#include <filesystem>

#include "chartpot/interpreter.hpp"
#include "chartpot/pyliteral.hpp"
#include "test_support.hpp"

using namespace chartpot;

namespace {

ValueTree chart(std::string_view literal) {
  ParseOutcome out = parse_value_tree(literal);
  EXPECT_TRUE(out.ok());
  return *out.result;
}

ExecOutcome run(std::string_view source, std::string_view literal, const SandboxLimits& limits = {}) {
  return run_program_source(source, chart(literal), limits);
}

}  // namespace

TEST(Interpreter, ExemplarProgram) {
  const auto out = run(R"(import statistics
def get_summary_statistics(chart_dict):
    summary_dict = {}
    for year, parties in chart_dict['data'].items():
        values = list(parties.values())
        summary_dict[year] = {
            'Total': len(values),
            'Sum': sum(values),
            'Average': statistics.mean(values),
            'Minimum': min(values),
            'Maximum': max(values),
            'Range': max(values) - min(values),
        }
    return summary_dict
)",
                       "{'data': {'2019': {'Rep': 45, 'Dem': 38}, '2021': {'Rep': 52, 'Dem': 41}}}");
  ASSERT_TRUE(out.ok()) << out.failure->message;
  const ValueTree* y = out.stats->find("2019");
  ASSERT_NE(y, nullptr);
  EXPECT_EQ(*y->find("Sum"), ValueTree::integer(83));
  EXPECT_EQ(*y->find("Average"), ValueTree::real(41.5));
  EXPECT_EQ(*y->find("Range"), ValueTree::integer(7));
  EXPECT_GT(out.steps_used, 0);
}

TEST(Interpreter, PythonSemantics) {
  const auto out = run(R"(def get_summary_statistics(chart_dict):
    xs = sorted(chart_dict['v'], reverse=True)
    pairs = {k: v * 2 for k, v in zip(['a', 'b'], xs)}
    label = ', '.join(str(x) for x in xs[:2])
    return {
        'floor': 7 // -2, 'mod': -7 % 3, 'div': 7 / 2, 'pow': 2 ** 10,
        'round_half_even': round(2.5), 'round2': round(2.675, 2),
        'pairs': pairs, 'label': label, 'fmt': f"{xs[0]:.1f}|{len(xs):03d}",
        'neg_index': xs[-1], 'slice': xs[::2], 'big': 2 ** 63,
    }
)",
                       "{'v': [3, 1.5, 10]}");
  ASSERT_TRUE(out.ok()) << out.failure->message;
  const StatsMap& s = *out.stats;
  EXPECT_EQ(*s.find("floor"), ValueTree::integer(-4));
  EXPECT_EQ(*s.find("mod"), ValueTree::integer(2));
  EXPECT_EQ(*s.find("div"), ValueTree::real(3.5));
  EXPECT_EQ(*s.find("pow"), ValueTree::integer(1024));
  EXPECT_EQ(*s.find("round_half_even"), ValueTree::integer(2));
  EXPECT_EQ(*s.find("round2"), ValueTree::real(2.67));
  EXPECT_EQ(*s.find("label"), ValueTree::string("10, 3"));
  EXPECT_EQ(*s.find("fmt"), ValueTree::string("10.0|003"));
  EXPECT_EQ(*s.find("neg_index"), ValueTree::real(1.5));
  EXPECT_EQ(*s.find("big"), ValueTree::real(9223372036854775808.0));
}

TEST(Interpreter, BodyOnlyContinuationAfterPrefill) {
  // The pipeline re-attaches the prefilled fence and header to the answer.
  const auto out = run("```python\ndef get_summary_statistics(chart_dict):\n    return {'n': len(chart_dict)}\n```\ntrailing prose",
                       "{'a': 1, 'b': 2}");
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(*out.stats->find("n"), ValueTree::integer(2));
}

TEST(Interpreter, WhileTrueExhaustsStepBudget) {
  SandboxLimits limits;
  limits.max_steps = 5000;
  const auto out = run("def get_summary_statistics(chart_dict):\n    while True:\n        pass\n", "{}", limits);
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure->category, FailureCategory::kBudgetExceeded);
  EXPECT_EQ(out.failure->stage, FailureStage::kCodeExec);
  EXPECT_EQ(out.steps_used, limits.max_steps);
}

TEST(Interpreter, RecursionDepthBudget) {
  const auto out = run("def get_summary_statistics(chart_dict):\n    def f(n):\n        return f(n + 1)\n    return f(0)\n",
                       "{}");
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure->category, FailureCategory::kBudgetExceeded);
}

TEST(Interpreter, MemoryBudget) {
  SandboxLimits limits;
  limits.max_nodes = 1000;
  const auto out = run("def get_summary_statistics(chart_dict):\n    xs = []\n    for i in range(100000):\n"
                       "        xs.append([i])\n    return {'n': len(xs)}\n",
                       "{}", limits);
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure->category, FailureCategory::kBudgetExceeded);
}

TEST(Interpreter, NoneResultIsEmptyOutput) {
  const auto out = run("def get_summary_statistics(chart_dict):\n    x = 1\n", "{}");
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure->category, FailureCategory::kEmptyOutput);
}

TEST(Interpreter, PrintIsCaptured) {
  const auto out = run("def get_summary_statistics(chart_dict):\n    print('hello', 3)\n    return {'a': 1}\n", "{}");
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.captured_output, "hello 3\n");
}

TEST(Interpreter, CommentPolicy) {
  EXPECT_TRUE(check_comment_policy("# only a comment\n# another\n").has_value());
  EXPECT_TRUE(check_comment_policy("x = 1  # a very very long trailing comment that dominates the line\n").has_value());
  EXPECT_FALSE(check_comment_policy("x = '#' + 'not a comment'\n").has_value());
  const auto bad = check_comment_policy("");
  ASSERT_TRUE(bad.has_value());
  EXPECT_EQ(bad->category, FailureCategory::kEmptyOutput);
  EXPECT_EQ(bad->stage, FailureStage::kCodeGen);
}

TEST(Interpreter, Fences) {
  EXPECT_EQ(strip_code_fences("text\n```python\nx = 1\n```\nmore"), "x = 1\n");
  EXPECT_EQ(strip_code_fences("x = 1"), "x = 1");
  EXPECT_EQ(strip_code_fences("```\nx = 1\n"), "x = 1\n");
}

TEST(Interpreter, TruncatedSourceIsNeverClosed) {
  const auto out = run("def get_summary_statistics(chart_dict):\n    x = [1, 2,", "{}");
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure->stage, FailureStage::kCodeParse);
  EXPECT_EQ(out.failure->category, FailureCategory::kTruncated);
  EXPECT_NE(out.failure->message.find("was never closed"), std::string::npos);
}

TEST(Interpreter, UnsupportedConstructNamed) {
  const auto out = run("def get_summary_statistics(chart_dict):\n    try:\n        pass\n    except:\n        pass\n", "{}");
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure->category, FailureCategory::kOther);
  EXPECT_NE(out.failure->message.find("try"), std::string::npos);
}

TEST(Interpreter, ForbiddenCorpusIsRejectedBeforeExecution) {
  const auto corpus = chartpot::testing::forbidden_programs();
  EXPECT_EQ(corpus.size(), 30u);
  for (const auto& p : corpus) {
    const auto out = run(p.source, "{'a': 1}");
    ASSERT_FALSE(out.ok()) << p.label;
    EXPECT_EQ(out.failure->stage, FailureStage::kCodeParse) << p.label << ": " << out.failure->message;
    EXPECT_EQ(out.steps_used, 0) << p.label;
  }
  EXPECT_FALSE(std::filesystem::exists("/tmp/chartpot-forbidden"));
}

TEST(Interpreter, TaxonomyProgramCases) {
  for (const auto& c : chartpot::testing::taxonomy_cases()) {
    if (c.kind != chartpot::testing::TaxonomyCase::Kind::kProgram) continue;
    const auto failure = chartpot::testing::classify(c);
    ASSERT_TRUE(failure.has_value()) << c.label;
    EXPECT_EQ(failure->stage, c.stage) << c.label;
    EXPECT_EQ(failure->category, c.category) << c.label;
    EXPECT_EQ(failure->message, c.message) << c.label;
  }
}

TEST(Interpreter, ParsedProgramIsReusable) {
  const ProgramParse p = parse_program("def get_summary_statistics(chart_dict):\n    return {'n': chart_dict['n'] * 2}\n");
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(p.ast->statement_count(), 1u);
  for (int k = 1; k <= 3; ++k) {
    const auto out = execute(*p.ast, chart("{'n': " + std::to_string(k) + "}"));
    ASSERT_TRUE(out.ok());
    EXPECT_EQ(*out.stats->find("n"), ValueTree::integer(2 * k));
  }
}
