#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <sstream>

#include "chartpot/interpreter.hpp"
#include "chartpot/run_io.hpp"
#include "chartpot/template_stats.hpp"
#include "test_support.hpp"

using namespace chartpot;
using chartpot::testing::data_path;
using chartpot::testing::read_file;
using json = nlohmann::json;

namespace {

void expect_number(const ValueTree& got, const json& want, const std::string& where) {
  if (want.is_number_integer()) {
    ASSERT_EQ(got.kind(), ValueTree::Kind::kInt) << where;
    EXPECT_EQ(got.as_int(), want.get<std::int64_t>()) << where;
  } else {
    ASSERT_EQ(got.kind(), ValueTree::Kind::kFloat) << where;
    EXPECT_NEAR(got.as_float(), want.get<double>(), 1e-12 * std::max(1.0, std::fabs(want.get<double>()))) << where;
  }
}

}  // namespace

TEST(TemplateStats, MatchesIndependentOracle) {
  std::istringstream trees(read_file(data_path("template/trees.jsonl")));
  const json golden = json::parse(read_file(data_path("template/trees.golden.json")));
  std::string line;
  std::size_t k = 0;
  while (std::getline(trees, line)) {
    if (line.empty()) continue;
    ASSERT_LT(k, golden.size());
    const auto records = template_records(decode_value_tree(line));
    const json& want = golden[k];
    ASSERT_EQ(records.size(), want.size()) << line;
    for (std::size_t r = 0; r < records.size(); ++r) {
      const std::string where = line + " #" + std::to_string(r);
      EXPECT_EQ(records[r].category, want[r]["Category"].get<std::string>()) << where;
      EXPECT_EQ(records[r].total, want[r]["Total"].get<std::int64_t>()) << where;
      expect_number(records[r].sum, want[r]["Sum"], where);
      EXPECT_NEAR(records[r].average, want[r]["Average"].get<double>(), 1e-12) << where;
      expect_number(records[r].minimum, want[r]["Minimum"], where);
      expect_number(records[r].maximum, want[r]["Maximum"], where);
      expect_number(records[r].range, want[r]["Range"], where);
    }
    ++k;
  }
  EXPECT_EQ(k, golden.size());
}

TEST(TemplateStats, BooleansAreNotNumeric) {
  Mapping m{{ValueTree::string("a"), ValueTree::boolean(true)}, {ValueTree::string("b"), ValueTree::integer(1)}};
  EXPECT_TRUE(template_records(ValueTree::mapping(m)).empty());
  EXPECT_TRUE(template_statistics(ValueTree::sequence({ValueTree::boolean(true), ValueTree::integer(2)})).empty());
}

TEST(TemplateStats, CanonicalProgramAgreesOnRandomTrees) {
  const ProgramParse program = parse_program(kCanonicalTemplateSource);
  ASSERT_TRUE(program.ok()) << program.failure->message;
  ASSERT_FALSE(check_builtin_policy(*program.ast).has_value());
  std::mt19937_64 rng(20240611);
  for (int k = 0; k < 60; ++k) {
    const ValueTree tree = chartpot::testing::random_chart_tree(rng);
    const StatsMap native = template_statistics(tree);
    const ExecOutcome sandbox = execute(*program.ast, tree);
    if (native.empty()) {
      // An empty record list flattens to an empty table either way.
      EXPECT_TRUE(!sandbox.ok() || sandbox.stats->empty()) << to_python_literal(tree);
      continue;
    }
    ASSERT_TRUE(sandbox.ok()) << sandbox.failure->message << "\n" << to_python_literal(tree);
    EXPECT_EQ(*sandbox.stats, native) << to_python_literal(tree);
  }
}
