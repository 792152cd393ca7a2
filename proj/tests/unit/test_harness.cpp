#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "chartpot/error.hpp"
#include "chartpot/harness.hpp"
#include "chartpot/manifest.hpp"
#include "chartpot/mock_model.hpp"
#include "chartpot/run_io.hpp"
#include "test_support.hpp"

using namespace chartpot;
namespace t = chartpot::testing;

namespace {

struct Env {
  std::shared_ptr<ScriptedModel> model = ScriptedModel::load(t::data_path("e2e/mock_script.json"));
  std::shared_ptr<MockTransport> transport = std::make_shared<MockTransport>(model);
  std::shared_ptr<LlmClient> client =
      std::make_shared<LlmClient>(transport, BackoffPolicy{}, [](std::chrono::milliseconds) {});
  std::vector<ChartRecord> charts = load_manifest(t::data_path("e2e/manifest.jsonl"));
  PipelineConfig cfg = t::e2e_config("http://mock.invalid/v1", Strategy::kPoT, InputComposition::kDictStatsTitle);
};

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(SeededPermutation, DeterministicPermutation) {
  const auto a = seeded_permutation(50, 7);
  EXPECT_EQ(a, seeded_permutation(50, 7));
  EXPECT_NE(a, seeded_permutation(50, 8));
  std::vector<std::size_t> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(50);
  std::iota(iota.begin(), iota.end(), 0);
  EXPECT_EQ(sorted, iota);
  EXPECT_TRUE(seeded_permutation(0, 1).empty());
}

TEST(RunBatch, WritesInManifestOrderAndResumes) {
  Env env;
  t::TempDir dir("batch");
  const auto out = dir / "runs.jsonl";
  const BatchSummary first = run_batch(env.charts, env.cfg, out, env.client);
  EXPECT_EQ(first.selected, 5u);
  EXPECT_EQ(first.written, 5u);
  EXPECT_EQ(first.failed, 2u);  // pie01 template fallback, scatter01 dictionary failure
  const auto runs = read_runs(out);
  ASSERT_EQ(runs.size(), 5u);
  for (std::size_t k = 0; k < runs.size(); ++k) EXPECT_EQ(runs[k].chart_id, env.charts[k].id);

  const std::size_t calls = env.transport->requests().size();
  const BatchSummary again = run_batch(env.charts, env.cfg, out, env.client);
  EXPECT_EQ(again.skipped, 5u);
  EXPECT_EQ(again.written, 0u);
  EXPECT_EQ(env.transport->requests().size(), calls);
}

TEST(RunBatch, ResumesAfterInterruption) {
  Env env;
  t::TempDir dir("resume");
  const auto out = dir / "runs.jsonl";
  run_batch(env.charts, env.cfg, out, env.client);
  auto lines = lines_of(out);
  const std::string last = lines.back();
  lines.pop_back();
  {
    std::ofstream rewrite(out, std::ios::trunc);
    for (const auto& l : lines) rewrite << l << "\n";
  }
  Env fresh;
  const BatchSummary s = run_batch(fresh.charts, fresh.cfg, out, fresh.client);
  EXPECT_EQ(s.skipped, 4u);
  EXPECT_EQ(s.written, 1u);
  EXPECT_EQ(lines_of(out).back(), last);
}

TEST(RunBatch, OtherConfigurationsDoNotCountAsDone) {
  Env env;
  t::TempDir dir("configs");
  const auto out = dir / "runs.jsonl";
  run_batch(env.charts, env.cfg, out, env.client);
  PipelineConfig direct = t::e2e_config("http://mock.invalid/v1", Strategy::kDirect, InputComposition::kTitle);
  EXPECT_EQ(run_batch(env.charts, direct, out, env.client).written, 5u);
  EXPECT_EQ(read_runs(out).size(), 10u);
}

TEST(RunBatch, SeedAndLimitSelectCharts) {
  Env env;
  t::TempDir dir("limit");
  BatchOptions opts;
  opts.seed = 3;
  opts.limit = 2;
  std::vector<std::string> seen;
  opts.on_record = [&](const RunRecord& r) { seen.push_back(r.chart_id); };
  const BatchSummary s = run_batch(env.charts, env.cfg, dir / "runs.jsonl", env.client, opts);
  EXPECT_EQ(s.selected, 2u);
  const auto perm = seeded_permutation(5, 3);
  EXPECT_EQ(seen, (std::vector<std::string>{env.charts[perm[0]].id, env.charts[perm[1]].id}));
}

TEST(RunBatch, CredentialsCheckedBeforeAnyCall) {
  Env env;
  ::unsetenv("CHARTPOT_MISSING_KEY");
  env.cfg.coder_endpoint->api_key_env = "CHARTPOT_MISSING_KEY";
  t::TempDir dir("auth");
  try {
    run_batch(env.charts, env.cfg, dir / "runs.jsonl", env.client);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAuthMissing);
    EXPECT_NE(std::string(e.what()).find("CHARTPOT_MISSING_KEY"), std::string::npos);
  }
  EXPECT_TRUE(env.transport->requests().empty());
}

TEST(Report, GroupsByConfigurationAndType) {
  Env env;
  t::TempDir dir("report");
  const auto out = dir / "runs.jsonl";
  run_batch(env.charts, env.cfg, out, env.client);
  run_batch(env.charts, t::e2e_config("http://mock.invalid/v1", Strategy::kDirect, InputComposition::kTitle), out,
            env.client);
  const EvalReport report = build_report(read_runs(out), env.charts);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].label, "Direct");
  EXPECT_EQ(report.rows[1].label, "PoT|DictStatsTitle");
  EXPECT_EQ(report.rows[1].runs, 5u);
  EXPECT_EQ(report.rows[1].cells[kAllColumn].n, 5u);
  EXPECT_TRUE(report.rows[1].cells[kAllColumn].cider_defined);
  EXPECT_EQ(report.rows[1].cells[static_cast<std::size_t>(ChartType::kBar)].n, 1u);
  EXPECT_FALSE(report.rows[1].cells[static_cast<std::size_t>(ChartType::kBar)].cider_defined);

  std::size_t failures = 0;
  for (const auto& f : report.failure_histogram) failures += f.count;
  EXPECT_EQ(failures, 2u);

  const std::string md = render_tables(report, TableFormat::kMarkdown);
  EXPECT_NE(md.find("| Configuration | Metric | Area | Bar | Line | Pie | Scatter | All |"), std::string::npos);
  EXPECT_NE(md.find("| Stage | Category | Count |"), std::string::npos);
  const std::string tsv = render_tables(report, TableFormat::kTsv);
  EXPECT_EQ(tsv.rfind("Configuration\tMetric\tArea\tBar\tLine\tPie\tScatter\tAll\n", 0), 0u);
  EXPECT_EQ(parse_table_format("tsv"), TableFormat::kTsv);
}

TEST(Report, OrphanRunsAreErrors) {
  RunRecord r;
  r.chart_id = "ghost";
  const std::vector<RunRecord> runs{r};
  const std::vector<ChartRecord> manifest;
  try {
    build_report(runs, manifest);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOrphanRun);
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}
