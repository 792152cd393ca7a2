#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "chartpot/config.hpp"
#include "chartpot/error.hpp"
#include "chartpot/harness.hpp"
#include "chartpot/humaneval_server.hpp"
#include "chartpot/manifest.hpp"
#include "chartpot/mock_model.hpp"
#include "chartpot/run_io.hpp"

namespace {

using namespace chartpot;

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

struct RunArgs {
  std::string manifest, config, out, strategy, composition;
  std::optional<std::size_t> limit;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

struct ReportArgs {
  std::string runs, manifest, format = "markdown", out;
};

struct ServeArgs {
  std::string runs_a, runs_b, label_a = "A", label_b = "B", manifest, log, images, admin_token, host = "127.0.0.1";
  std::size_t per_type = 10;
  std::uint64_t seed = 0;
  int port = 8080;
  int evaluators = 0;
};

PipelineConfig load_with_overrides(const RunArgs& a) {
  PipelineConfig cfg = load_config(a.config);
  if (!a.strategy.empty()) {
    auto s = parse_strategy(a.strategy);
    if (!s) throw Error(ErrorCode::kConfig, "unknown strategy '" + a.strategy + "'");
    cfg.strategy = *s;
  }
  if (!a.composition.empty()) {
    auto c = parse_composition(a.composition);
    if (!c) throw Error(ErrorCode::kConfig, "unknown composition '" + a.composition + "'");
    cfg.composition = *c;
  }
  if (a.workers) cfg.workers = *a.workers;
  cfg.validate();
  return cfg;
}

int cmd_run(const RunArgs& a) {
  const PipelineConfig cfg = load_with_overrides(a);
  BatchOptions opts;
  opts.limit = a.limit;
  opts.seed = a.seed;
  auto client = std::make_shared<LlmClient>(make_http_transport());
  const BatchSummary s = run_batch(std::filesystem::path(a.manifest), cfg, a.out, client, opts);
  fmt::print(stderr, "selected {} skipped {} written {} failed {}\n", s.selected, s.skipped, s.written, s.failed);
  return s.failed > 0 ? kExitPartial : kExitOk;
}

int cmd_report(const ReportArgs& a) {
  auto format = parse_table_format(a.format);
  if (!format) throw Error(ErrorCode::kConfig, "unknown format '" + a.format + "' (markdown or tsv)");
  const std::string text = render_tables(build_report(a.runs, a.manifest), *format);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(a.out, std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + a.out + "'");
  }
  return kExitOk;
}

int cmd_validate(const std::string& config) {
  const PipelineConfig cfg = load_config(config);
  fmt::print("ok: strategy {} composition {} vlm {}\n", to_string(cfg.strategy), to_string(cfg.composition),
             cfg.vlm_endpoint.model_id);
  return kExitOk;
}

int cmd_serve(ServeArgs a) {
  if (a.admin_token.empty()) {
    if (const char* t = std::getenv("CHARTPOT_ADMIN_TOKEN")) a.admin_token = t;
  }
  if (a.admin_token.empty()) throw Error(ErrorCode::kConfig, "an admin token is required (--admin-token or CHARTPOT_ADMIN_TOKEN)");
  const auto manifest = load_manifest(a.manifest);
  const SystemRuns sa{a.label_a, read_runs(std::filesystem::path(a.runs_a))};
  const SystemRuns sb{a.label_b, read_runs(std::filesystem::path(a.runs_b))};
  PairSample sample = sample_pairs(sa, sb, manifest, a.per_type, a.seed);
  for (const auto& w : sample.warnings) fmt::print(stderr, "warning: {}\n", w);
  HumanEvalOptions opts;
  opts.pairs = std::move(sample.pairs);
  opts.choice_log = a.log;
  opts.image_dir = a.images;
  opts.admin_token = a.admin_token;
  opts.evaluators = a.evaluators;
  HumanEvalServer server(std::move(opts));
  fmt::print(stderr, "serving {} pairs on http://{}:{}\n", server.store().pairs().size(), a.host, a.port);
  server.run(a.port, a.host);
  return kExitOk;
}

int cmd_mock(const std::string& script, int port) {
  MockModelServer server(ScriptedModel::load(script));
  server.start(port);
  fmt::print("{}\n", server.base_url());
  std::fflush(stdout);
  std::string line;
  while (std::getline(std::cin, line)) {
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chartpot: chart summarization with generated statistics programs"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the pipeline over a manifest");
  run_cmd->add_option("--manifest", run.manifest, "Manifest (JSON lines)")->required();
  run_cmd->add_option("--config", run.config, "Pipeline config (JSON)")->required();
  run_cmd->add_option("--out", run.out, "Run-record output (JSON lines, appended)")->required();
  run_cmd->add_option("--strategy", run.strategy, "Direct, MCoT, PoT or PoTTemplate");
  run_cmd->add_option("--composition", run.composition,
                      "Title, DictTitle, StatsTitle, DictStatsTitle or DictStatsTTitle");
  run_cmd->add_option("--limit", run.limit, "Process the first N charts");
  run_cmd->add_option("--seed", run.seed, "Shuffle charts with this seed before --limit");
  run_cmd->add_option("--workers", run.workers, "Worker threads");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Metric tables from run records");
  report_cmd->add_option("--runs", report.runs)->required();
  report_cmd->add_option("--manifest", report.manifest)->required();
  report_cmd->add_option("--format", report.format, "markdown or tsv");
  report_cmd->add_option("--out", report.out, "Write to a file instead of stdout");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("humaneval-serve", "Serve the blinded pairwise preference study");
  serve_cmd->add_option("--runs-a", serve.runs_a)->required();
  serve_cmd->add_option("--runs-b", serve.runs_b)->required();
  serve_cmd->add_option("--label-a", serve.label_a);
  serve_cmd->add_option("--label-b", serve.label_b);
  serve_cmd->add_option("--manifest", serve.manifest)->required();
  serve_cmd->add_option("--per-type", serve.per_type);
  serve_cmd->add_option("--seed", serve.seed);
  serve_cmd->add_option("--log", serve.log, "Append-only choice log")->required();
  serve_cmd->add_option("--images", serve.images, "Directory served under /images/");
  serve_cmd->add_option("--admin-token", serve.admin_token, "Token for GET /scores");
  serve_cmd->add_option("--evaluators", serve.evaluators, "Score divisor (default: evaluators seen)");
  serve_cmd->add_option("--host", serve.host);
  serve_cmd->add_option("--port", serve.port);

  std::string validate_config;
  auto* validate_cmd = app.add_subcommand("validate-config", "Check a pipeline config");
  validate_cmd->add_option("--config", validate_config)->required();

  std::string mock_script;
  int mock_port = 0;
  auto* mock_cmd = app.add_subcommand("mock-serve", "Serve a scripted mock model until stdin closes");
  mock_cmd->add_option("--script", mock_script)->required();
  mock_cmd->add_option("--port", mock_port);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*report_cmd) return cmd_report(report);
    if (*serve_cmd) return cmd_serve(serve);
    if (*validate_cmd) return cmd_validate(validate_config);
    if (*mock_cmd) return cmd_mock(mock_script, mock_port);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}: {}\n", to_string(e.code()), e.what());
    const bool config = e.code() == ErrorCode::kConfig || e.code() == ErrorCode::kAuthMissing;
    return config ? kExitConfig : kExitPartial;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitPartial;
  }
  return kExitOk;
}
