#include "chartpot/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>
#include <tuple>
#include <unordered_map>

#include "chartpot/error.hpp"
#include "chartpot/manifest.hpp"
#include "chartpot/pipeline.hpp"
#include "chartpot/run_io.hpp"

namespace chartpot {

namespace {

using RunKey = std::tuple<std::string, Strategy, InputComposition>;

void require_credentials(const ModelEndpoint& e) {
  if (e.api_key_env.empty()) return;
  const char* key = std::getenv(e.api_key_env.c_str());
  if (key == nullptr || *key == '\0') throw Error(ErrorCode::kAuthMissing, e.api_key_env);
}

RunRecord internal_failure(const ChartRecord& chart, const PipelineConfig& cfg, const std::string& what) {
  RunRecord r;
  r.chart_id = chart.id;
  r.strategy = cfg.strategy;
  r.input_composition = cfg.composition;
  r.failure = FailureClass{FailureStage::kSummarize, FailureCategory::kOther, "internal error: " + what};
  return r;
}

std::string row_label(Strategy s, InputComposition c) {
  if (s == Strategy::kDirect || s == Strategy::kMCoT) return std::string(to_string(s));
  return fmt::format("{}|{}", to_string(s), to_string(c));
}

std::string fixed(double v) { return fmt::format("{:.4f}", v); }

}  // namespace

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t k = 0; k < n; ++k) idx[k] = k;
  std::mt19937_64 rng(seed);
  for (std::size_t k = n; k > 1; --k) {
    const std::size_t j = static_cast<std::size_t>(rng() % k);
    std::swap(idx[k - 1], idx[j]);
  }
  return idx;
}

BatchSummary run_batch(std::span<const ChartRecord> charts, const PipelineConfig& cfg,
                       const std::filesystem::path& out, std::shared_ptr<LlmClient> client,
                       const BatchOptions& options) {
  cfg.validate();
  require_credentials(cfg.vlm_endpoint);
  if (cfg.uses_generated_stats()) require_credentials(*cfg.coder_endpoint);
  if (cfg.repair_endpoint && cfg.runs_dict_stage()) require_credentials(*cfg.repair_endpoint);
  const Pipeline pipeline(cfg, std::move(client));

  std::vector<const ChartRecord*> order;
  order.reserve(charts.size());
  if (options.seed) {
    for (std::size_t k : seeded_permutation(charts.size(), *options.seed)) order.push_back(&charts[k]);
  } else {
    for (const auto& c : charts) order.push_back(&c);
  }
  if (options.limit && *options.limit < order.size()) order.resize(*options.limit);

  BatchSummary summary;
  summary.selected = order.size();

  std::set<RunKey> done;
  for (const auto& r : read_runs(out)) done.emplace(r.chart_id, r.strategy, r.input_composition);
  std::vector<const ChartRecord*> todo;
  for (const ChartRecord* c : order) {
    if (done.count({c->id, cfg.strategy, cfg.composition}) != 0) {
      ++summary.skipped;
    } else {
      todo.push_back(c);
    }
  }

  std::ofstream sink(out, std::ios::binary | std::ios::app);
  if (!sink) throw Error(ErrorCode::kIo, "cannot open '" + out.string() + "' for appending");
  if (todo.empty()) return summary;

  // Workers fill slots; this thread writes them strictly in chart order.
  std::vector<std::optional<RunRecord>> slots(todo.size());
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      RunRecord rec;
      try {
        rec = pipeline.run_chart(*todo[k]);
      } catch (const std::exception& e) {
        rec = internal_failure(*todo[k], cfg, e.what());
      }
      {
        std::lock_guard lock(mu);
        slots[k] = std::move(rec);
      }
      ready.notify_all();
    }
  };
  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.effective_workers()), todo.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);

  std::optional<Error> write_error;
  for (std::size_t k = 0; k < todo.size(); ++k) {
    RunRecord rec;
    {
      std::unique_lock lock(mu);
      ready.wait(lock, [&] { return slots[k].has_value(); });
      rec = std::move(*slots[k]);
      slots[k].reset();
    }
    if (write_error) continue;
    try {
      persist_run(rec, sink);
      sink.flush();
    } catch (const Error& e) {
      write_error = e;
      continue;
    }
    ++summary.written;
    if (rec.failure) ++summary.failed;
    if (options.on_record) options.on_record(rec);
  }
  for (auto& t : pool) t.join();
  if (write_error) throw *write_error;
  return summary;
}

BatchSummary run_batch(const std::filesystem::path& manifest, const PipelineConfig& cfg,
                       const std::filesystem::path& out, std::shared_ptr<LlmClient> client,
                       const BatchOptions& options) {
  cfg.validate();
  const std::vector<ChartRecord> charts = load_manifest(manifest);
  return run_batch(charts, cfg, out, std::move(client), options);
}

EvalReport build_report(std::span<const RunRecord> runs, std::span<const ChartRecord> manifest) {
  std::unordered_map<std::string, const ChartRecord*> by_id;
  for (const auto& c : manifest) by_id.emplace(c.id, &c);

  struct Group {
    std::array<std::vector<ScoredPair>, kReportColumns> pairs;
    std::size_t runs = 0;
    std::int64_t runtime_ms = 0;
  };
  std::map<std::pair<Strategy, InputComposition>, Group> groups;
  std::map<std::pair<FailureStage, FailureCategory>, std::size_t> histogram;
  EvalReport report;

  for (const auto& run : runs) {
    auto it = by_id.find(run.chart_id);
    if (it == by_id.end()) throw Error(ErrorCode::kOrphanRun, run.chart_id);
    const ChartRecord& chart = *it->second;
    Group& g = groups[{run.strategy, run.input_composition}];
    ++g.runs;
    for (const auto& [stage, ms] : run.timings_ms) g.runtime_ms += ms;
    if (run.failure) ++histogram[{run.failure->stage, run.failure->category}];
    if (chart.gold_summary.empty()) continue;
    ScoredPair pair{run.summary.value_or(std::string()), {chart.gold_summary}};
    g.pairs[static_cast<std::size_t>(chart.chart_type)].push_back(pair);
    g.pairs[kAllColumn].push_back(std::move(pair));
  }

  for (const auto& [key, g] : groups) {
    ReportRow row;
    row.strategy = key.first;
    row.composition = key.second;
    row.label = row_label(key.first, key.second);
    row.runs = g.runs;
    row.runtime_ms = g.runtime_ms;
    for (std::size_t col = 0; col < kReportColumns; ++col) row.cells[col] = score_corpus(g.pairs[col]);
    report.runtime_ms += g.runtime_ms;
    report.rows.push_back(std::move(row));
  }
  for (const auto& [key, count] : histogram) report.failure_histogram.push_back({key.first, key.second, count});
  return report;
}

EvalReport build_report(const std::filesystem::path& runs, const std::filesystem::path& manifest) {
  if (!std::filesystem::exists(runs)) throw Error(ErrorCode::kIo, "runs file '" + runs.string() + "' not found");
  const std::vector<RunRecord> records = read_runs(runs);
  const std::vector<ChartRecord> charts = load_manifest(manifest);
  return build_report(records, charts);
}

std::optional<TableFormat> parse_table_format(std::string_view s) {
  if (s == "markdown" || s == "md") return TableFormat::kMarkdown;
  if (s == "tsv") return TableFormat::kTsv;
  return std::nullopt;
}

std::string render_tables(const EvalReport& report, TableFormat format) {
  std::vector<std::string> header = {"Configuration", "Metric"};
  for (ChartType t : kAllChartTypes) header.emplace_back(to_string(t));
  header.emplace_back("All");

  std::vector<std::vector<std::string>> rows;
  for (const auto& r : report.rows) {
    auto line = [&](std::string metric, auto&& cell) {
      std::vector<std::string> out = {r.label, std::move(metric)};
      for (const auto& c : r.cells) out.push_back(cell(c));
      rows.push_back(std::move(out));
    };
    line("BLEU", [](const MetricReport& m) { return m.n == 0 ? std::string("-") : fixed(m.bleu); });
    line("CIDEr", [](const MetricReport& m) { return m.cider_defined ? fixed(m.cider) : std::string("-"); });
    line("ROUGE-1", [](const MetricReport& m) { return m.n == 0 ? std::string("-") : fixed(m.rouge1_f1); });
    line("ROUGE-L", [](const MetricReport& m) { return m.n == 0 ? std::string("-") : fixed(m.rougeL_f1); });
    line("n", [](const MetricReport& m) { return std::to_string(m.n); });
  }

  std::string out;
  if (format == TableFormat::kTsv) {
    auto emit = [&](const std::vector<std::string>& cells) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k > 0) out += '\t';
        out += cells[k];
      }
      out += '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
    return out;
  }

  auto emit = [&](const std::vector<std::string>& cells) {
    out += '|';
    for (const auto& c : cells) out += ' ' + c + " |";
    out += '\n';
  };
  emit(header);
  out += '|';
  for (std::size_t k = 0; k < header.size(); ++k) out += k < 2 ? " --- |" : " ---: |";
  out += '\n';
  for (const auto& r : rows) emit(r);

  out += '\n';
  emit({"Stage", "Category", "Count"});
  out += "| --- | --- | ---: |\n";
  for (const auto& f : report.failure_histogram) {
    emit({std::string(to_string(f.stage)), std::string(to_string(f.category)), std::to_string(f.count)});
  }
  return out;
}

}  // namespace chartpot
