#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "chartpot/interpreter.hpp"
#include "chartpot/metrics.hpp"
#include "chartpot/pyliteral.hpp"
#include "chartpot/template_stats.hpp"

using namespace chartpot;

namespace {

// Pew-style bar chart: `groups` categories with four numeric series each.
ValueTree bar_chart(int groups) {
  Mapping data;
  for (int g = 0; g < groups; ++g) {
    Mapping parties;
    for (const char* p : {"Rep", "Dem", "Ind", "Other"}) {
      parties.push_back({ValueTree::string(p), ValueTree::integer((g * 37 + p[0]) % 100)});
    }
    data.push_back({ValueTree::string("group" + std::to_string(g)), ValueTree::mapping(std::move(parties))});
  }
  Mapping root{{ValueTree::string("title"), ValueTree::string("Bench")}, {ValueTree::string("data"), ValueTree::mapping(std::move(data))}};
  return ValueTree::mapping(std::move(root));
}

std::vector<ScoredPair> corpus(std::size_t n) {
  std::mt19937_64 rng(5);
  const char* words[] = {"support", "rose", "from", "45%", "in", "2019", "to", "52%", "democrats", "republicans",
                         "the", "share", "of", "adults", "declined", "sharply", "."};
  auto sentence = [&] {
    std::string s;
    for (int k = 0; k < 24; ++k) s += std::string(words[rng() % std::size(words)]) + " ";
    return s;
  };
  std::vector<ScoredPair> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back({sentence(), {sentence()}});
  return out;
}

void BM_Tokenize(benchmark::State& state) {
  const std::string text = "Support for the policy rose from 45% in 2019 to 52% in 2021, while 1,250.50 remained.";
  for (auto _ : state) benchmark::DoNotOptimize(tokenize(text));
}
BENCHMARK(BM_Tokenize);

void BM_CorpusBleu(benchmark::State& state) {
  const auto pairs = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(corpus_bleu(pairs));
}
BENCHMARK(BM_CorpusBleu)->Arg(20)->Arg(1393);

void BM_Cider(benchmark::State& state) {
  const auto pairs = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cider(pairs));
}
BENCHMARK(BM_Cider)->Arg(20)->Arg(1393);

void BM_ParseLiteral(benchmark::State& state) {
  const std::string text = "```python\n" + to_python_literal(bar_chart(static_cast<int>(state.range(0)))) + "\n```";
  for (auto _ : state) benchmark::DoNotOptimize(parse_model_dict(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseLiteral)->Arg(10)->Arg(200);

void BM_TemplateNative(benchmark::State& state) {
  const ValueTree chart = bar_chart(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(template_statistics(chart));
}
BENCHMARK(BM_TemplateNative)->Arg(10)->Arg(200);

void BM_TemplateSandboxed(benchmark::State& state) {
  const ValueTree chart = bar_chart(static_cast<int>(state.range(0)));
  const ProgramParse program = parse_program(kCanonicalTemplateSource);
  for (auto _ : state) benchmark::DoNotOptimize(execute(*program.ast, chart));
}
BENCHMARK(BM_TemplateSandboxed)->Arg(10)->Arg(200);

void BM_StepBudget(benchmark::State& state) {
  SandboxLimits limits;
  limits.max_steps = state.range(0);
  limits.wall_timeout_ms = 60'000;
  const ProgramParse program = parse_program("def get_summary_statistics(chart_dict):\n    while True:\n        pass\n");
  for (auto _ : state) benchmark::DoNotOptimize(execute(*program.ast, ValueTree::mapping(), limits));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StepBudget)->Arg(100'000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
