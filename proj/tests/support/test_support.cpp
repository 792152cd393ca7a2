#include "test_support.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "chartpot/interpreter.hpp"
#include "chartpot/pyliteral.hpp"

namespace chartpot::testing {

namespace fs = std::filesystem;

fs::path data_path(const std::string& relative) { return fs::path(CHARTPOT_TEST_DATA) / relative; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TempDir::TempDir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  path_ = fs::temp_directory_path() / ("chartpot-" + tag + "-" + std::to_string(rng()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

const char* const kWords[] = {"Rep", "Dem", "Ind", "Total", "x", "y", "share", "2019", "2020", "value", "a.b", "n/a"};

std::int64_t pick(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

ValueTree random_number(std::mt19937_64& rng) {
  switch (pick(rng, 0, 4)) {
    case 0: return ValueTree::integer(pick(rng, -1000, 1000));
    case 1: return ValueTree::integer(pick(rng, -4'000'000'000'000'000'000, 4'000'000'000'000'000'000));
    case 2: return ValueTree::real(static_cast<double>(pick(rng, -100000, 100000)) / 100.0, "%");
    case 3: return ValueTree::real(std::uniform_real_distribution<double>(-1e6, 1e6)(rng));
    default: return ValueTree::real(static_cast<double>(pick(rng, 0, 40)) * 0.1);
  }
}

ValueTree random_scalar(std::mt19937_64& rng) {
  switch (pick(rng, 0, 5)) {
    case 0: return ValueTree::string(kWords[pick(rng, 0, std::size(kWords) - 1)]);
    case 1: return ValueTree::boolean(pick(rng, 0, 1) == 1);
    case 2: return ValueTree::null();
    default: return random_number(rng);
  }
}

ValueTree random_key(std::mt19937_64& rng, std::size_t index) {
  switch (pick(rng, 0, 5)) {
    case 0: return ValueTree::integer(pick(rng, 1990, 2030));
    case 1: return ValueTree::real(static_cast<double>(pick(rng, 0, 20)) / 4.0);
    default: return ValueTree::string(std::string(kWords[pick(rng, 0, std::size(kWords) - 1)]) + std::to_string(index));
  }
}

ValueTree random_node(std::mt19937_64& rng, int depth) {
  const std::int64_t roll = depth <= 0 ? pick(rng, 0, 2) : pick(rng, 0, 6);
  if (roll <= 1) return random_scalar(rng);
  if (roll == 2) {
    Sequence series;
    const std::int64_t n = pick(rng, 0, 6);
    for (std::int64_t k = 0; k < n; ++k) series.push_back(random_number(rng));
    return ValueTree::sequence(std::move(series));
  }
  if (roll == 3) {
    Sequence items;
    const std::int64_t n = pick(rng, 1, 4);
    for (std::int64_t k = 0; k < n; ++k) items.push_back(random_node(rng, depth - 1));
    return ValueTree::sequence(std::move(items));
  }
  Mapping entries;
  const std::int64_t n = pick(rng, 0, 5);
  for (std::int64_t k = 0; k < n; ++k) {
    ValueTree key = random_key(rng, static_cast<std::size_t>(k));
    bool duplicate = false;
    for (const auto& e : entries) duplicate = duplicate || e.key == key;
    if (duplicate) continue;
    entries.push_back({std::move(key), random_node(rng, depth - 1)});
  }
  return ValueTree::mapping(std::move(entries));
}

}  // namespace

ValueTree random_chart_tree(std::mt19937_64& rng, int max_depth) {
  Mapping entries;
  entries.push_back({ValueTree::string("title"), ValueTree::string("Random chart")});
  const std::int64_t n = pick(rng, 1, 5);
  for (std::int64_t k = 0; k < n; ++k) {
    entries.push_back({ValueTree::string("k" + std::to_string(k)), random_node(rng, max_depth - 1)});
  }
  return ValueTree::mapping(std::move(entries));
}

namespace {

std::string entry(const std::string& body) {
  return "def get_summary_statistics(chart_dict):\n" + body;
}

}  // namespace

std::vector<ForbiddenProgram> forbidden_programs() {
  return {
      {"import os", "import os\n" + entry("    return {'cwd': os.getcwd()}\n")},
      {"import sys", "import sys\n" + entry("    return {'argv': sys.argv}\n")},
      {"import subprocess", entry("    import subprocess\n    return {'o': subprocess.run(['ls'])}\n")},
      {"import socket", "import socket\n" + entry("    return {'s': 1}\n")},
      {"from os import system", "from os import system\n" + entry("    system('true')\n    return {}\n")},
      {"import os.path", "import os.path\n" + entry("    return {}\n")},
      {"from math import *", "from math import *\n" + entry("    return {'pi': pi}\n")},
      {"from statistics import forbidden", "from statistics import _sum\n" + entry("    return {}\n")},
      {"open read", entry("    return {'data': open('/etc/passwd').read()}\n")},
      {"open write", entry("    f = open('/tmp/chartpot-forbidden', 'w')\n    f.write('x')\n    return {}\n")},
      {"with open", entry("    with open('/etc/hosts') as f:\n        return {'h': f.read()}\n")},
      {"eval", entry("    return {'v': eval('1 + 1')}\n")},
      {"exec", entry("    exec('x = 1')\n    return {}\n")},
      {"compile", entry("    return {'c': compile('1', 'f', 'eval')}\n")},
      {"__import__", entry("    return {'os': __import__('os').getcwd()}\n")},
      {"getattr", entry("    return {'g': getattr(chart_dict, 'keys')}\n")},
      {"setattr", entry("    setattr(chart_dict, 'x', 1)\n    return {}\n")},
      {"globals", entry("    return {'g': globals()}\n")},
      {"locals", entry("    return {'l': locals()}\n")},
      {"vars", entry("    return {'v': vars()}\n")},
      {"dir", entry("    return {'d': dir(chart_dict)}\n")},
      {"type escape", entry("    return {'t': type(chart_dict)}\n")},
      {"dunder class", entry("    return {'c': chart_dict.__class__}\n")},
      {"subclasses walk", entry("    return {'s': ().__class__.__bases__[0].__subclasses__()}\n")},
      {"func globals", entry("    f = lambda: 0\n    return {'g': f.__globals__}\n")},
      {"input", entry("    return {'i': input()}\n")},
      {"exit", entry("    exit(0)\n    return {}\n")},
      {"breakpoint", entry("    breakpoint()\n    return {}\n")},
      {"class definition", "class Escape:\n    pass\n" + entry("    return {}\n")},
      {"f-string escape", entry("    return {'s': f\"{__import__('os').system('true')}\"}\n")},
  };
}

namespace {

std::string dict_lines(int count, int from) {
  std::string out;
  for (int k = 0; k < count; ++k) out += "  'k" + std::to_string(from + k) + "': " + std::to_string(k) + ",\n";
  return out;
}

ValueTree chart_with(const std::string& key, ValueTree value) {
  Mapping m;
  m.push_back({ValueTree::string("n"), ValueTree::integer(3)});
  m.push_back({ValueTree::string(key), std::move(value)});
  return ValueTree::mapping(std::move(m));
}

}  // namespace

std::vector<TaxonomyCase> taxonomy_cases() {
  using K = TaxonomyCase::Kind;
  std::vector<TaxonomyCase> out;
  // Line 1 holds '{', so the offending line is 2 + count.
  out.push_back({"list cut off", K::kDict, "{\n" + dict_lines(38, 0) + "  'last': [1, 2,", {}, FailureStage::kDictParse,
                 FailureCategory::kTruncated, "'[' was never closed (<string>, line 40)"});
  out.push_back({"dict cut off", K::kDict, "{\n" + dict_lines(72, 0) + "  'last': {'a': 1,", {},
                 FailureStage::kDictParse, FailureCategory::kTruncated, "'{' was never closed (<string>, line 74)"});

  const std::string add = entry("    return {'total': 0 + chart_dict['v']}\n");
  Sequence list{ValueTree::integer(1)};
  Mapping dict{{ValueTree::string("a"), ValueTree::integer(1)}};
  out.push_back({"int + str", K::kProgram, add, chart_with("v", ValueTree::string("12")), FailureStage::kCodeExec,
                 FailureCategory::kTypeMismatch, "unsupported operand type(s) for +: 'int' and 'str'"});
  out.push_back({"int + list", K::kProgram, add, chart_with("v", ValueTree::sequence(list)), FailureStage::kCodeExec,
                 FailureCategory::kTypeMismatch, "unsupported operand type(s) for +: 'int' and 'list'"});
  out.push_back({"int + dict", K::kProgram, add, chart_with("v", ValueTree::mapping(dict)), FailureStage::kCodeExec,
                 FailureCategory::kTypeMismatch, "unsupported operand type(s) for +: 'int' and 'dict'"});
  out.push_back({"int + None", K::kProgram, add, chart_with("v", ValueTree::null()), FailureStage::kCodeExec,
                 FailureCategory::kTypeMismatch, "unsupported operand type(s) for +: 'int' and 'NoneType'"});

  out.push_back({"values on int", K::kProgram, entry("    return {'v': list(chart_dict['n'].values())}\n"),
                 chart_with("v", ValueTree::integer(1)), FailureStage::kCodeExec, FailureCategory::kAttributeError,
                 "'int' object has no attribute 'values'"});
  out.push_back({"int of income bracket", K::kProgram, entry("    return {'v': int(chart_dict['income'])}\n"),
                 chart_with("income", ValueTree::string("$30K-$99999")), FailureStage::kCodeExec,
                 FailureCategory::kValueError, "invalid literal for int() with base 10: '$30K-$99999'"});
  out.push_back({"string cut off", K::kDict, "{\n" + dict_lines(22, 0) + "  'a': 'unclosed\n}", {},
                 FailureStage::kDictParse, FailureCategory::kSyntaxError,
                 "unterminated string literal (detected at line 24) (<string>, line 24)"});
  std::string pad;
  for (int k = 0; k < 42; ++k) pad += "    x" + std::to_string(k) + " = " + std::to_string(k) + "\n";
  out.push_back({"f-string cut off", K::kProgram, entry(pad + "    return {'t': f'{chart_dict}\n"),
                 chart_with("v", ValueTree::integer(1)), FailureStage::kCodeParse, FailureCategory::kSyntaxError,
                 "unterminated f-string literal (detected at line 44) (<string>, line 44)"});
  return out;
}

std::optional<FailureClass> classify(const TaxonomyCase& c) {
  if (c.kind == TaxonomyCase::Kind::kDict) return parse_model_dict(c.text).failure;
  return run_program_source(c.text, c.chart).failure;
}

std::vector<E2eConfig> e2e_matrix() {
  return {
      {Strategy::kDirect, InputComposition::kTitle},
      {Strategy::kMCoT, InputComposition::kTitle},
      {Strategy::kPoT, InputComposition::kTitle},
      {Strategy::kPoT, InputComposition::kDictTitle},
      {Strategy::kPoT, InputComposition::kStatsTitle},
      {Strategy::kPoT, InputComposition::kDictStatsTitle},
      {Strategy::kPoT, InputComposition::kDictStatsTTitle},
      {Strategy::kPoTTemplate, InputComposition::kDictStatsTitle},
  };
}

PipelineConfig e2e_config(const std::string& base_url, Strategy strategy, InputComposition composition) {
  auto endpoint = [&](const char* model, bool images) {
    ModelEndpoint e;
    e.base_url = base_url;
    e.model_id = model;
    e.api_key_env.clear();
    e.supports_images = images;
    e.max_retries = 0;
    e.request_timeout_ms = 10'000;
    e.max_concurrency = 4;
    return e;
  };
  PipelineConfig cfg;
  cfg.vlm_endpoint = endpoint(kVlmModel, true);
  cfg.coder_endpoint = endpoint(kCoderModel, false);
  cfg.repair_endpoint = endpoint(kRepairModel, false);
  cfg.strategy = strategy;
  cfg.composition = composition;
  cfg.record_timings = false;
  cfg.workers = 3;
  return cfg;
}

}  // namespace chartpot::testing
