#include "chartpot/pipeline.hpp"

#include <fmt/format.h>

#include <chrono>
#include <filesystem>

#include "chartpot/error.hpp"
#include "chartpot/interpreter.hpp"
#include "chartpot/template_stats.hpp"

namespace chartpot {

namespace {

using Clock = std::chrono::steady_clock;

std::string_view ltrim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\n' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  return s;
}

// Model text continues the prefill unless the model restarted the answer
// itself (echoed prefill, fresh fence, or a full definition for code).
std::string continue_prefill(std::string_view prefill, std::string_view text, std::string_view restart_marker) {
  const std::string_view body = ltrim(text);
  const std::string_view head = ltrim(prefill);
  const bool restarted = body.rfind("```", 0) == 0 || (!head.empty() && body.rfind(head, 0) == 0) ||
                         (!restart_marker.empty() && body.find(restart_marker) != std::string_view::npos);
  if (restarted) return std::string(text);
  return std::string(prefill) + std::string(text);
}

// Without an image attachment the placeholder line is dropped.
std::string without_placeholder(std::string text) {
  const std::string line = std::string(kImagePlaceholder) + "\n";
  if (auto at = text.find(line); at != std::string::npos) return text.erase(at, line.size());
  if (auto at = text.find(kImagePlaceholder); at != std::string::npos) text.erase(at, kImagePlaceholder.size());
  return text;
}

ChatTurn user_turn(std::string text, const std::string& image, bool attach) {
  if (attach && !image.empty()) {
    ChatTurn t = ChatTurn::user(std::move(text));
    t.image_ref = image;
    return t;
  }
  return ChatTurn::user(without_placeholder(std::move(text)));
}

FailureClass model_failure(FailureStage stage, const Error& e) {
  const auto category = e.code() == ErrorCode::kTimeout ? FailureCategory::kBudgetExceeded : FailureCategory::kOther;
  return FailureClass{stage, category, fmt::format("{}: {}", to_string(e.code()), e.what())};
}

bool needs_dict_slot(InputComposition c) {
  return c == InputComposition::kDictTitle || c == InputComposition::kDictStatsTitle ||
         c == InputComposition::kDictStatsTTitle;
}

bool needs_stats_slot(InputComposition c) {
  return c == InputComposition::kStatsTitle || c == InputComposition::kDictStatsTitle ||
         c == InputComposition::kDictStatsTTitle;
}

void add_model_id(RunRecord& r, const StageOutput& out) {
  for (const auto& [stage, id] : r.model_ids) {
    if (stage == out.stage) return;
  }
  r.model_ids.emplace_back(out.stage, out.model_id);
}

void add_timing(RunRecord& r, const StageOutput& out) {
  for (auto& [stage, ms] : r.timings_ms) {
    if (stage == out.stage) {
      ms += out.elapsed_ms;
      return;
    }
  }
  r.timings_ms.emplace_back(out.stage, out.elapsed_ms);
}

}  // namespace

struct Pipeline::Call {
  std::string stage;
  int attempt = 1;
  const ModelEndpoint* endpoint = nullptr;
  std::vector<ChatTurn> turns;
  const DecodeParams* params = nullptr;
  Completion completion;  // filled by call()
};

Pipeline::Pipeline(PipelineConfig cfg, std::shared_ptr<LlmClient> client)
    : cfg_(std::move(cfg)), client_(std::move(client)) {
  cfg_.validate();
  if (!client_) throw Error(ErrorCode::kConfig, "pipeline needs a model client");
}

std::string Pipeline::resolve_image(const ChartRecord& chart) const {
  const std::string& ref = chart.image_path;
  if (ref.empty()) return {};
  if (ref.rfind("http://", 0) == 0 || ref.rfind("https://", 0) == 0 || ref.rfind("data:", 0) == 0) return ref;
  std::filesystem::path p(ref);
  if (p.is_relative() && !cfg_.image_root.empty()) p = std::filesystem::path(cfg_.image_root) / p;
  return p.string();
}

StageOutput Pipeline::call(Call& c) const {
  StageOutput out;
  out.stage = c.stage;
  out.attempt = c.attempt;
  out.model_id = c.endpoint->model_id;
  out.prompt = render_chat(c.endpoint->chat_template, c.turns);
  const auto start = Clock::now();
  try {
    c.completion = client_->complete(*c.endpoint, c.turns, *c.params);
  } catch (...) {
    if (cfg_.record_timings) {
      out.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
    }
    throw;
  }
  if (cfg_.record_timings) {
    out.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
  }
  out.raw_text = c.completion.text;
  return out;
}

DictStageResult Pipeline::stage_chart_to_dict(const ChartRecord& chart) const {
  DictStageResult res;
  const std::string image = resolve_image(chart);

  // One attempt on `endpoint`; returns true when a dictionary was accepted.
  auto attempt = [&](const std::string& stage, const ModelEndpoint& endpoint, std::string user_text) {
    Call c;
    c.stage = stage;
    c.endpoint = &endpoint;
    c.params = &cfg_.dict_decode;
    c.turns = {user_turn(std::move(user_text), image, endpoint.supports_images),
               ChatTurn::assistant(cfg_.prompts.dict_prefill)};
    StageOutput out;
    try {
      out = call(c);
    } catch (const Error& e) {
      out.stage = stage;
      out.model_id = endpoint.model_id;
      out.prompt = render_chat(endpoint.chat_template, c.turns);
      out.status = StageStatus::kFailed;
      out.failure = model_failure(FailureStage::kDictGen, e);
      res.failure = out.failure;
      res.outputs.push_back(std::move(out));
      return false;
    }
    if (ltrim(c.completion.text).empty()) {
      out.status = StageStatus::kFailed;
      out.failure = FailureClass{FailureStage::kDictGen, FailureCategory::kEmptyOutput, "empty response"};
      res.failure = out.failure;
      res.outputs.push_back(std::move(out));
      return false;
    }
    out.raw_text = continue_prefill(cfg_.prompts.dict_prefill, c.completion.text, {});
    ParseOutcome parsed = parse_model_dict(out.raw_text);
    std::optional<FailureClass> failure = parsed.failure;
    if (parsed.ok()) failure = validate_executable(*parsed.result, cfg_.limits);
    if (failure) {
      failure->stage = FailureStage::kDictParse;
      out.status = StageStatus::kFailed;
      out.failure = failure;
      res.failure = std::move(failure);
      res.outputs.push_back(std::move(out));
      return false;
    }
    for (Repair r : parsed.repairs_applied) out.notes.emplace_back(to_string(r));
    out.artifact = parsed.result;
    res.tree = std::move(parsed.result);
    res.repairs = std::move(parsed.repairs_applied);
    res.failure.reset();
    res.outputs.push_back(std::move(out));
    return true;
  };

  if (attempt("chart_to_dict", cfg_.vlm_endpoint, cfg_.prompts.dict_gen)) return res;
  if (!cfg_.repair_endpoint) {
    res.outputs.back().notes.emplace_back(kMissingRepairEndpointNote);
    return res;
  }
  const std::string& first_raw = res.outputs.back().raw_text;
  if (attempt("dict_repair", *cfg_.repair_endpoint, cfg_.prompts.dict_repair + "\n" + first_raw)) {
    res.repair_model_used = true;
    res.outputs.back().notes.emplace_back(kRepairModelUsedNote);
  }
  return res;
}

StatsStageResult Pipeline::stage_dict_to_stats(const ValueTree& tree) const {
  StatsStageResult res;
  auto run_template = [&](StageStatus status) {
    StageOutput out;
    out.stage = "template_stats";
    out.status = status;
    const auto start = Clock::now();
    StatsMap stats = template_statistics(tree);
    if (cfg_.record_timings) {
      out.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
    }
    out.artifact = stats.to_tree();
    if (status == StageStatus::kFallback) out.notes.emplace_back(kTemplateFallbackNote);
    if (stats.empty() && cfg_.strategy == Strategy::kPoT) {
      out.status = StageStatus::kFailed;
      out.failure = FailureClass{FailureStage::kCodeExec, FailureCategory::kEmptyOutput,
                                 "EmptyStats: the template found no numeric data"};
      res.failure = out.failure;
      res.empty_stats = true;
    } else {
      res.stats = std::move(stats);
      res.provenance = StatsProvenance::kTemplate;
    }
    res.outputs.push_back(std::move(out));
  };

  if (!cfg_.uses_generated_stats()) {
    run_template(StageStatus::kOk);
    return res;
  }

  const ModelEndpoint& coder = *cfg_.coder_endpoint;
  const std::string user = fill_slots(cfg_.prompts.pot_user, {{"chart_dict", to_python_literal(tree)}});
  std::optional<FailureClass> last;
  for (int attempt = 1; attempt <= 1 + cfg_.max_code_retries; ++attempt) {
    Call c;
    c.stage = "dict_to_stats";
    c.attempt = attempt;
    c.endpoint = &coder;
    c.params = &cfg_.code_decode;
    c.turns = {ChatTurn::system(cfg_.prompts.pot_system), ChatTurn::user(user),
               ChatTurn::assistant(cfg_.prompts.pot_prefill)};
    StageOutput out;
    try {
      out = call(c);
    } catch (const Error& e) {
      out.stage = c.stage;
      out.attempt = attempt;
      out.model_id = coder.model_id;
      out.prompt = render_chat(coder.chat_template, c.turns);
      out.status = StageStatus::kFailed;
      out.failure = model_failure(FailureStage::kCodeGen, e);
      last = out.failure;
      res.outputs.push_back(std::move(out));
      continue;
    }
    out.raw_text = continue_prefill(cfg_.prompts.pot_prefill, c.completion.text, "def get_summary_statistics");
    if (c.completion.flagged) {
      out.status = StageStatus::kFailed;
      out.failure = FailureClass{
          FailureStage::kCodeGen, FailureCategory::kOther,
          fmt::format("banned substrings govern {:.0f}% of the response",
                      100.0 * banned_share(c.completion.text, cfg_.code_decode.banned_substrings))};
      last = out.failure;
      res.outputs.push_back(std::move(out));
      continue;
    }
    ExecOutcome exec = run_program_source(out.raw_text, tree, cfg_.limits, cfg_.max_comment_fraction);
    out.notes.push_back(fmt::format("steps_used={}", exec.steps_used));
    if (!exec.captured_output.empty()) out.notes.push_back("captured_output=" + exec.captured_output);
    if (exec.ok() && exec.stats->empty()) {
      exec.failure = FailureClass{FailureStage::kCodeExec, FailureCategory::kEmptyOutput,
                                  "get_summary_statistics returned no statistics"};
    }
    if (exec.failure) {
      out.status = StageStatus::kFailed;
      out.failure = exec.failure;
      last = std::move(exec.failure);
      res.outputs.push_back(std::move(out));
      continue;
    }
    out.artifact = exec.stats->to_tree();
    res.stats = std::move(exec.stats);
    res.provenance = StatsProvenance::kPoT;
    res.outputs.push_back(std::move(out));
    return res;
  }

  run_template(StageStatus::kFallback);
  if (!res.empty_stats) res.failure = std::move(last);
  return res;
}

SummaryStageResult Pipeline::stage_summarize(const ChartRecord& chart, const ValueTree* tree, const StatsMap* stats,
                                             InputComposition composition) const {
  if (needs_dict_slot(composition) && tree == nullptr) {
    throw Error(ErrorCode::kMissingSlot,
                fmt::format("composition {} needs slot dictionary_str", to_string(composition)));
  }
  if (needs_stats_slot(composition) && stats == nullptr) {
    throw Error(ErrorCode::kMissingSlot, fmt::format("composition {} needs slot summary_dict", to_string(composition)));
  }
  SlotValues slots = {{"title", chart.title}};
  if (needs_dict_slot(composition)) slots.emplace_back("dictionary_str", to_python_literal(*tree));
  if (needs_stats_slot(composition)) slots.emplace_back("summary_dict", to_python_literal(stats->to_tree()));

  Call c;
  c.stage = "summarize";
  c.endpoint = &cfg_.vlm_endpoint;
  c.params = &cfg_.summary_decode;
  c.turns = {user_turn(fill_slots(cfg_.prompts.summary_for(composition), slots), resolve_image(chart), true),
             ChatTurn::assistant(cfg_.prompts.summary_prefill)};
  SummaryStageResult res;
  res.output = call(c);
  res.output.raw_text = continue_prefill(cfg_.prompts.summary_prefill, c.completion.text, {});
  std::string summary = postprocess_summary(res.output.raw_text, cfg_.prompts.summary_prefill);
  if (summary.empty()) {
    res.failure = FailureClass{FailureStage::kSummarize, FailureCategory::kEmptyOutput, "empty summary"};
    res.output.status = StageStatus::kFailed;
    res.output.failure = res.failure;
  } else {
    res.output.artifact = ValueTree::string(summary);
    res.summary = std::move(summary);
  }
  return res;
}

RunRecord Pipeline::run_chart(const ChartRecord& chart) const {
  RunRecord rec;
  rec.chart_id = chart.id;
  rec.strategy = cfg_.strategy;
  rec.input_composition = cfg_.composition;

  auto push = [&](StageOutput out) {
    add_model_id(rec, out);
    add_timing(rec, out);
    rec.stage_outputs.push_back(std::move(out));
  };
  auto fail_summary = [&](const std::string& stage, const ModelEndpoint& endpoint, const Error& e) {
    StageOutput out;
    out.stage = stage;
    out.model_id = endpoint.model_id;
    out.status = StageStatus::kFailed;
    out.failure = model_failure(FailureStage::kSummarize, e);
    if (!rec.failure) rec.failure = out.failure;
    push(std::move(out));
  };

  if (cfg_.strategy == Strategy::kDirect || cfg_.strategy == Strategy::kMCoT) {
    const bool direct = cfg_.strategy == Strategy::kDirect;
    Call c;
    c.stage = direct ? "direct" : "mcot";
    c.endpoint = &cfg_.vlm_endpoint;
    c.params = &cfg_.summary_decode;
    c.turns = {user_turn(fill_slots(direct ? cfg_.prompts.direct : cfg_.prompts.mcot, {{"title", chart.title}}),
                         resolve_image(chart), true)};
    try {
      StageOutput out = call(c);
      std::string summary = postprocess_summary(out.raw_text, {});
      if (summary.empty()) {
        out.status = StageStatus::kFailed;
        out.failure = FailureClass{FailureStage::kSummarize, FailureCategory::kEmptyOutput, "empty summary"};
        rec.failure = out.failure;
      } else {
        out.artifact = ValueTree::string(summary);
        rec.summary = std::move(summary);
      }
      push(std::move(out));
    } catch (const Error& e) {
      fail_summary(c.stage, cfg_.vlm_endpoint, e);
    }
    return rec;
  }

  std::optional<ValueTree> tree;
  std::optional<StatsMap> stats;
  bool fallback = false;
  InputComposition composition = cfg_.composition;

  if (cfg_.runs_dict_stage()) {
    DictStageResult d = stage_chart_to_dict(chart);
    for (auto& out : d.outputs) push(std::move(out));
    if (d.failure) {
      // Without a dictionary only the title can accompany the image.
      rec.failure = d.failure;
      fallback = true;
      composition = InputComposition::kTitle;
    } else {
      tree = std::move(d.tree);
    }
  }
  if (tree && cfg_.runs_stats_stage()) {
    StatsStageResult s = stage_dict_to_stats(*tree);
    for (auto& out : s.outputs) push(std::move(out));
    rec.stats_provenance = s.provenance;
    if (s.failure) {
      rec.failure = s.failure;
      fallback = true;
    }
    if (s.empty_stats) return rec;
    stats = std::move(s.stats);
  }

  try {
    SummaryStageResult s = stage_summarize(chart, tree ? &*tree : nullptr, stats ? &*stats : nullptr, composition);
    if (fallback) {
      s.output.notes.push_back(fmt::format("composition used: {}", to_string(composition)));
      if (s.output.status == StageStatus::kOk) s.output.status = StageStatus::kFallback;
    }
    if (s.failure && !rec.failure) rec.failure = s.failure;
    rec.summary = std::move(s.summary);
    push(std::move(s.output));
  } catch (const Error& e) {
    fail_summary("summarize", cfg_.vlm_endpoint, e);
  }
  return rec;
}

}  // namespace chartpot
