#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "chartpot/chart.hpp"
#include "chartpot/llm_client.hpp"
#include "chartpot/prompts.hpp"
#include "chartpot/sandbox.hpp"

namespace chartpot {

struct PipelineConfig {
  ModelEndpoint vlm_endpoint;
  std::optional<ModelEndpoint> coder_endpoint;
  std::optional<ModelEndpoint> repair_endpoint;
  Strategy strategy = Strategy::kPoT;
  InputComposition composition = InputComposition::kDictStatsTitle;
  DecodeParams dict_decode = dict_decode_params();
  DecodeParams code_decode = code_decode_params();
  DecodeParams summary_decode = summary_decode_params();
  SandboxLimits limits;
  int max_code_retries = 1;
  /// Batch worker count; 0 means the VLM endpoint's max_concurrency.
  int workers = 0;
  PromptSet prompts = PromptSet::defaults();
  /// When false, every timing in run records is written as 0 so repeated
  /// runs produce identical files.
  bool record_timings = true;
  /// Relative image paths in the manifest resolve against this directory.
  std::string image_root;
  double max_comment_fraction = 0.5;

  /// Whether the configured strategy/composition runs the dictionary stage,
  /// the statistics stage, and model-generated (not template) statistics.
  bool runs_dict_stage() const;
  bool runs_stats_stage() const;
  bool uses_generated_stats() const;
  int effective_workers() const;

  /// Throws Error(kConfig) naming the first problem.
  void validate() const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// JSON config file. Unknown keys are errors. Relative image_root resolves
/// against the file's directory.
///
///   {"strategy": "PoT", "composition": "DictStatsTitle",
///    "endpoints": {"vlm": {...}, "coder": {...}, "repair": {...}},
///    "decode": {"dict": {...}, "code": {...}, "summary": {...}},
///    "limits": {...}, "max_code_retries": 1, "workers": 4,
///    "prompts": {"direct": "..."}, "record_timings": true,
///    "image_root": "images", "max_comment_fraction": 0.5}
///
/// Throws Error(kConfig) for bad content and Error(kIo) for unreadable files.
/// The result is validated.
PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace chartpot
