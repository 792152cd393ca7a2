#include "chartpot/config.hpp"

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "chartpot/error.hpp"

namespace chartpot {

using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kConfig, where + ": " + what);
}

void only_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) bad(where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) bad(where, "unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string path = where + "." + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) bad(path, "expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) bad(path, "expected an integer");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!it->is_number()) bad(path, "expected a number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!it->is_string()) bad(path, "expected a string");
  } else {
    if (!it->is_array()) bad(path, "expected a list of strings");
    for (const auto& s : *it) {
      if (!s.is_string()) bad(path, "expected a list of strings");
    }
  }
  out = it->get<T>();
}

ModelEndpoint parse_endpoint(const json& j, const std::string& where) {
  only_keys(j, where,
            {"base_url", "model_id", "api_key_env", "supports_images", "request_timeout_ms", "max_retries",
             "chat_template", "max_concurrency"});
  ModelEndpoint e;
  read(j, "base_url", where, e.base_url);
  read(j, "model_id", where, e.model_id);
  if (auto it = j.find("api_key_env"); it != j.end() && it->is_null()) {
    e.api_key_env.clear();
  } else {
    read(j, "api_key_env", where, e.api_key_env);
  }
  read(j, "supports_images", where, e.supports_images);
  read(j, "request_timeout_ms", where, e.request_timeout_ms);
  read(j, "max_retries", where, e.max_retries);
  read(j, "chat_template", where, e.chat_template);
  read(j, "max_concurrency", where, e.max_concurrency);
  try {
    e.validate();
  } catch (const Error& err) {
    bad(where, err.what());
  }
  return e;
}

DecodeParams parse_decode(const json& j, const std::string& where, DecodeParams base) {
  only_keys(j, where,
            {"temperature", "repetition_penalty", "max_new_tokens", "stop_sequences", "banned_substrings",
             "banned_fraction"});
  read(j, "temperature", where, base.temperature);
  read(j, "repetition_penalty", where, base.repetition_penalty);
  read(j, "max_new_tokens", where, base.max_new_tokens);
  read(j, "stop_sequences", where, base.stop_sequences);
  read(j, "banned_substrings", where, base.banned_substrings);
  read(j, "banned_fraction", where, base.banned_fraction);
  return base;
}

}  // namespace

bool PipelineConfig::runs_dict_stage() const {
  if (strategy == Strategy::kDirect || strategy == Strategy::kMCoT) return false;
  return composition != InputComposition::kTitle;
}

bool PipelineConfig::runs_stats_stage() const {
  return runs_dict_stage() && composition != InputComposition::kDictTitle;
}

bool PipelineConfig::uses_generated_stats() const {
  return runs_stats_stage() && strategy == Strategy::kPoT && composition != InputComposition::kDictStatsTTitle;
}

int PipelineConfig::effective_workers() const { return workers > 0 ? workers : vlm_endpoint.max_concurrency; }

void PipelineConfig::validate() const {
  try {
    vlm_endpoint.validate();
    if (coder_endpoint) coder_endpoint->validate();
    if (repair_endpoint) repair_endpoint->validate();
    dict_decode.validate();
    code_decode.validate();
    summary_decode.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  if (!vlm_endpoint.supports_images) bad("endpoints.vlm", "supports_images must be true for the chart model");
  if (uses_generated_stats() && !coder_endpoint) {
    bad("endpoints.coder", "strategy PoT with composition " + std::string(to_string(composition)) +
                               " needs a coder endpoint");
  }
  if (!limits.valid()) bad("limits", "all limits must be strictly positive");
  if (max_code_retries < 0) bad("max_code_retries", "must be >= 0");
  if (workers < 0) bad("workers", "must be >= 0");
  if (!(max_comment_fraction > 0.0 && max_comment_fraction <= 1.0)) bad("max_comment_fraction", "must be in (0, 1]");
}

PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  const json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kConfig, "config is not valid JSON");
  only_keys(doc, "config",
            {"strategy", "composition", "endpoints", "decode", "limits", "max_code_retries", "workers", "prompts",
             "record_timings", "image_root", "max_comment_fraction"});
  PipelineConfig cfg;

  std::string name;
  if (doc.contains("strategy")) {
    read(doc, "strategy", "config", name);
    auto s = parse_strategy(name);
    if (!s) bad("config.strategy", "unknown strategy '" + name + "'");
    cfg.strategy = *s;
  }
  if (doc.contains("composition")) {
    read(doc, "composition", "config", name);
    auto c = parse_composition(name);
    if (!c) bad("config.composition", "unknown composition '" + name + "'");
    cfg.composition = *c;
  }

  auto eps = doc.find("endpoints");
  if (eps == doc.end()) bad("config", "missing 'endpoints'");
  only_keys(*eps, "endpoints", {"vlm", "coder", "repair"});
  if (!eps->contains("vlm")) bad("endpoints", "missing 'vlm'");
  cfg.vlm_endpoint = parse_endpoint((*eps)["vlm"], "endpoints.vlm");
  if (eps->contains("coder")) cfg.coder_endpoint = parse_endpoint((*eps)["coder"], "endpoints.coder");
  if (eps->contains("repair")) cfg.repair_endpoint = parse_endpoint((*eps)["repair"], "endpoints.repair");

  if (auto d = doc.find("decode"); d != doc.end()) {
    only_keys(*d, "decode", {"dict", "code", "summary"});
    if (d->contains("dict")) cfg.dict_decode = parse_decode((*d)["dict"], "decode.dict", cfg.dict_decode);
    if (d->contains("code")) cfg.code_decode = parse_decode((*d)["code"], "decode.code", cfg.code_decode);
    if (d->contains("summary")) {
      cfg.summary_decode = parse_decode((*d)["summary"], "decode.summary", cfg.summary_decode);
    }
  }
  if (auto l = doc.find("limits"); l != doc.end()) {
    only_keys(*l, "limits", {"max_steps", "max_depth", "max_nodes", "wall_timeout_ms"});
    read(*l, "max_steps", "limits", cfg.limits.max_steps);
    read(*l, "max_depth", "limits", cfg.limits.max_depth);
    read(*l, "max_nodes", "limits", cfg.limits.max_nodes);
    read(*l, "wall_timeout_ms", "limits", cfg.limits.wall_timeout_ms);
  }
  read(doc, "max_code_retries", "config", cfg.max_code_retries);
  read(doc, "workers", "config", cfg.workers);
  read(doc, "record_timings", "config", cfg.record_timings);
  read(doc, "image_root", "config", cfg.image_root);
  read(doc, "max_comment_fraction", "config", cfg.max_comment_fraction);
  if (!cfg.image_root.empty() && !base_dir.empty() && std::filesystem::path(cfg.image_root).is_relative()) {
    cfg.image_root = (base_dir / cfg.image_root).lexically_normal().string();
  }

  if (auto p = doc.find("prompts"); p != doc.end()) {
    if (!p->is_object()) bad("prompts", "expected an object");
    for (const auto& [key, value] : p->items()) {
      std::string* field = prompt_field(cfg.prompts, key);
      if (field == nullptr) bad("prompts", "unknown prompt '" + key + "'");
      if (!value.is_string()) bad("prompts." + key, "expected a string");
      *field = value.get<std::string>();
    }
  }

  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

}  // namespace chartpot
