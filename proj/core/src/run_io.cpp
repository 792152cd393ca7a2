#include "chartpot/run_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "chartpot/error.hpp"

namespace chartpot {

using json = nlohmann::ordered_json;

namespace {

json float_to_json(double v, const std::string& unit) {
  if (unit.empty() && std::isfinite(v)) return v;
  json tagged = json::object();
  if (std::isnan(v)) {
    tagged["$float"] = "nan";
  } else if (std::isinf(v)) {
    tagged["$float"] = v > 0 ? "inf" : "-inf";
  } else {
    tagged["$float"] = v;
  }
  if (!unit.empty()) tagged["unit"] = unit;
  return tagged;
}

json tree_to_json(const ValueTree& t) {
  using K = ValueTree::Kind;
  switch (t.kind()) {
    case K::kNull: return nullptr;
    case K::kBool: return t.as_bool();
    case K::kInt: return t.as_int();
    case K::kFloat: return float_to_json(t.as_float(), t.unit());
    case K::kString: return t.as_string();
    case K::kSequence: {
      json arr = json::array();
      for (const auto& v : t.as_sequence()) arr.push_back(tree_to_json(v));
      return arr;
    }
    case K::kMapping: {
      bool plain = true;
      for (const auto& e : t.as_mapping()) {
        if (e.key.kind() != K::kString || (!e.key.as_string().empty() && e.key.as_string()[0] == '$')) {
          plain = false;
          break;
        }
      }
      if (plain) {
        json obj = json::object();
        for (const auto& e : t.as_mapping()) obj[e.key.as_string()] = tree_to_json(e.value);
        return obj;
      }
      json pairs = json::array();
      for (const auto& e : t.as_mapping()) pairs.push_back(json::array({tree_to_json(e.key), tree_to_json(e.value)}));
      json obj = json::object();
      obj["$map"] = std::move(pairs);
      return obj;
    }
  }
  return nullptr;
}

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::kSerialization, why); }

ValueTree tree_from_json(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return ValueTree::null();
    case json::value_t::boolean: return ValueTree::boolean(j.get<bool>());
    case json::value_t::number_integer: return ValueTree::integer(j.get<std::int64_t>());
    case json::value_t::number_unsigned: {
      auto u = j.get<std::uint64_t>();
      if (u <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        return ValueTree::integer(static_cast<std::int64_t>(u));
      }
      return ValueTree::real(static_cast<double>(u));
    }
    case json::value_t::number_float: return ValueTree::real(j.get<double>());
    case json::value_t::string: return ValueTree::string(j.get<std::string>());
    case json::value_t::array: {
      Sequence seq;
      seq.reserve(j.size());
      for (const auto& v : j) seq.push_back(tree_from_json(v));
      return ValueTree::sequence(std::move(seq));
    }
    case json::value_t::object: {
      if (auto it = j.find("$float"); it != j.end()) {
        std::string unit;
        if (auto u = j.find("unit"); u != j.end() && u->is_string()) unit = u->get<std::string>();
        double v = 0;
        if (it->is_number()) {
          v = it->get<double>();
        } else if (it->is_string()) {
          const auto s = it->get<std::string>();
          if (s == "nan") v = std::numeric_limits<double>::quiet_NaN();
          else if (s == "inf") v = std::numeric_limits<double>::infinity();
          else if (s == "-inf") v = -std::numeric_limits<double>::infinity();
          else bad("bad $float tag: " + s);
        } else {
          bad("bad $float tag");
        }
        return ValueTree::real(v, std::move(unit));
      }
      if (auto it = j.find("$map"); it != j.end()) {
        if (!it->is_array()) bad("$map must be an array");
        Mapping m;
        for (const auto& pair : *it) {
          if (!pair.is_array() || pair.size() != 2) bad("$map entries must be [key, value]");
          m.push_back({tree_from_json(pair[0]), tree_from_json(pair[1])});
        }
        return ValueTree::mapping(std::move(m));
      }
      Mapping m;
      m.reserve(j.size());
      for (auto it = j.begin(); it != j.end(); ++it) {
        m.push_back({ValueTree::string(it.key()), tree_from_json(it.value())});
      }
      return ValueTree::mapping(std::move(m));
    }
    default:
      bad("unsupported JSON value");
  }
}

json failure_to_json(const std::optional<FailureClass>& f) {
  if (!f) return nullptr;
  json obj;
  obj["stage"] = std::string(to_string(f->stage));
  obj["category"] = std::string(to_string(f->category));
  obj["message"] = f->message;
  return obj;
}

template <class T, class Parse>
T parse_field(const json& obj, const char* key, Parse parse) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) bad(std::string("missing field ") + key);
  auto v = parse(it->get<std::string>());
  if (!v) bad(std::string("bad value for ") + key + ": " + it->get<std::string>());
  return *v;
}

std::optional<FailureClass> failure_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_object()) bad("failure must be an object or null");
  FailureClass f;
  f.stage = parse_field<FailureStage>(j, "stage", parse_failure_stage);
  f.category = parse_field<FailureCategory>(j, "category", parse_failure_category);
  f.message = j.value("message", std::string());
  return f;
}

std::string get_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) bad(std::string("missing string field ") + key);
  return it->get<std::string>();
}

}  // namespace

std::string encode_value_tree(const ValueTree& tree) {
  return tree_to_json(tree).dump(-1, ' ', false, json::error_handler_t::replace);
}

ValueTree decode_value_tree(std::string_view json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) bad("invalid JSON value tree");
  return tree_from_json(j);
}

std::string encode_run(const RunRecord& r) {
  json obj;
  obj["chart_id"] = r.chart_id;
  obj["strategy"] = std::string(to_string(r.strategy));
  obj["input_composition"] = std::string(to_string(r.input_composition));
  json stages = json::array();
  for (const auto& s : r.stage_outputs) {
    json st;
    st["stage"] = s.stage;
    st["attempt"] = s.attempt;
    st["model_id"] = s.model_id;
    st["prompt"] = s.prompt;
    st["raw_text"] = s.raw_text;
    st["artifact"] = s.artifact ? tree_to_json(*s.artifact) : json(nullptr);
    st["status"] = std::string(to_string(s.status));
    st["failure"] = failure_to_json(s.failure);
    st["notes"] = s.notes;
    st["elapsed_ms"] = s.elapsed_ms;
    stages.push_back(std::move(st));
  }
  obj["stage_outputs"] = std::move(stages);
  obj["failure"] = failure_to_json(r.failure);
  obj["summary"] = r.summary ? json(*r.summary) : json(nullptr);
  obj["stats_provenance"] = r.stats_provenance ? json(std::string(to_string(*r.stats_provenance))) : json(nullptr);
  json timings = json::object();
  for (const auto& [k, v] : r.timings_ms) timings[k] = v;
  obj["timings_ms"] = std::move(timings);
  json models = json::object();
  for (const auto& [k, v] : r.model_ids) models[k] = v;
  obj["model_ids"] = std::move(models);
  return obj.dump(-1, ' ', false, json::error_handler_t::replace);
}

RunRecord decode_run(std::string_view line) {
  json obj = json::parse(line, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) bad("run record is not a JSON object");
  RunRecord r;
  r.chart_id = get_string(obj, "chart_id");
  r.strategy = parse_field<Strategy>(obj, "strategy", parse_strategy);
  r.input_composition = parse_field<InputComposition>(obj, "input_composition", parse_composition);
  if (auto it = obj.find("stage_outputs"); it != obj.end()) {
    if (!it->is_array()) bad("stage_outputs must be an array");
    for (const auto& st : *it) {
      StageOutput s;
      s.stage = get_string(st, "stage");
      s.attempt = st.value("attempt", 1);
      s.model_id = st.value("model_id", std::string());
      s.prompt = st.value("prompt", std::string());
      s.raw_text = st.value("raw_text", std::string());
      if (auto a = st.find("artifact"); a != st.end() && !a->is_null()) s.artifact = tree_from_json(*a);
      s.status = parse_field<StageStatus>(st, "status", parse_stage_status);
      if (auto f = st.find("failure"); f != st.end()) s.failure = failure_from_json(*f);
      if (auto n = st.find("notes"); n != st.end() && n->is_array()) {
        for (const auto& note : *n) s.notes.push_back(note.get<std::string>());
      }
      s.elapsed_ms = st.value("elapsed_ms", std::int64_t{0});
      r.stage_outputs.push_back(std::move(s));
    }
  }
  if (auto f = obj.find("failure"); f != obj.end()) r.failure = failure_from_json(*f);
  if (auto s = obj.find("summary"); s != obj.end() && s->is_string()) r.summary = s->get<std::string>();
  if (auto p = obj.find("stats_provenance"); p != obj.end() && p->is_string()) {
    r.stats_provenance = parse_stats_provenance(p->get<std::string>());
  }
  if (auto t = obj.find("timings_ms"); t != obj.end() && t->is_object()) {
    for (auto it = t->begin(); it != t->end(); ++it) r.timings_ms.emplace_back(it.key(), it.value().get<std::int64_t>());
  }
  if (auto m = obj.find("model_ids"); m != obj.end() && m->is_object()) {
    for (auto it = m->begin(); it != m->end(); ++it) r.model_ids.emplace_back(it.key(), it.value().get<std::string>());
  }
  return r;
}

void persist_run(const RunRecord& record, std::ostream& sink) {
  std::string line;
  try {
    line = encode_run(record);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSerialization, e.what());
  }
  line.push_back('\n');
  sink.write(line.data(), static_cast<std::streamsize>(line.size()));
  sink.flush();
  if (!sink) throw Error(ErrorCode::kIo, "failed to append run record");
}

std::vector<RunRecord> read_runs(std::istream& in) {
  std::vector<RunRecord> runs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      runs.push_back(decode_run(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSerialization, e.what());
    }
  }
  return runs;
}

std::vector<RunRecord> read_runs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    if (!std::filesystem::exists(path)) return {};
    throw Error(ErrorCode::kIo, "cannot open run file " + path.string());
  }
  return read_runs(in);
}

}  // namespace chartpot
