#include "chartpot/manifest.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "chartpot/error.hpp"
#include "pyrepr.hpp"

namespace chartpot {

using json = nlohmann::ordered_json;

TypeCounts count_by_type(std::span<const ChartRecord> records) {
  TypeCounts counts;
  for (const auto& r : records) {
    ++counts.by_type[static_cast<std::size_t>(r.chart_type)];
    ++counts.total;
  }
  return counts;
}

std::string select_gold_caption(std::span<const std::string> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::kEmptyCandidateList, "no gold caption candidates");
  const std::string* best = &candidates.front();
  std::size_t best_len = detail::utf8_length(*best);
  for (const auto& c : candidates.subspan(1)) {
    const std::size_t len = detail::utf8_length(c);
    if (len > best_len) {
      best = &c;
      best_len = len;
    }
  }
  return *best;
}

namespace {

[[noreturn]] void malformed(std::size_t line_no, const std::string& why) {
  throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": " + why);
}

std::string required_string(const json& obj, const char* field, std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) malformed(line_no, std::string("missing string field '") + field + "'");
  return it->get<std::string>();
}

ChartRecord parse_record(const json& obj, std::size_t line_no) {
  if (!obj.is_object()) malformed(line_no, "expected a JSON object");
  ChartRecord rec;
  rec.id = required_string(obj, "id", line_no);
  if (rec.id.empty()) malformed(line_no, "empty id");
  rec.image_path = required_string(obj, "image_path", line_no);
  rec.title = required_string(obj, "title", line_no);

  const std::string type = required_string(obj, "chart_type", line_no);
  auto parsed_type = parse_chart_type(type);
  if (!parsed_type) throw Error(ErrorCode::kUnknownChartType, type);
  rec.chart_type = *parsed_type;

  if (auto it = obj.find("complexity"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) malformed(line_no, "complexity must be a string");
    auto c = parse_complexity(it->get<std::string>());
    if (!c) malformed(line_no, "unknown complexity '" + it->get<std::string>() + "'");
    rec.complexity = *c;
  }

  if (auto it = obj.find("gold_summary"); it != obj.end() && !it->is_null()) {
    if (it->is_string()) {
      rec.gold_summary = it->get<std::string>();
    } else if (it->is_array()) {
      std::vector<std::string> candidates;
      for (const auto& c : *it) {
        if (!c.is_string()) malformed(line_no, "gold_summary array must hold strings");
        candidates.push_back(c.get<std::string>());
      }
      rec.gold_summary = candidates.empty() ? std::string() : select_gold_caption(candidates);
    } else {
      malformed(line_no, "gold_summary must be a string or an array of strings");
    }
  }

  if (auto it = obj.find("dataset"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) malformed(line_no, "dataset must be a string");
    auto d = parse_dataset(it->get<std::string>());
    if (!d) malformed(line_no, "unknown dataset '" + it->get<std::string>() + "'");
    rec.dataset = *d;
  }
  return rec;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<ChartRecord> parse_manifest(std::istream& in) {
  std::vector<ChartRecord> records;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) malformed(line_no, "invalid JSON");
    ChartRecord rec = parse_record(obj, line_no);
    if (!seen.insert(rec.id).second) throw Error(ErrorCode::kDuplicateId, rec.id);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ChartRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path.string());
  return parse_manifest(in);
}

void write_manifest(std::ostream& out, std::span<const ChartRecord> records) {
  for (const auto& r : records) {
    json obj;
    obj["id"] = r.id;
    obj["image_path"] = r.image_path;
    obj["title"] = r.title;
    obj["chart_type"] = lowercase(to_string(r.chart_type));
    obj["complexity"] = lowercase(to_string(r.complexity));
    obj["gold_summary"] = r.gold_summary;
    obj["dataset"] = std::string(to_string(r.dataset));
    out << obj.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

}  // namespace chartpot
