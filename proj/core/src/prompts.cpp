#include "chartpot/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

namespace chartpot {

namespace {

constexpr std::string_view kSummaryHead =
    "Summarize the insights of the chart with title: '{title}'. The summary use language similar to the chart. "
    "Don't explicitly describe chart elements such as chart type. NEVER START A SENTENCE WITH A NUMBER.";

bool is_ident(std::string_view s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(s[k])) != std::tolower(static_cast<unsigned char>(prefix[k]))) {
      return false;
    }
  }
  return true;
}

std::string_view strip_emphasis(std::string_view s) {
  while (!s.empty() && (s.front() == '*' || s.front() == '_' || s.front() == '#')) s.remove_prefix(1);
  return trim(s);
}

// "Summary:" (optionally bold) at line start; returns the text after it.
std::optional<std::string_view> summary_label(std::string_view line) {
  std::string_view s = strip_emphasis(line);
  if (!starts_with_ci(s, "summary")) return std::nullopt;
  s.remove_prefix(7);
  while (!s.empty() && (s.front() == '*' || s.front() == '_')) s.remove_prefix(1);
  if (s.empty() || s.front() != ':') return std::nullopt;
  s.remove_prefix(1);
  while (!s.empty() && (s.front() == '*' || s.front() == '_')) s.remove_prefix(1);
  return trim(s);
}

// Length of the scaffold marker at the start of the line, 0 when the line is
// ordinary text.
std::size_t scaffold_marker(std::string_view line) {
  if (starts_with_ci(line, "step")) {
    std::size_t k = 4;
    if (k == line.size()) return k;
    const char c = line[k];
    if (c == ' ' || c == ':' || std::isdigit(static_cast<unsigned char>(c))) {
      while (k < line.size() && (std::isdigit(static_cast<unsigned char>(line[k])) || line[k] == ' ')) ++k;
      while (k < line.size() && (line[k] == ':' || line[k] == '.' || line[k] == ')' || line[k] == '-')) ++k;
      return k;
    }
    return 0;
  }
  std::size_t k = 0;
  while (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) ++k;
  if (k > 0 && k < line.size() && (line[k] == '.' || line[k] == ')' || line[k] == ':')) {
    // "1.5 million" is a sentence that starts with a number, not a list item.
    if (line[k] == '.' && k + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[k + 1]))) return 0;
    return k + 1;
  }
  if (!line.empty() && (line.front() == '-' || line.front() == '*' || line.front() == '+')) {
    if (line.size() == 1 || line[1] == ' ') return 1;
  }
  if (line.rfind("\xE2\x80\xA2", 0) == 0) return 3;  // bullet
  return 0;
}

}  // namespace

PromptSet PromptSet::defaults() {
  PromptSet p;
  p.dict_gen =
      "<img_placeholder>\nConvert the chart into a python dictionary `chart_dict`. Only consider the chart's data "
      "when summarizing.";
  p.dict_prefill = "```python\n chart_dict =";
  p.dict_repair =
      "<img_placeholder>\nConvert the chart into a python dictionary `chart_dict`. Check json syntax errors. Only "
      "consider the chart's data when summarizing, no punctuations. Only return the valid version.";
  p.pot_system =
      "You are a data analyst. You are given a dictionary that represents a chart called `chart_dict`. "
      "You need to implement the function `get_summary_statistics(chart_dict)` that takes the dictionary as input "
      "and returns a dictionary with the relevant statistics that can be used to summarize the chart. "
      "Avoid sorting dictionary objects directly and USE ONLY PYTHON BUILT-IN FUNCTIONS. Name the keys of the "
      "dictionary to elaborate how it is a descriptive statistic. When writing Python, follow the PEP style guide. "
      "Return ONLY the code of the function that will run without any errors and can work using `eval()`.";
  p.pot_user =
      "Implement the function `get_summary_statistics` that takes a dictionary as input and returns a dictionary "
      "with the relevant statistics that can be used to summarize the chart using only built-in Python functions. "
      "Make sure to label the keys of the `summary_dict` to be descriptive The input dictionary is defined as "
      "{chart_dict}.";
  p.pot_prefill =
      "```python\ndef get_summary_statistics(chart_dict):\n    # Define output dictionary `summary_dict` to store the "
      "summary statistics\n";
  p.summary_user = std::string(kSummaryHead) +
                   " The chart has the dictionary: {dictionary_str} and the summary_statistics: {summary_dict}.";
  p.summary_user_title = std::string(kSummaryHead);
  p.summary_user_dict = std::string(kSummaryHead) + " The chart has the dictionary: {dictionary_str}.";
  p.summary_user_stats = std::string(kSummaryHead) + " The chart has the summary_statistics: {summary_dict}.";
  p.summary_prefill = "Let's think step by step to with as few steps as possible to summarize the chart: ";
  p.direct =
      "<img_placeholder>\nWrite a short summary of the chart with title: '{title}'. Only consider the chart's data.";
  p.mcot =
      "<img_placeholder>\nThe chart has the title: '{title}'. First list, as a short outline, the key values and "
      "the trends that the chart shows. Then write a summary of the chart based on that outline on a final line "
      "that starts with \"Summary:\".";
  return p;
}

const std::string& PromptSet::summary_for(InputComposition c) const {
  switch (c) {
    case InputComposition::kTitle: return summary_user_title;
    case InputComposition::kDictTitle: return summary_user_dict;
    case InputComposition::kStatsTitle: return summary_user_stats;
    case InputComposition::kDictStatsTitle:
    case InputComposition::kDictStatsTTitle: break;
  }
  return summary_user;
}

const std::vector<std::string_view>& prompt_field_names() {
  static const std::vector<std::string_view> names = {
      "dict_gen",      "dict_prefill",       "dict_repair",       "pot_system",         "pot_user",
      "pot_prefill",   "summary_user",       "summary_user_title", "summary_user_dict", "summary_user_stats",
      "summary_prefill", "direct",           "mcot"};
  return names;
}

std::string* prompt_field(PromptSet& s, std::string_view name) {
  if (name == "dict_gen") return &s.dict_gen;
  if (name == "dict_prefill") return &s.dict_prefill;
  if (name == "dict_repair") return &s.dict_repair;
  if (name == "pot_system") return &s.pot_system;
  if (name == "pot_user") return &s.pot_user;
  if (name == "pot_prefill") return &s.pot_prefill;
  if (name == "summary_user") return &s.summary_user;
  if (name == "summary_user_title") return &s.summary_user_title;
  if (name == "summary_user_dict") return &s.summary_user_dict;
  if (name == "summary_user_stats") return &s.summary_user_stats;
  if (name == "summary_prefill") return &s.summary_prefill;
  if (name == "direct") return &s.direct;
  if (name == "mcot") return &s.mcot;
  return nullptr;
}

std::string fill_slots(std::string_view tmpl, const SlotValues& slots) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t k = 0;
  while (k < tmpl.size()) {
    if (tmpl[k] == '{') {
      const auto close = tmpl.find('}', k + 1);
      if (close != std::string_view::npos) {
        const std::string_view name = tmpl.substr(k + 1, close - k - 1);
        auto it = std::find_if(slots.begin(), slots.end(), [&](const auto& s) { return s.first == name; });
        if (it != slots.end()) {
          out += it->second;
          k = close + 1;
          continue;
        }
      }
    }
    out += tmpl[k++];
  }
  return out;
}

std::vector<std::string> template_slots(std::string_view tmpl) {
  std::vector<std::string> out;
  for (auto open = tmpl.find('{'); open != std::string_view::npos; open = tmpl.find('{', open + 1)) {
    const auto close = tmpl.find('}', open + 1);
    if (close == std::string_view::npos) break;
    const std::string name(tmpl.substr(open + 1, close - open - 1));
    if (is_ident(name) && std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

std::string postprocess_summary(std::string_view text, std::string_view prefill) {
  std::string_view body = text;
  const std::string_view bare_prefill = trim(prefill);
  body = trim(body);
  if (!bare_prefill.empty() && body.substr(0, bare_prefill.size()) == bare_prefill) {
    body = trim(body.substr(bare_prefill.size()));
  }

  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start <= body.size();) {
    auto end = body.find('\n', start);
    if (end == std::string_view::npos) end = body.size();
    lines.push_back(trim(body.substr(start, end - start)));
    start = end + 1;
  }

  auto join = [](auto first, auto last, std::string head) {
    std::string out = std::move(head);
    for (auto it = first; it != last; ++it) {
      if (it->empty()) continue;
      if (!out.empty()) out += ' ';
      out += *it;
    }
    return out;
  };

  // The last "Summary:" label wins; MCoT outlines end with one.
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (auto rest = summary_label(*it)) {
      return join(it.base(), lines.end(), std::string(*rest));
    }
  }

  auto first = std::find_if(lines.begin(), lines.end(),
                            [](std::string_view l) { return !l.empty() && scaffold_marker(l) == 0; });
  if (first != lines.end()) return join(first, lines.end(), {});

  // Only scaffold lines: keep the last one without its marker.
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (!it->empty()) return std::string(trim(it->substr(scaffold_marker(*it))));
  }
  return {};
}

}  // namespace chartpot
