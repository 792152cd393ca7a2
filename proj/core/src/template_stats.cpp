#include "chartpot/template_stats.hpp"

#include <fmt/format.h>

#include "numeric.hpp"

namespace chartpot {

namespace {

using detail::Num;

ValueTree from_num(Num n) { return n.is_int ? ValueTree::integer(n.i) : ValueTree::real(n.f); }

Num to_num(const ValueTree& v) {
  return v.kind() == ValueTree::Kind::kInt ? Num::of_int(v.as_int()) : Num::of_float(v.as_float());
}

TemplateRecord describe(std::string category, const std::vector<Num>& values) {
  TemplateRecord r;
  r.category = std::move(category);
  r.total = static_cast<std::int64_t>(values.size());
  r.sum = from_num(detail::py_sum(values));
  r.average = detail::stat_mean(values);
  const Num lo = detail::py_min(values);
  const Num hi = detail::py_max(values);
  r.minimum = from_num(lo);
  r.maximum = from_num(hi);
  r.range = from_num(detail::num_sub(hi, lo));
  return r;
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void walk(const ValueTree& node, const std::string& prefix, std::vector<TemplateRecord>& out) {
  const std::string category = prefix.empty() ? "root" : prefix;
  if (node.kind() == ValueTree::Kind::kMapping) {
    std::vector<Num> numbers;
    for (const auto& e : node.as_mapping()) {
      if (e.value.is_numeric()) numbers.push_back(to_num(e.value));
    }
    if (numbers.size() >= 2) out.push_back(describe(category, numbers));
    for (const auto& e : node.as_mapping()) walk(e.value, join(prefix, python_str(e.key)), out);
  } else if (node.kind() == ValueTree::Kind::kSequence) {
    const Sequence& items = node.as_sequence();
    bool numeric = !items.empty();
    for (const auto& item : items) numeric = numeric && item.is_numeric();
    if (numeric) {
      std::vector<Num> numbers;
      numbers.reserve(items.size());
      for (const auto& item : items) numbers.push_back(to_num(item));
      out.push_back(describe(category, numbers));
    } else {
      for (std::size_t i = 0; i < items.size(); ++i) walk(items[i], join(prefix, std::to_string(i)), out);
    }
  }
}

}  // namespace

ValueTree TemplateRecord::to_tree() const {
  Mapping m;
  m.push_back({ValueTree::string("Category"), ValueTree::string(category)});
  m.push_back({ValueTree::string("Total"), ValueTree::integer(total)});
  m.push_back({ValueTree::string("Sum"), sum});
  m.push_back({ValueTree::string("Average"), ValueTree::real(average)});
  m.push_back({ValueTree::string("Minimum"), minimum});
  m.push_back({ValueTree::string("Maximum"), maximum});
  m.push_back({ValueTree::string("Range"), range});
  return ValueTree::mapping(std::move(m));
}

std::vector<TemplateRecord> template_records(const ValueTree& chart) {
  std::vector<TemplateRecord> out;
  walk(chart, "", out);
  return out;
}

StatsMap template_statistics(const ValueTree& chart) {
  Sequence records;
  for (const auto& r : template_records(chart)) records.push_back(r.to_tree());
  return flatten_stats(ValueTree::sequence(std::move(records)));
}

const std::string_view kCanonicalTemplateSource = R"(import statistics


def get_summary_statistics(chart_dict):
    records = []

    def is_number(value):
        return isinstance(value, (int, float)) and not isinstance(value, bool)

    def join(prefix, key):
        return prefix + "." + key if prefix else key

    def describe(prefix, values):
        records.append({
            "Category": prefix if prefix else "root",
            "Total": len(values),
            "Sum": sum(values),
            "Average": statistics.mean(values),
            "Minimum": min(values),
            "Maximum": max(values),
            "Range": max(values) - min(values),
        })

    def walk(node, prefix):
        if isinstance(node, dict):
            numbers = [value for value in node.values() if is_number(value)]
            if len(numbers) >= 2:
                describe(prefix, numbers)
            for key, value in node.items():
                walk(value, join(prefix, str(key)))
        elif isinstance(node, list):
            if len(node) > 0 and all(is_number(value) for value in node):
                describe(prefix, node)
            else:
                for i, value in enumerate(node):
                    walk(value, join(prefix, str(i)))

    walk(chart_dict, "")
    return records
)";

}  // namespace chartpot
