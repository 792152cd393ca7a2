#include "chartpot/value_tree.hpp"

#include <algorithm>
#include <cmath>

#include "chartpot/error.hpp"
#include "pyrepr.hpp"

namespace chartpot {

ValueTree ValueTree::boolean(bool v) {
  ValueTree t;
  t.data_ = v;
  return t;
}

ValueTree ValueTree::integer(std::int64_t v) {
  ValueTree t;
  t.data_ = v;
  return t;
}

ValueTree ValueTree::real(double v, std::string unit) {
  ValueTree t;
  t.data_ = v;
  t.unit_ = std::move(unit);
  return t;
}

ValueTree ValueTree::string(std::string v) {
  ValueTree t;
  t.data_ = std::move(v);
  return t;
}

ValueTree ValueTree::sequence(Sequence items) {
  ValueTree t;
  t.data_ = std::move(items);
  return t;
}

ValueTree ValueTree::mapping(Mapping entries) {
  ValueTree t;
  t.data_ = std::move(entries);
  return t;
}

double ValueTree::as_number() const {
  if (kind() == Kind::kInt) return static_cast<double>(as_int());
  return as_float();
}

const ValueTree* ValueTree::find(std::string_view key) const {
  if (kind() != Kind::kMapping) return nullptr;
  for (const auto& e : as_mapping()) {
    if (e.key.kind() == Kind::kString && e.key.as_string() == key) return &e.value;
  }
  return nullptr;
}

std::size_t ValueTree::depth() const {
  std::size_t inner = 0;
  switch (kind()) {
    case Kind::kSequence:
      for (const auto& v : as_sequence()) inner = std::max(inner, v.depth());
      return inner + 1;
    case Kind::kMapping:
      for (const auto& e : as_mapping()) inner = std::max(inner, e.value.depth());
      return inner + 1;
    default:
      return 0;
  }
}

std::size_t ValueTree::node_count() const {
  std::size_t n = 1;
  if (kind() == Kind::kSequence) {
    for (const auto& v : as_sequence()) n += v.node_count();
  } else if (kind() == Kind::kMapping) {
    for (const auto& e : as_mapping()) n += e.value.node_count();
  }
  return n;
}

bool operator==(const ValueTree& a, const ValueTree& b) {
  if (a.kind() != b.kind() || a.unit_ != b.unit_) return false;
  if (a.kind() == ValueTree::Kind::kFloat) {
    const double x = a.as_float();
    const double y = b.as_float();
    return x == y || (std::isnan(x) && std::isnan(y));
  }
  return a.data_ == b.data_;
}

std::string_view kind_name(ValueTree::Kind kind) {
  switch (kind) {
    case ValueTree::Kind::kNull: return "null";
    case ValueTree::Kind::kBool: return "bool";
    case ValueTree::Kind::kInt: return "int";
    case ValueTree::Kind::kFloat: return "float";
    case ValueTree::Kind::kString: return "string";
    case ValueTree::Kind::kSequence: return "sequence";
    case ValueTree::Kind::kMapping: return "mapping";
  }
  return "?";
}

namespace {

std::string unit_float_text(double v, const std::string& unit) {
  std::string num;
  if (std::isfinite(v) && v == std::trunc(v) && std::fabs(v) < 1e16) {
    num = std::to_string(static_cast<std::int64_t>(v));
  } else {
    num = detail::python_float_repr(v);
  }
  return num + unit;
}

void render_literal(const ValueTree& t, std::string& out) {
  using K = ValueTree::Kind;
  switch (t.kind()) {
    case K::kNull: out += "None"; break;
    case K::kBool: out += t.as_bool() ? "True" : "False"; break;
    case K::kInt: out += std::to_string(t.as_int()); break;
    case K::kFloat:
      if (t.unit().empty()) {
        out += detail::python_float_repr(t.as_float());
      } else {
        out += detail::python_string_repr(unit_float_text(t.as_float(), t.unit()));
      }
      break;
    case K::kString: out += detail::python_string_repr(t.as_string()); break;
    case K::kSequence: {
      out += '[';
      bool first = true;
      for (const auto& v : t.as_sequence()) {
        if (!first) out += ", ";
        first = false;
        render_literal(v, out);
      }
      out += ']';
      break;
    }
    case K::kMapping: {
      out += '{';
      bool first = true;
      for (const auto& e : t.as_mapping()) {
        if (!first) out += ", ";
        first = false;
        render_literal(e.key, out);
        out += ": ";
        render_literal(e.value, out);
      }
      out += '}';
      break;
    }
  }
}

}  // namespace

std::string to_python_literal(const ValueTree& tree) {
  std::string out;
  render_literal(tree, out);
  return out;
}

std::string python_str(const ValueTree& scalar) {
  using K = ValueTree::Kind;
  switch (scalar.kind()) {
    case K::kString: return scalar.as_string();
    case K::kFloat:
      if (!scalar.unit().empty()) return unit_float_text(scalar.as_float(), scalar.unit());
      return detail::python_float_repr(scalar.as_float());
    default: return to_python_literal(scalar);
  }
}

void StatsMap::set(std::string key, ValueTree value) {
  for (auto& e : entries_) {
    if (e.first == key) {
      e.second = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

const ValueTree* StatsMap::find(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.first == key) return &e.second;
  }
  return nullptr;
}

ValueTree StatsMap::to_tree() const {
  Mapping m;
  m.reserve(entries_.size());
  for (const auto& [k, v] : entries_) m.push_back({ValueTree::string(k), v});
  return ValueTree::mapping(std::move(m));
}

namespace {

bool all_scalar_values(const Mapping& m) {
  return std::all_of(m.begin(), m.end(), [](const MappingEntry& e) { return e.value.is_scalar(); });
}

bool all_scalars(const Sequence& s) {
  return std::all_of(s.begin(), s.end(), [](const ValueTree& v) { return v.is_scalar(); });
}

bool all_mappings(const Sequence& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](const ValueTree& v) {
    return v.kind() == ValueTree::Kind::kMapping;
  });
}

std::string join_key(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

ValueTree stringify_keys(const Mapping& m) {
  Mapping out;
  out.reserve(m.size());
  for (const auto& e : m) out.push_back({ValueTree::string(python_str(e.key)), e.value});
  return ValueTree::mapping(std::move(out));
}

void emit(StatsMap& out, const std::string& key, const ValueTree& v);

void emit_records(StatsMap& out, const std::string& prefix, const Sequence& records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Mapping& rec = records[i].as_mapping();
    std::string label;
    Mapping rest;
    for (const auto& e : rec) {
      if (e.key.kind() == ValueTree::Kind::kString && e.key.as_string() == "Category" &&
          e.value.is_scalar()) {
        label = python_str(e.value);
      } else {
        rest.push_back(e);
      }
    }
    if (label.empty()) label = std::to_string(i);
    emit(out, join_key(prefix, label), ValueTree::mapping(std::move(rest)));
  }
}

void emit(StatsMap& out, const std::string& key, const ValueTree& v) {
  switch (v.kind()) {
    case ValueTree::Kind::kSequence: {
      const Sequence& s = v.as_sequence();
      if (all_scalars(s)) {
        out.set(key, v);
      } else if (all_mappings(s)) {
        emit_records(out, key, s);
      } else {
        for (std::size_t i = 0; i < s.size(); ++i) emit(out, join_key(key, std::to_string(i)), s[i]);
      }
      return;
    }
    case ValueTree::Kind::kMapping: {
      const Mapping& m = v.as_mapping();
      if (all_scalar_values(m)) {
        out.set(key, stringify_keys(m));
      } else {
        for (const auto& e : m) emit(out, join_key(key, python_str(e.key)), e.value);
      }
      return;
    }
    default:
      out.set(key, v);
  }
}

}  // namespace

StatsMap flatten_stats(const ValueTree& result) {
  StatsMap out;
  if (result.kind() == ValueTree::Kind::kMapping) {
    for (const auto& e : result.as_mapping()) {
      std::string key = python_str(e.key);
      if (key.empty()) key = "_";
      emit(out, key, e.value);
    }
    return out;
  }
  if (result.kind() == ValueTree::Kind::kSequence &&
      (result.as_sequence().empty() || all_mappings(result.as_sequence()))) {
    emit_records(out, "", result.as_sequence());
    return out;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "statistics result must be a mapping or a list of mappings, got " +
                  std::string(kind_name(result.kind())));
}

}  // namespace chartpot
