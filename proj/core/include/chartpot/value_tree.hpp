#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace chartpot {

class ValueTree;
struct MappingEntry;

using Sequence = std::vector<ValueTree>;
using Mapping = std::vector<MappingEntry>;

/// Recursive chart value: the parsed form of a model-generated `chart_dict`.
///
/// Scalars are null, bool, 64-bit int, binary64 float (optionally carrying a
/// unit suffix such as "%") and UTF-8 strings. Mappings keep insertion order.
class ValueTree {
 public:
  enum class Kind : std::uint8_t { kNull, kBool, kInt, kFloat, kString, kSequence, kMapping };

  ValueTree() = default;

  static ValueTree null() { return {}; }
  static ValueTree boolean(bool v);
  static ValueTree integer(std::int64_t v);
  static ValueTree real(double v, std::string unit = {});
  static ValueTree string(std::string v);
  static ValueTree sequence(Sequence items = {});
  static ValueTree mapping(Mapping entries = {});

  Kind kind() const noexcept { return static_cast<Kind>(data_.index()); }
  bool is_null() const noexcept { return kind() == Kind::kNull; }
  bool is_scalar() const noexcept { return kind() < Kind::kSequence; }
  bool is_container() const noexcept { return !is_scalar(); }
  /// int or float; booleans are not numeric.
  bool is_numeric() const noexcept { return kind() == Kind::kInt || kind() == Kind::kFloat; }

  bool as_bool() const { return std::get<bool>(data_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
  double as_float() const { return std::get<double>(data_); }
  /// int or float widened to double.
  double as_number() const;
  const std::string& as_string() const { return std::get<std::string>(data_); }
  const Sequence& as_sequence() const { return std::get<Sequence>(data_); }
  Sequence& as_sequence() { return std::get<Sequence>(data_); }
  const Mapping& as_mapping() const { return std::get<Mapping>(data_); }
  Mapping& as_mapping() { return std::get<Mapping>(data_); }

  const std::string& unit() const noexcept { return unit_; }

  /// Lookup by string key in a Mapping; nullptr when absent or not a Mapping.
  const ValueTree* find(std::string_view key) const;

  /// Container nesting depth: scalars are 0, `[1]` is 1, `{'a': [1]}` is 2.
  std::size_t depth() const;
  /// Number of value nodes (keys not counted).
  std::size_t node_count() const;

  friend bool operator==(const ValueTree& a, const ValueTree& b);

 private:
  std::variant<std::monostate, bool, std::int64_t, double, std::string, Sequence, Mapping> data_;
  std::string unit_;
};

struct MappingEntry {
  ValueTree key;
  ValueTree value;

  friend bool operator==(const MappingEntry& a, const MappingEntry& b) {
    return a.key == b.key && a.value == b.value;
  }
};

std::string_view kind_name(ValueTree::Kind kind);

/// Object-language literal rendering, e.g. `{'a': 1, 'b': [2.5, None]}`.
/// Unit-carrying floats render as quoted strings (`'45%'`) so the text parses
/// back to the same tree.
std::string to_python_literal(const ValueTree& tree);

/// `str()` of a scalar in the object language: strings verbatim, numbers in
/// repr form, `True`/`False`/`None`.
std::string python_str(const ValueTree& scalar);

/// Flat key -> scalar / sequence-of-scalars / mapping-of-scalars table
/// produced by the statistics stage.
class StatsMap {
 public:
  using Entry = std::pair<std::string, ValueTree>;

  StatsMap() = default;

  /// Inserts or overwrites; an overwritten key keeps its first position.
  void set(std::string key, ValueTree value);
  const ValueTree* find(std::string_view key) const;

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Mapping with string keys, in entry order.
  ValueTree to_tree() const;

  friend bool operator==(const StatsMap& a, const StatsMap& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<Entry> entries_;
};

/// Coerces a statistics result into a StatsMap.
///
/// Accepts a Mapping or a Sequence of Mappings (records). Mappings whose
/// values are all scalars are kept as one entry; deeper Mappings are expanded
/// with "."-joined keys. Sequences of scalars are kept; Sequences of Mappings
/// become one entry per record keyed by the record's "Category" value (or its
/// index when absent). Applying it to its own output is the identity.
///
/// Throws Error(kInvalidArgument) for other top-level shapes.
StatsMap flatten_stats(const ValueTree& result);

}  // namespace chartpot
