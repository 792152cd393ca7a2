#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "chartpot/value_tree.hpp"

namespace chartpot {

/// The six exemplar statistics of one numeric group.
struct TemplateRecord {
  std::string category;  // "."-joined key path, "root" for the top level
  std::int64_t total = 0;
  ValueTree sum;      // int while exact, float once a float is involved
  double average = 0.0;
  ValueTree minimum;  // element as given (int or float)
  ValueTree maximum;
  ValueTree range;    // maximum - minimum

  /// {'Category': ..., 'Total': ..., 'Sum': ..., 'Average': ..., 'Minimum': ..., 'Maximum': ..., 'Range': ...}
  ValueTree to_tree() const;
};

/// Records in depth-first order: a Mapping with at least two numeric scalar
/// children yields one record for those children, then its children are
/// visited; a non-empty Sequence of numerics yields one record; other
/// Sequences are visited element by element. Booleans are not numeric.
std::vector<TemplateRecord> template_records(const ValueTree& chart);

/// template_records flattened through flatten_stats. Total; empty when
/// nothing numeric is found.
StatsMap template_statistics(const ValueTree& chart);

/// The same rule set written in the sandboxed object language. Executing it
/// on a chart must give exactly template_statistics(chart).
extern const std::string_view kCanonicalTemplateSource;

}  // namespace chartpot
