#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "chartpot/chart.hpp"
#include "chartpot/sandbox.hpp"
#include "chartpot/value_tree.hpp"

namespace chartpot {

namespace interp {
struct Program;
}

/// A parsed and name-resolved `get_summary_statistics` program. Immutable and
/// shareable; each execute() call gets its own heap and budgets.
class ProgramAst {
 public:
  explicit ProgramAst(std::shared_ptr<const interp::Program> program);

  const std::string& source() const;
  /// Statements directly in the entry function's body.
  std::size_t statement_count() const;
  const interp::Program& program() const { return *program_; }

 private:
  std::shared_ptr<const interp::Program> program_;
};

struct ProgramParse {
  std::optional<ProgramAst> ast;
  std::optional<FailureClass> failure;  // stage CodeParse

  bool ok() const noexcept { return ast.has_value(); }
};

struct ExecOutcome {
  std::optional<StatsMap> stats;
  std::optional<FailureClass> failure;  // stage CodeExec for runtime faults
  std::int64_t steps_used = 0;
  std::string captured_output;
  /// The function's return value before flattening, when convertible.
  std::optional<ValueTree> raw_result;

  bool ok() const noexcept { return stats.has_value(); }
};

/// Contents of the first fenced code block, or the text unchanged when there
/// is no fence. An unterminated fence runs to the end of the text.
std::string strip_code_fences(std::string_view text);

/// Strips fences, then parses the supported subset. Never throws.
ProgramParse parse_program(std::string_view source);

/// Other("forbidden name: X") for names, attributes or imports outside the
/// whitelist.
std::optional<FailureClass> check_builtin_policy(const ProgramAst& ast);

inline constexpr double kDefaultMaxCommentFraction = 0.5;

/// EmptyOutput("comment-only generation") when the source has no code lines
/// or comment characters exceed `max_comment_fraction` of all characters.
std::optional<FailureClass> check_comment_policy(std::string_view source,
                                                 double max_comment_fraction = kDefaultMaxCommentFraction);

/// Runs get_summary_statistics(chart) under the budgets. Never throws for
/// program faults; those land in ExecOutcome::failure.
ExecOutcome execute(const ProgramAst& ast, const ValueTree& chart, const SandboxLimits& limits = {});

/// parse_program + both policies + execute, the path the pipeline uses.
ExecOutcome run_program_source(std::string_view source, const ValueTree& chart, const SandboxLimits& limits = {},
                               double max_comment_fraction = kDefaultMaxCommentFraction);

}  // namespace chartpot
