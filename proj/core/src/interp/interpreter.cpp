#include "chartpot/interpreter.hpp"

#include <fmt/format.h>

#include <new>

#include "chartpot/error.hpp"
#include "chartpot/pyliteral.hpp"
#include "interp/eval.hpp"
#include "interp/parser.hpp"
#include "interp/policy.hpp"

namespace chartpot {

using interp::Runtime;
using interp::Type;
using interp::Value;

ProgramAst::ProgramAst(std::shared_ptr<const interp::Program> program) : program_(std::move(program)) {}

const std::string& ProgramAst::source() const { return program_->source; }

std::size_t ProgramAst::statement_count() const { return program_->entry->body.size(); }

std::string strip_code_fences(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return std::string(text);
  const auto line_end = text.find('\n', open);
  if (line_end == std::string_view::npos) return {};
  std::string_view inner = text.substr(line_end + 1);
  if (auto close = inner.find("```"); close != std::string_view::npos) inner = inner.substr(0, close);
  return std::string(inner);
}

ProgramParse parse_program(std::string_view source) {
  ProgramParse out;
  try {
    std::shared_ptr<const interp::Program> prog = interp::parse_program_source(strip_code_fences(source));
    out.ast.emplace(std::move(prog));
  } catch (const interp::SourceError& e) {
    out.failure = FailureClass{FailureStage::kCodeParse, e.category, e.message};
  }
  return out;
}

std::optional<FailureClass> check_builtin_policy(const ProgramAst& ast) {
  if (auto name = interp::find_forbidden_name(ast.program())) {
    return FailureClass{FailureStage::kCodeParse, FailureCategory::kOther, "forbidden name: " + *name};
  }
  return std::nullopt;
}

std::optional<FailureClass> check_comment_policy(std::string_view source, double max_comment_fraction) {
  std::size_t total = 0;
  std::size_t comment = 0;
  std::size_t code_lines = 0;
  bool line_has_code = false;
  bool in_comment = false;
  char quote = 0;
  bool triple = false;

  for (std::size_t k = 0; k < source.size(); ++k) {
    const char c = source[k];
    if (c == '\n') {
      if (line_has_code) ++code_lines;
      line_has_code = false;
      in_comment = false;
      if (!triple) quote = 0;
      continue;
    }
    ++total;
    if (in_comment) {
      ++comment;
      continue;
    }
    if (quote != 0) {
      if (c == '\\' && k + 1 < source.size() && source[k + 1] != '\n') {
        ++k;
        ++total;
        continue;
      }
      if (c == quote) {
        if (!triple) {
          quote = 0;
        } else if (source.substr(k, 3) == std::string(3, quote)) {
          quote = 0;
          triple = false;
          k += 2;
          total += 2;
        }
      }
      continue;
    }
    if (c == '#') {
      in_comment = true;
      ++comment;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') continue;
    line_has_code = true;
    if (c == '\'' || c == '"') {
      quote = c;
      if (source.substr(k, 3) == std::string(3, c)) {
        triple = true;
        k += 2;
        total += 2;
      }
    }
  }
  if (line_has_code) ++code_lines;

  const bool too_many = total > 0 && static_cast<double>(comment) > max_comment_fraction * static_cast<double>(total);
  if (code_lines == 0 || too_many) {
    return FailureClass{FailureStage::kCodeGen, FailureCategory::kEmptyOutput, "comment-only generation"};
  }
  return std::nullopt;
}

namespace {

struct ConversionError {
  std::string message;
};

Value to_value(Runtime& rt, const ValueTree& tree) {
  switch (tree.kind()) {
    case ValueTree::Kind::kNull: return Value::none();
    case ValueTree::Kind::kBool: return Value::boolean(tree.as_bool());
    case ValueTree::Kind::kInt: return Value::integer(tree.as_int());
    case ValueTree::Kind::kFloat: return Value::real(tree.as_float());
    case ValueTree::Kind::kString: return rt.new_str(tree.as_string());
    case ValueTree::Kind::kSequence: {
      std::vector<Value> items;
      items.reserve(tree.as_sequence().size());
      for (const auto& item : tree.as_sequence()) items.push_back(to_value(rt, item));
      return rt.new_list(std::move(items));
    }
    case ValueTree::Kind::kMapping: {
      const Value d = rt.new_dict();
      for (const auto& e : tree.as_mapping()) {
        rt.dict_set(Runtime::dict_of(d), to_value(rt, e.key), to_value(rt, e.value));
      }
      return d;
    }
  }
  return Value::none();
}

ValueTree to_tree(Runtime& rt, Value v, int depth) {
  if (depth > rt.limits().max_depth) {
    throw interp::BudgetExhausted{fmt::format("data nesting limit of {} exceeded", rt.limits().max_depth)};
  }
  rt.tick();
  auto items_of = [&](const std::vector<Value>& items) {
    Sequence out;
    out.reserve(items.size());
    for (const Value& item : items) out.push_back(to_tree(rt, item, depth + 1));
    return ValueTree::sequence(std::move(out));
  };
  switch (v.type) {
    case Type::kNone: return ValueTree::null();
    case Type::kBool: return ValueTree::boolean(v.b);
    case Type::kInt: return ValueTree::integer(v.i);
    case Type::kFloat: return ValueTree::real(v.f);
    case Type::kStr: return ValueTree::string(Runtime::str_of(v)->s);
    case Type::kList: return items_of(Runtime::list_of(v)->items);
    case Type::kTuple: return items_of(Runtime::tuple_of(v)->items);
    case Type::kRange:
    case Type::kKeys:
    case Type::kValues:
    case Type::kItems: return items_of(rt.to_vector(v));
    case Type::kDict: {
      Mapping out;
      for (const auto& e : Runtime::dict_of(v)->entries) {
        if (e.live) out.push_back({to_tree(rt, e.key, depth + 1), to_tree(rt, e.value, depth + 1)});
      }
      return ValueTree::mapping(std::move(out));
    }
    default: break;
  }
  throw ConversionError{fmt::format("result contains a value of type '{}'", rt.type_name(v))};
}

FailureClass exec_failure(FailureCategory category, std::string message) {
  return FailureClass{FailureStage::kCodeExec, category, std::move(message)};
}

FailureClass classify(const interp::PyException& e) {
  using interp::ExcType;
  switch (e.type) {
    case ExcType::kTypeError: return exec_failure(FailureCategory::kTypeMismatch, e.message);
    case ExcType::kAttributeError: return exec_failure(FailureCategory::kAttributeError, e.message);
    case ExcType::kValueError:
    case ExcType::kStatisticsError: return exec_failure(FailureCategory::kValueError, e.message);
    default: break;
  }
  return exec_failure(FailureCategory::kOther, fmt::format("{}: {}", interp::exc_name(e.type), e.message));
}

}  // namespace

ExecOutcome execute(const ProgramAst& ast, const ValueTree& chart, const SandboxLimits& limits) {
  if (!limits.valid()) throw Error(ErrorCode::kInvalidArgument, "sandbox limits must be strictly positive");
  ExecOutcome out;
  if (auto bad = validate_executable(chart, limits)) {
    bad->stage = FailureStage::kCodeExec;
    out.failure = std::move(bad);
    return out;
  }

  Runtime rt(limits);
  try {
    rt.set_charging(false);
    const Value arg = to_value(rt, chart);
    rt.set_charging(true);
    interp::Evaluator evaluator(rt, ast.program());
    const Value result = evaluator.run(arg);
    if (result.is(Type::kNone)) {
      out.failure = exec_failure(FailureCategory::kEmptyOutput, "get_summary_statistics returned None");
    } else {
      ValueTree tree = to_tree(rt, result, 0);
      try {
        out.stats = flatten_stats(tree);
      } catch (const Error& e) {
        out.failure = exec_failure(FailureCategory::kOther, e.what());
      }
      out.raw_result = std::move(tree);
    }
  } catch (const interp::PyException& e) {
    out.failure = classify(e);
  } catch (const interp::BudgetExhausted& e) {
    out.failure = exec_failure(FailureCategory::kBudgetExceeded, e.message);
  } catch (const ConversionError& e) {
    out.failure = exec_failure(FailureCategory::kOther, e.message);
  } catch (const std::bad_alloc&) {
    out.failure = exec_failure(FailureCategory::kBudgetExceeded, "out of memory");
  }
  out.steps_used = rt.steps();
  out.captured_output = std::move(rt.captured_output());
  return out;
}

ExecOutcome run_program_source(std::string_view source, const ValueTree& chart, const SandboxLimits& limits,
                               double max_comment_fraction) {
  ExecOutcome out;
  const std::string code = strip_code_fences(source);
  if (auto bad = check_comment_policy(code, max_comment_fraction)) {
    out.failure = std::move(bad);
    return out;
  }
  ProgramParse parsed = parse_program(code);
  if (!parsed.ok()) {
    out.failure = std::move(parsed.failure);
    return out;
  }
  if (auto bad = check_builtin_policy(*parsed.ast)) {
    out.failure = std::move(bad);
    return out;
  }
  return execute(*parsed.ast, chart, limits);
}

}  // namespace chartpot
