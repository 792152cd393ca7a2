#include "interp/runtime.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>

#include <fmt/format.h>

#include "interp/ast.hpp"
#include "interp/builtins.hpp"
#include "interp/eval.hpp"
#include "interp/format.hpp"
#include "pyrepr.hpp"

namespace chartpot::interp {

namespace {

struct NamedBuiltin {
  std::string_view name;
  Builtin builtin;
};

constexpr std::array<NamedBuiltin, 25> kBuiltins = {{
    {"len", Builtin::kLen},         {"sum", Builtin::kSum},           {"min", Builtin::kMin},
    {"max", Builtin::kMax},         {"abs", Builtin::kAbs},           {"round", Builtin::kRound},
    {"sorted", Builtin::kSorted},   {"range", Builtin::kRange},       {"enumerate", Builtin::kEnumerate},
    {"zip", Builtin::kZip},         {"list", Builtin::kList},         {"dict", Builtin::kDict},
    {"set", Builtin::kSet},         {"tuple", Builtin::kTuple},       {"str", Builtin::kStr},
    {"int", Builtin::kInt},         {"float", Builtin::kFloat},       {"bool", Builtin::kBool},
    {"any", Builtin::kAny},         {"all", Builtin::kAll},           {"map", Builtin::kMap},
    {"filter", Builtin::kFilter},   {"reversed", Builtin::kReversed}, {"isinstance", Builtin::kIsinstance},
    {"print", Builtin::kPrint},
}};

constexpr std::array<NamedBuiltin, 5> kStatistics = {{
    {"mean", Builtin::kStatMean},
    {"median", Builtin::kStatMedian},
    {"stdev", Builtin::kStatStdev},
    {"variance", Builtin::kStatVariance},
    {"pstdev", Builtin::kStatPstdev},
}};

constexpr std::array<NamedBuiltin, 4> kMath = {{
    {"sqrt", Builtin::kMathSqrt},
    {"floor", Builtin::kMathFloor},
    {"ceil", Builtin::kMathCeil},
    {"fsum", Builtin::kMathFsum},
}};

constexpr std::array<std::string_view, 19> kMethodNames = {
    "keys",  "values", "items", "get",   "append",  "extend",     "update",   "pop",   "join",   "split",
    "strip", "lower",  "upper", "replace", "startswith", "endswith", "count", "index", "format",
};

bool is_type_builtin(Builtin b) {
  switch (b) {
    case Builtin::kRange:
    case Builtin::kEnumerate:
    case Builtin::kZip:
    case Builtin::kList:
    case Builtin::kDict:
    case Builtin::kSet:
    case Builtin::kTuple:
    case Builtin::kStr:
    case Builtin::kInt:
    case Builtin::kFloat:
    case Builtin::kBool:
    case Builtin::kMap:
    case Builtin::kFilter:
    case Builtin::kReversed:
      return true;
    default:
      return false;
  }
}

std::size_t mix(std::size_t seed, std::size_t h) {
  return seed ^ (h + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t hash_int(std::int64_t v) { return std::hash<std::int64_t>{}(v); }

// Code-point index -> byte offset; `k` must be within [0, length].
std::size_t byte_offset(const StrObj& s, std::int64_t k) {
  if (s.ascii) return static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (std::int64_t n = 0; n < k && pos < s.s.size(); ++n) {
    const auto c = static_cast<unsigned char>(s.s[pos]);
    std::size_t len = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
    pos += std::min(len, s.s.size() - pos);
  }
  return pos;
}

std::string code_point_at(const StrObj& s, std::int64_t k) {
  const std::size_t start = byte_offset(s, k);
  const std::size_t end = byte_offset(s, k + 1);
  return s.s.substr(start, end - start);
}

// Python's slice.indices(): clamps (lo, hi, step) against a length.
struct SliceBounds {
  std::int64_t start;
  std::int64_t stop;
  std::int64_t step;
  std::int64_t count;
};

std::int64_t slice_index(Value v) {
  if (v.is_integral()) return v.as_int();
  raise(ExcType::kTypeError, "slice indices must be integers or None or have an __index__ method");
}

SliceBounds adjust_slice(Value lo, Value hi, Value stepv, std::int64_t length) {
  std::int64_t step = 1;
  if (!stepv.is(Type::kNone)) {
    step = slice_index(stepv);
    if (step == 0) raise(ExcType::kValueError, "slice step cannot be zero");
  }
  const std::int64_t lower = step < 0 ? -1 : 0;
  const std::int64_t upper = step < 0 ? length - 1 : length;
  auto clamp = [&](Value v, std::int64_t dflt) {
    if (v.is(Type::kNone)) return dflt;
    std::int64_t x = slice_index(v);
    if (x < 0) {
      x = x < std::numeric_limits<std::int64_t>::min() + length ? lower : x + length;
      if (x < lower) x = lower;
    } else if (x > upper) {
      x = upper;
    }
    return x;
  };
  const std::int64_t start = clamp(lo, step < 0 ? upper : lower);
  const std::int64_t stop = clamp(hi, step < 0 ? lower : upper);
  std::int64_t count = 0;
  if (step < 0) {
    if (stop < start) count = (start - stop - 1) / (-step) + 1;
  } else if (start < stop) {
    count = (stop - start - 1) / step + 1;
  }
  return {start, stop, step, count};
}

std::int64_t normalize_index(std::int64_t k, std::int64_t n, const char* message) {
  if (k < 0) k += n;
  if (k < 0 || k >= n) raise(ExcType::kIndexError, message);
  return k;
}

// Python float floor division and modulo.
std::pair<double, double> float_divmod(double vx, double wx) {
  double mod = std::fmod(vx, wx);
  double div = (vx - mod) / wx;
  if (mod != 0.0) {
    if ((wx < 0) != (mod < 0)) {
      mod += wx;
      div -= 1.0;
    }
  } else {
    mod = std::copysign(0.0, wx);
  }
  double floordiv;
  if (div != 0.0) {
    floordiv = std::floor(div);
    if (div - floordiv > 0.5) floordiv += 1.0;
  } else {
    floordiv = std::copysign(0.0, vx / wx);
  }
  return {floordiv, mod};
}

double int_true_divide(std::int64_t a, std::int64_t b) {
  constexpr std::int64_t kExact = std::int64_t{1} << 53;
  if (a > -kExact && a < kExact && b > -kExact && b < kExact) {
    return static_cast<double>(a) / static_cast<double>(b);
  }
  return static_cast<double>(static_cast<long double>(a) / static_cast<long double>(b));
}

}  // namespace

// ---- name tables ----

std::optional<Builtin> builtin_by_name(std::string_view name) {
  for (const auto& e : kBuiltins) {
    if (e.name == name) return e.builtin;
  }
  return std::nullopt;
}

std::string_view builtin_name(Builtin b) {
  for (const auto& e : kBuiltins) {
    if (e.builtin == b) return e.name;
  }
  for (const auto& e : kStatistics) {
    if (e.builtin == b) return e.name;
  }
  for (const auto& e : kMath) {
    if (e.builtin == b) return e.name;
  }
  return "?";
}

std::optional<Method> method_by_name(std::string_view name) {
  for (std::size_t k = 0; k < kMethodNames.size(); ++k) {
    if (kMethodNames[k] == name) return static_cast<Method>(k);
  }
  return std::nullopt;
}

std::string_view method_name(Method m) { return kMethodNames[static_cast<std::size_t>(m)]; }

std::optional<Builtin> module_function(ModuleId module, std::string_view name) {
  if (module == ModuleId::kStatistics) {
    for (const auto& e : kStatistics) {
      if (e.name == name) return e.builtin;
    }
  } else {
    for (const auto& e : kMath) {
      if (e.name == name) return e.builtin;
    }
  }
  return std::nullopt;
}

std::string_view module_name(ModuleId m) { return m == ModuleId::kStatistics ? "statistics" : "math"; }

std::string_view exc_name(ExcType t) {
  switch (t) {
    case ExcType::kTypeError: return "TypeError";
    case ExcType::kAttributeError: return "AttributeError";
    case ExcType::kValueError: return "ValueError";
    case ExcType::kStatisticsError: return "StatisticsError";
    case ExcType::kKeyError: return "KeyError";
    case ExcType::kIndexError: return "IndexError";
    case ExcType::kZeroDivisionError: return "ZeroDivisionError";
    case ExcType::kNameError: return "NameError";
    case ExcType::kUnboundLocalError: return "UnboundLocalError";
    case ExcType::kOverflowError: return "OverflowError";
    case ExcType::kRuntimeError: return "RuntimeError";
    case ExcType::kRecursionError: return "RecursionError";
    case ExcType::kUnsupported: return "NotImplementedError";
  }
  return "Exception";
}

std::string_view binop_symbol(BinOp op) {
  switch (op) {
    case BinOp::kAdd: return "+";
    case BinOp::kSub: return "-";
    case BinOp::kMul: return "*";
    case BinOp::kDiv: return "/";
    case BinOp::kFloorDiv: return "//";
    case BinOp::kMod: return "%";
    case BinOp::kPow: return "** or pow()";
  }
  return "?";
}

std::string_view cmpop_symbol(CmpOp op) {
  switch (op) {
    case CmpOp::kLt: return "<";
    case CmpOp::kLe: return "<=";
    case CmpOp::kGt: return ">";
    case CmpOp::kGe: return ">=";
    case CmpOp::kEq: return "==";
    case CmpOp::kNe: return "!=";
    case CmpOp::kIn: return "in";
    case CmpOp::kNotIn: return "not in";
    case CmpOp::kIs: return "is";
    case CmpOp::kIsNot: return "is not";
  }
  return "?";
}

void raise(ExcType type, std::string message) { throw PyException{type, std::move(message)}; }

StrObj::StrObj(std::string text) : s(std::move(text)) {
  ascii = std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
  length = ascii ? s.size() : detail::utf8_length(s);
}

std::int64_t RangeObj::size() const {
  const detail::Int128 lo = start;
  const detail::Int128 hi = stop;
  detail::Int128 n = 0;
  if (step > 0 && lo < hi) n = (hi - lo - 1) / step + 1;
  if (step < 0 && lo > hi) n = (lo - hi - 1) / (-static_cast<detail::Int128>(step)) + 1;
  return static_cast<std::int64_t>(std::min<detail::Int128>(n, std::numeric_limits<std::int64_t>::max()));
}

// ---- budgets ----

Runtime::Runtime(const SandboxLimits& limits)
    : limits_(limits),
      deadline_(std::chrono::steady_clock::now() + std::chrono::milliseconds(limits.wall_timeout_ms)) {}

Runtime::~Runtime() = default;

void Runtime::tick(std::int64_t n) {
  if (n <= 0) return;
  const std::int64_t before = steps_;
  steps_ += std::min(n, limits_.max_steps + 1);
  if (steps_ > limits_.max_steps) steps_exhausted();
  if ((before >> 12) != (steps_ >> 12)) check_clock();
}

void Runtime::steps_exhausted() {
  steps_ = limits_.max_steps;
  throw BudgetExhausted{fmt::format("step budget of {} exhausted", limits_.max_steps)};
}

void Runtime::check_clock() {
  if (std::chrono::steady_clock::now() > deadline_) {
    throw BudgetExhausted{fmt::format("wall-clock limit of {} ms exceeded", limits_.wall_timeout_ms)};
  }
}

void Runtime::charge_nodes(std::int64_t n) {
  if (!charging_ || n <= 0) return;
  if (n > limits_.max_nodes - nodes_) {
    nodes_ = limits_.max_nodes;
    throw BudgetExhausted{fmt::format("value budget of {} nodes exhausted", limits_.max_nodes)};
  }
  nodes_ += n;
}

void Runtime::enter_call() {
  if (++call_depth_ > limits_.max_depth) {
    --call_depth_;
    throw BudgetExhausted{fmt::format("call depth limit of {} exceeded", limits_.max_depth)};
  }
}

void Runtime::data_depth_check(int depth) {
  if (depth > limits_.max_depth) {
    throw BudgetExhausted{fmt::format("data nesting limit of {} exceeded", limits_.max_depth)};
  }
}

// ---- allocation ----

Value Runtime::new_str(std::string s) {
  charge_nodes(1 + static_cast<std::int64_t>(s.size() / 64));
  auto owned = std::make_unique<StrObj>(std::move(s));
  StrObj* raw = owned.get();
  objects_.push_back(std::move(owned));
  return Value::object(Type::kStr, raw);
}

Value Runtime::new_list(std::vector<Value> items) {
  charge_nodes(static_cast<std::int64_t>(items.size()));
  auto* l = make<ListObj>();
  l->items = std::move(items);
  return Value::object(Type::kList, l);
}

Value Runtime::new_tuple(std::vector<Value> items) {
  charge_nodes(static_cast<std::int64_t>(items.size()));
  auto* t = make<TupleObj>();
  t->items = std::move(items);
  return Value::object(Type::kTuple, t);
}

Value Runtime::new_dict() { return Value::object(Type::kDict, make<DictObj>()); }

Value Runtime::new_range(std::int64_t start, std::int64_t stop, std::int64_t step) {
  auto* r = make<RangeObj>();
  r->start = start;
  r->stop = stop;
  r->step = step;
  return Value::object(Type::kRange, r);
}

Value Runtime::new_view(Type kind, DictObj* d) {
  auto* v = make<ViewObj>();
  v->dict = d;
  return Value::object(kind, v);
}

Value Runtime::new_method(Value self, Method m) {
  auto* obj = make<MethodObj>();
  obj->self = self;
  obj->method = m;
  return Value::object(Type::kMethod, obj);
}

Frame* Runtime::new_frame(Frame* parent, std::size_t slots) {
  charge_nodes(static_cast<std::int64_t>(slots));
  auto* f = make<Frame>();
  f->parent = parent;
  f->slots.assign(slots, Value::unbound());
  return f;
}

// ---- semantics ----

std::string_view Runtime::type_name(Value v) const {
  switch (v.type) {
    case Type::kUnbound:
    case Type::kNone: return "NoneType";
    case Type::kBool: return "bool";
    case Type::kInt: return "int";
    case Type::kFloat: return "float";
    case Type::kStr: return "str";
    case Type::kList: return "list";
    case Type::kTuple: return "tuple";
    case Type::kDict: return "dict";
    case Type::kRange: return "range";
    case Type::kKeys: return "dict_keys";
    case Type::kValues: return "dict_values";
    case Type::kItems: return "dict_items";
    case Type::kFunction: return "function";
    case Type::kBuiltin: return is_type_builtin(v.as_builtin()) ? "type" : "builtin_function_or_method";
    case Type::kMethod: return "builtin_function_or_method";
    case Type::kModule: return "module";
  }
  return "object";
}

bool Runtime::truthy(Value v) {
  switch (v.type) {
    case Type::kUnbound:
    case Type::kNone: return false;
    case Type::kBool: return v.b;
    case Type::kInt: return v.i != 0;
    case Type::kFloat: return v.f != 0.0;
    case Type::kStr: return !str_of(v)->s.empty();
    case Type::kList: return !list_of(v)->items.empty();
    case Type::kTuple: return !tuple_of(v)->items.empty();
    case Type::kDict: return dict_of(v)->live > 0;
    case Type::kRange: return range_of(v)->size() > 0;
    case Type::kKeys:
    case Type::kValues:
    case Type::kItems: return view_of(v)->dict->live > 0;
    default: return true;
  }
}

std::string Runtime::repr(Value v) { return repr_impl(v, 0); }

std::string Runtime::str(Value v) {
  if (v.is(Type::kStr)) return str_of(v)->s;
  return repr(v);
}

std::string Runtime::repr_impl(Value v, int depth) {
  data_depth_check(depth);
  switch (v.type) {
    case Type::kUnbound:
    case Type::kNone: return "None";
    case Type::kBool: return v.b ? "True" : "False";
    case Type::kInt: return std::to_string(v.i);
    case Type::kFloat: return detail::python_float_repr(v.f);
    case Type::kStr: return detail::python_string_repr(str_of(v)->s);
    case Type::kRange: {
      const RangeObj* r = range_of(v);
      if (r->step == 1) return fmt::format("range({}, {})", r->start, r->stop);
      return fmt::format("range({}, {}, {})", r->start, r->stop, r->step);
    }
    case Type::kFunction: {
      auto* fn = static_cast<FunctionObj*>(v.o);
      return fmt::format("<function {}>", fn->def->name);
    }
    case Type::kBuiltin: {
      const Builtin b = v.as_builtin();
      if (is_type_builtin(b)) return fmt::format("<class '{}'>", builtin_name(b));
      return fmt::format("<built-in function {}>", builtin_name(b));
    }
    case Type::kMethod: {
      auto* m = static_cast<MethodObj*>(v.o);
      return fmt::format("<built-in method {} of {} object>", method_name(m->method), type_name(m->self));
    }
    case Type::kModule: return fmt::format("<module '{}'>", module_name(v.as_module()));
    default: break;
  }

  // Containers, with cycle detection.
  const Object* self = v.o;
  if (std::find(repr_stack_.begin(), repr_stack_.end(), self) != repr_stack_.end()) {
    switch (v.type) {
      case Type::kList: return "[...]";
      case Type::kDict: return "{...}";
      default: return "...";
    }
  }
  repr_stack_.push_back(self);
  struct Pop {
    std::vector<const Object*>& stack;
    ~Pop() { stack.pop_back(); }
  } pop{repr_stack_};

  std::string out;
  auto seq = [&](const std::vector<Value>& items, char open, char close, bool tuple) {
    out += open;
    for (std::size_t k = 0; k < items.size(); ++k) {
      if (k > 0) out += ", ";
      tick();
      out += repr_impl(items[k], depth + 1);
    }
    if (tuple && items.size() == 1) out += ',';
    out += close;
  };
  switch (v.type) {
    case Type::kList: seq(list_of(v)->items, '[', ']', false); break;
    case Type::kTuple: seq(tuple_of(v)->items, '(', ')', true); break;
    case Type::kDict: {
      out += '{';
      bool first = true;
      for (const auto& e : dict_of(v)->entries) {
        if (!e.live) continue;
        if (!first) out += ", ";
        first = false;
        tick();
        out += repr_impl(e.key, depth + 1);
        out += ": ";
        out += repr_impl(e.value, depth + 1);
      }
      out += '}';
      break;
    }
    case Type::kKeys:
    case Type::kValues:
    case Type::kItems: {
      out += type_name(v);
      out += "([";
      bool first = true;
      for (const auto& e : view_of(v)->dict->entries) {
        if (!e.live) continue;
        if (!first) out += ", ";
        first = false;
        tick();
        if (v.type == Type::kKeys) {
          out += repr_impl(e.key, depth + 1);
        } else if (v.type == Type::kValues) {
          out += repr_impl(e.value, depth + 1);
        } else {
          out += '(' + repr_impl(e.key, depth + 1) + ", " + repr_impl(e.value, depth + 1) + ')';
        }
      }
      out += "])";
      break;
    }
    default: break;
  }
  charge_nodes(static_cast<std::int64_t>(out.size() / 64));
  return out;
}

bool Runtime::is(Value a, Value b) const {
  if (a.type != b.type) return false;
  switch (a.type) {
    case Type::kUnbound:
    case Type::kNone: return true;
    case Type::kBool: return a.b == b.b;
    case Type::kInt:
    case Type::kBuiltin:
    case Type::kModule: return a.i == b.i;
    case Type::kFloat: return std::bit_cast<std::uint64_t>(a.f) == std::bit_cast<std::uint64_t>(b.f);
    default: return a.o == b.o;
  }
}

bool Runtime::eq(Value a, Value b) { return eq_impl(a, b, 0); }

bool Runtime::eq_impl(Value a, Value b, int depth) {
  data_depth_check(depth);
  if (a.is_number() && b.is_number()) return detail::num_eq(to_num(a), to_num(b));
  if (a.type != b.type) {
    const bool a_none = a.is(Type::kNone) || a.is(Type::kUnbound);
    const bool b_none = b.is(Type::kNone) || b.is(Type::kUnbound);
    return a_none && b_none;
  }
  auto seq_eq = [&](const std::vector<Value>& x, const std::vector<Value>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t k = 0; k < x.size(); ++k) {
      tick();
      if (!is(x[k], y[k]) && !eq_impl(x[k], y[k], depth + 1)) return false;
    }
    return true;
  };
  switch (a.type) {
    case Type::kNone:
    case Type::kUnbound: return true;
    case Type::kStr: return a.o == b.o || str_of(a)->s == str_of(b)->s;
    case Type::kList: return a.o == b.o || seq_eq(list_of(a)->items, list_of(b)->items);
    case Type::kTuple: return a.o == b.o || seq_eq(tuple_of(a)->items, tuple_of(b)->items);
    case Type::kRange: {
      const RangeObj* x = range_of(a);
      const RangeObj* y = range_of(b);
      const std::int64_t n = x->size();
      if (n != y->size()) return false;
      if (n == 0) return true;
      if (x->start != y->start) return false;
      return n == 1 || x->step == y->step;
    }
    case Type::kDict: {
      DictObj* x = dict_of(a);
      DictObj* y = dict_of(b);
      if (x == y) return true;
      if (x->live != y->live) return false;
      for (const auto& e : x->entries) {
        if (!e.live) continue;
        tick();
        const Value* other = dict_get(y, e.key);
        if (other == nullptr) return false;
        if (!is(e.value, *other) && !eq_impl(e.value, *other, depth + 1)) return false;
      }
      return true;
    }
    case Type::kKeys:
    case Type::kItems: {
      DictObj* x = view_of(a)->dict;
      DictObj* y = view_of(b)->dict;
      if (x == y) return true;
      if (x->live != y->live) return false;
      for (const auto& e : x->entries) {
        if (!e.live) continue;
        tick();
        const Value* other = dict_get(y, e.key);
        if (other == nullptr) return false;
        if (a.type == Type::kItems && !is(e.value, *other) && !eq_impl(e.value, *other, depth + 1)) return false;
      }
      return true;
    }
    default: return is(a, b);
  }
}

bool Runtime::compare(CmpOp op, Value a, Value b) {
  int c = 0;
  if (a.is_number() && b.is_number()) {
    c = detail::num_compare(to_num(a), to_num(b));
    if (c == 2) return false;
  } else if (a.is(Type::kStr) && b.is(Type::kStr)) {
    const int r = str_of(a)->s.compare(str_of(b)->s);
    c = r < 0 ? -1 : r > 0 ? 1 : 0;
  } else if ((a.is(Type::kList) && b.is(Type::kList)) || (a.is(Type::kTuple) && b.is(Type::kTuple))) {
    const auto& x = a.is(Type::kList) ? list_of(a)->items : tuple_of(a)->items;
    const auto& y = b.is(Type::kList) ? list_of(b)->items : tuple_of(b)->items;
    std::size_t k = 0;
    for (; k < x.size() && k < y.size(); ++k) {
      tick();
      if (!is(x[k], y[k]) && !eq(x[k], y[k])) break;
    }
    if (k < x.size() && k < y.size()) return compare(op, x[k], y[k]);
    c = x.size() < y.size() ? -1 : x.size() > y.size() ? 1 : 0;
  } else {
    raise(ExcType::kTypeError, fmt::format("'{}' not supported between instances of '{}' and '{}'",
                                           cmpop_symbol(op), type_name(a), type_name(b)));
  }
  switch (op) {
    case CmpOp::kLt: return c < 0;
    case CmpOp::kLe: return c <= 0;
    case CmpOp::kGt: return c > 0;
    case CmpOp::kGe: return c >= 0;
    default: return c == 0;
  }
}

std::size_t Runtime::hash(Value v) { return hash_impl(v, 0); }

std::size_t Runtime::hash_impl(Value v, int depth) {
  data_depth_check(depth);
  switch (v.type) {
    case Type::kUnbound:
    case Type::kNone: return 0x5bd1e995;
    case Type::kBool:
    case Type::kInt: return hash_int(v.as_int());
    case Type::kFloat: {
      const double f = v.f;
      if (std::isfinite(f) && f == std::trunc(f) && f >= -9.2233720368547758e18 && f < 9.2233720368547758e18) {
        return hash_int(static_cast<std::int64_t>(f));
      }
      return std::hash<std::uint64_t>{}(std::bit_cast<std::uint64_t>(f));
    }
    case Type::kStr: return std::hash<std::string_view>{}(str_of(v)->s);
    case Type::kTuple: {
      std::size_t h = 0x345678;
      for (const Value& item : tuple_of(v)->items) {
        tick();
        h = mix(h, hash_impl(item, depth + 1));
      }
      return h;
    }
    case Type::kRange: {
      const RangeObj* r = range_of(v);
      const std::int64_t n = r->size();
      std::size_t h = hash_int(n);
      if (n > 0) h = mix(h, hash_int(r->start));
      if (n > 1) h = mix(h, hash_int(r->step));
      return h;
    }
    case Type::kBuiltin:
    case Type::kModule: return mix(static_cast<std::size_t>(v.type), hash_int(v.i));
    case Type::kList:
    case Type::kDict:
    case Type::kKeys:
    case Type::kValues:
    case Type::kItems:
      raise(ExcType::kTypeError, fmt::format("unhashable type: '{}'", type_name(v)));
    default: return std::hash<const void*>{}(v.o);
  }
}

const Value* Runtime::dict_get(DictObj* d, Value key) {
  const std::size_t h = hash(key);
  auto [lo, hi] = d->index.equal_range(h);
  for (auto it = lo; it != hi; ++it) {
    DictObj::Entry& e = d->entries[it->second];
    if (!e.live) continue;
    if (is(e.key, key) || eq(e.key, key)) return &e.value;
  }
  return nullptr;
}

void Runtime::dict_set(DictObj* d, Value key, Value value) {
  const std::size_t h = hash(key);
  auto [lo, hi] = d->index.equal_range(h);
  for (auto it = lo; it != hi; ++it) {
    DictObj::Entry& e = d->entries[it->second];
    if (!e.live) continue;
    if (is(e.key, key) || eq(e.key, key)) {
      e.value = value;
      return;
    }
  }
  charge_nodes(1);
  if (d->entries.size() > 2 * d->live + 8) {
    std::vector<DictObj::Entry> kept;
    kept.reserve(d->live + 1);
    for (auto& e : d->entries) {
      if (e.live) kept.push_back(e);
    }
    d->entries = std::move(kept);
    d->index.clear();
    for (std::size_t k = 0; k < d->entries.size(); ++k) d->index.emplace(d->entries[k].hash, k);
  }
  d->entries.push_back({key, value, h, true});
  d->index.emplace(h, d->entries.size() - 1);
  ++d->live;
  ++d->version;
}

std::optional<Value> Runtime::dict_pop(DictObj* d, Value key) {
  const std::size_t h = hash(key);
  auto [lo, hi] = d->index.equal_range(h);
  for (auto it = lo; it != hi; ++it) {
    DictObj::Entry& e = d->entries[it->second];
    if (!e.live) continue;
    if (is(e.key, key) || eq(e.key, key)) {
      e.live = false;
      Value v = e.value;
      d->index.erase(it);
      --d->live;
      ++d->version;
      return v;
    }
  }
  return std::nullopt;
}

bool Runtime::contains(Value container, Value item) {
  switch (container.type) {
    case Type::kList:
    case Type::kTuple: {
      bool found = false;
      for_each(container, [&](Value v) {
        tick();
        found = is(v, item) || eq(v, item);
        return !found;
      });
      return found;
    }
    case Type::kStr: {
      if (!item.is(Type::kStr)) {
        raise(ExcType::kTypeError,
              fmt::format("'in <string>' requires string as left operand, not {}", type_name(item)));
      }
      const std::string& hay = str_of(container)->s;
      tick(static_cast<std::int64_t>(hay.size() / 64));
      return hay.find(str_of(item)->s) != std::string::npos;
    }
    case Type::kDict: return dict_get(dict_of(container), item) != nullptr;
    case Type::kKeys: return dict_get(view_of(container)->dict, item) != nullptr;
    case Type::kValues: {
      bool found = false;
      for_each(container, [&](Value v) {
        tick();
        found = is(v, item) || eq(v, item);
        return !found;
      });
      return found;
    }
    case Type::kItems: {
      if (!item.is(Type::kTuple) || tuple_of(item)->items.size() != 2) return false;
      const Value* v = dict_get(view_of(container)->dict, tuple_of(item)->items[0]);
      return v != nullptr && (is(*v, tuple_of(item)->items[1]) || eq(*v, tuple_of(item)->items[1]));
    }
    case Type::kRange: {
      const RangeObj* r = range_of(container);
      std::int64_t x = 0;
      if (item.is_integral()) {
        x = item.as_int();
      } else if (item.is(Type::kFloat)) {
        if (item.f != std::trunc(item.f) || !std::isfinite(item.f) || std::fabs(item.f) >= 9.2e18) return false;
        x = static_cast<std::int64_t>(item.f);
      } else {
        return false;
      }
      const detail::Int128 off = static_cast<detail::Int128>(x) - r->start;
      if (r->step > 0 ? (x < r->start || x >= r->stop) : (x > r->start || x <= r->stop)) return false;
      return off % r->step == 0;
    }
    default:
      raise(ExcType::kTypeError, fmt::format("argument of type '{}' is not iterable", type_name(container)));
  }
}

Value Runtime::negate(Value v) {
  if (v.is(Type::kFloat)) return Value::real(-v.f);
  if (v.is_integral()) {
    const std::int64_t x = v.as_int();
    if (x == std::numeric_limits<std::int64_t>::min()) return Value::real(-static_cast<double>(x));
    return Value::integer(-x);
  }
  raise(ExcType::kTypeError, fmt::format("bad operand type for unary -: '{}'", type_name(v)));
}

Value Runtime::positive(Value v) {
  if (v.is(Type::kFloat)) return v;
  if (v.is_integral()) return Value::integer(v.as_int());
  raise(ExcType::kTypeError, fmt::format("bad operand type for unary +: '{}'", type_name(v)));
}

namespace {

[[noreturn]] void unsupported_operands(Runtime& rt, BinOp op, Value a, Value b) {
  raise(ExcType::kTypeError, fmt::format("unsupported operand type(s) for {}: '{}' and '{}'", binop_symbol(op),
                                         rt.type_name(a), rt.type_name(b)));
}

Value int_pow(std::int64_t base, std::int64_t exp) {
  if (exp < 0) {
    if (base == 0) raise(ExcType::kZeroDivisionError, "0.0 cannot be raised to a negative power");
    return Value::real(std::pow(static_cast<double>(base), static_cast<double>(exp)));
  }
  std::int64_t result = 1;
  std::int64_t b = base;
  std::int64_t e = exp;
  bool overflow = false;
  while (e > 0 && !overflow) {
    if (e & 1) overflow = __builtin_mul_overflow(result, b, &result);
    e >>= 1;
    if (e > 0 && !overflow) overflow = __builtin_mul_overflow(b, b, &b);
  }
  if (!overflow) return Value::integer(result);
  const double f = std::pow(static_cast<double>(base), static_cast<double>(exp));
  if (std::isinf(f)) raise(ExcType::kOverflowError, "int too large to convert to float");
  return Value::real(f);
}

Value float_pow(double x, double y) {
  if (x == 0.0 && y < 0.0) raise(ExcType::kZeroDivisionError, "0.0 cannot be raised to a negative power");
  if (x < 0.0 && std::isfinite(x) && std::isfinite(y) && y != std::trunc(y)) {
    // The object language would produce a complex number here.
    raise(ExcType::kValueError, "math domain error");
  }
  const double r = std::pow(x, y);
  if (std::isinf(r) && std::isfinite(x) && std::isfinite(y)) {
    raise(ExcType::kOverflowError, "(34, 'Numerical result out of range')");
  }
  return Value::real(r);
}

}  // namespace

Value Runtime::binop(BinOp op, Value a, Value b) {
  if (a.is_number() && b.is_number()) {
    const detail::Num x = to_num(a);
    const detail::Num y = to_num(b);
    const bool ints = x.is_int && y.is_int;
    switch (op) {
      case BinOp::kAdd: return from_num(detail::num_add(x, y));
      case BinOp::kSub: return from_num(detail::num_sub(x, y));
      case BinOp::kMul: return from_num(detail::num_mul(x, y));
      case BinOp::kDiv:
        if (ints) {
          if (y.i == 0) raise(ExcType::kZeroDivisionError, "division by zero");
          return Value::real(int_true_divide(x.i, y.i));
        }
        if (y.as_double() == 0.0) raise(ExcType::kZeroDivisionError, "float division by zero");
        return Value::real(x.as_double() / y.as_double());
      case BinOp::kFloorDiv:
      case BinOp::kMod:
        if (ints) {
          if (y.i == 0) {
            raise(ExcType::kZeroDivisionError,
                  op == BinOp::kMod ? "integer modulo by zero" : "integer division or modulo by zero");
          }
          if (x.i == std::numeric_limits<std::int64_t>::min() && y.i == -1) {
            return op == BinOp::kMod ? Value::integer(0) : Value::real(-static_cast<double>(x.i));
          }
          std::int64_t q = x.i / y.i;
          std::int64_t r = x.i % y.i;
          if (r != 0 && ((r < 0) != (y.i < 0))) {
            --q;
            r += y.i;
          }
          return Value::integer(op == BinOp::kMod ? r : q);
        } else {
          if (y.as_double() == 0.0) {
            raise(ExcType::kZeroDivisionError,
                  op == BinOp::kMod ? "float modulo by zero" : "float floor division by zero");
          }
          auto [q, r] = float_divmod(x.as_double(), y.as_double());
          return Value::real(op == BinOp::kMod ? r : q);
        }
      case BinOp::kPow:
        if (ints) return int_pow(x.i, y.i);
        return float_pow(x.as_double(), y.as_double());
    }
  }

  auto repeat = [&](Value seq, Value count) -> Value {
    const std::int64_t n = std::max<std::int64_t>(0, count.as_int());
    if (seq.is(Type::kStr)) {
      const std::string& s = str_of(seq)->s;
      if (n > 0 && static_cast<std::int64_t>(s.size()) > (limits_.max_nodes * 64) / n) {
        charge_nodes(limits_.max_nodes + 1);
      }
      charge_nodes(static_cast<std::int64_t>(s.size()) * n / 64);
      std::string out;
      out.reserve(s.size() * static_cast<std::size_t>(n));
      for (std::int64_t k = 0; k < n; ++k) out += s;
      return new_str(std::move(out));
    }
    const auto& items = seq.is(Type::kList) ? list_of(seq)->items : tuple_of(seq)->items;
    if (n > 0 && !items.empty() && static_cast<std::int64_t>(items.size()) > limits_.max_nodes / n) {
      charge_nodes(limits_.max_nodes + 1);
    }
    charge_nodes(static_cast<std::int64_t>(items.size()) * n);
    std::vector<Value> out;
    out.reserve(items.size() * static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) out.insert(out.end(), items.begin(), items.end());
    set_charging(false);
    Value result = seq.is(Type::kList) ? new_list(std::move(out)) : new_tuple(std::move(out));
    set_charging(true);
    return result;
  };

  const bool a_seq = a.is(Type::kStr) || a.is(Type::kList) || a.is(Type::kTuple);
  const bool b_seq = b.is(Type::kStr) || b.is(Type::kList) || b.is(Type::kTuple);

  switch (op) {
    case BinOp::kAdd:
      if (a.is(Type::kStr)) {
        if (!b.is(Type::kStr)) {
          raise(ExcType::kTypeError, fmt::format("can only concatenate str (not \"{}\") to str", type_name(b)));
        }
        return new_str(str_of(a)->s + str_of(b)->s);
      }
      if (a.is(Type::kList) || a.is(Type::kTuple)) {
        if (b.type != a.type) {
          raise(ExcType::kTypeError, fmt::format("can only concatenate {} (not \"{}\") to {}", type_name(a),
                                                 type_name(b), type_name(a)));
        }
        const auto& x = a.is(Type::kList) ? list_of(a)->items : tuple_of(a)->items;
        const auto& y = b.is(Type::kList) ? list_of(b)->items : tuple_of(b)->items;
        std::vector<Value> out;
        charge_nodes(static_cast<std::int64_t>(x.size() + y.size()));
        out.reserve(x.size() + y.size());
        out.insert(out.end(), x.begin(), x.end());
        out.insert(out.end(), y.begin(), y.end());
        set_charging(false);
        Value result = a.is(Type::kList) ? new_list(std::move(out)) : new_tuple(std::move(out));
        set_charging(true);
        return result;
      }
      break;
    case BinOp::kMul:
      if (a_seq && b.is_integral()) return repeat(a, b);
      if (b_seq && a.is_integral()) return repeat(b, a);
      if (a_seq && !b_seq) {
        raise(ExcType::kTypeError, fmt::format("can't multiply sequence by non-int of type '{}'", type_name(b)));
      }
      if (b_seq && !a_seq) {
        raise(ExcType::kTypeError, fmt::format("can't multiply sequence by non-int of type '{}'", type_name(a)));
      }
      break;
    case BinOp::kMod:
      if (a.is(Type::kStr)) return percent_format(*this, *str_of(a), b);
      break;
    default:
      break;
  }
  unsupported_operands(*this, op, a, b);
}

Value Runtime::subscript(Value c, Value key) {
  switch (c.type) {
    case Type::kList:
    case Type::kTuple: {
      const bool list = c.is(Type::kList);
      const auto& items = list ? list_of(c)->items : tuple_of(c)->items;
      if (!key.is_integral()) {
        raise(ExcType::kTypeError, fmt::format("{} indices must be integers or slices, not {}", type_name(c),
                                               type_name(key)));
      }
      const std::int64_t k = normalize_index(key.as_int(), static_cast<std::int64_t>(items.size()),
                                             list ? "list index out of range" : "tuple index out of range");
      return items[static_cast<std::size_t>(k)];
    }
    case Type::kStr: {
      const StrObj& s = *str_of(c);
      if (!key.is_integral()) {
        raise(ExcType::kTypeError, fmt::format("string indices must be integers, not '{}'", type_name(key)));
      }
      const std::int64_t k =
          normalize_index(key.as_int(), static_cast<std::int64_t>(s.length), "string index out of range");
      return new_str(code_point_at(s, k));
    }
    case Type::kDict: {
      const Value* v = dict_get(dict_of(c), key);
      if (v == nullptr) raise(ExcType::kKeyError, repr(key));
      return *v;
    }
    case Type::kRange: {
      const RangeObj* r = range_of(c);
      if (!key.is_integral()) {
        raise(ExcType::kTypeError,
              fmt::format("range indices must be integers or slices, not {}", type_name(key)));
      }
      const std::int64_t k = normalize_index(key.as_int(), r->size(), "range object index out of range");
      return Value::integer(r->at(k));
    }
    default:
      raise(ExcType::kTypeError, fmt::format("'{}' object is not subscriptable", type_name(c)));
  }
}

Value Runtime::slice(Value c, Value lo, Value hi, Value step) {
  switch (c.type) {
    case Type::kList:
    case Type::kTuple: {
      const auto& items = c.is(Type::kList) ? list_of(c)->items : tuple_of(c)->items;
      const SliceBounds sb = adjust_slice(lo, hi, step, static_cast<std::int64_t>(items.size()));
      tick(sb.count);
      std::vector<Value> out;
      out.reserve(static_cast<std::size_t>(sb.count));
      for (std::int64_t k = 0, idx = sb.start; k < sb.count; ++k, idx += sb.step) {
        out.push_back(items[static_cast<std::size_t>(idx)]);
      }
      return c.is(Type::kList) ? new_list(std::move(out)) : new_tuple(std::move(out));
    }
    case Type::kStr: {
      const StrObj& s = *str_of(c);
      const SliceBounds sb = adjust_slice(lo, hi, step, static_cast<std::int64_t>(s.length));
      tick(sb.count / 64);
      if (sb.step == 1) {
        const std::size_t b0 = byte_offset(s, sb.start);
        const std::size_t b1 = byte_offset(s, sb.start + sb.count);
        return new_str(s.s.substr(b0, b1 - b0));
      }
      std::string out;
      for (std::int64_t k = 0, idx = sb.start; k < sb.count; ++k, idx += sb.step) {
        out += s.ascii ? std::string(1, s.s[static_cast<std::size_t>(idx)]) : code_point_at(s, idx);
      }
      return new_str(std::move(out));
    }
    case Type::kRange: {
      const RangeObj* r = range_of(c);
      const SliceBounds sb = adjust_slice(lo, hi, step, r->size());
      const std::int64_t start = r->at(sb.start);
      const std::int64_t new_step = r->step * sb.step;
      return new_range(start, start + sb.count * new_step, new_step);
    }
    case Type::kDict:
      raise(ExcType::kTypeError, "unhashable type: 'slice'");
    default:
      raise(ExcType::kTypeError, fmt::format("'{}' object is not subscriptable", type_name(c)));
  }
}

void Runtime::set_item(Value c, Value key, Value value) {
  switch (c.type) {
    case Type::kList: {
      auto& items = list_of(c)->items;
      if (!key.is_integral()) {
        raise(ExcType::kTypeError,
              fmt::format("list indices must be integers or slices, not {}", type_name(key)));
      }
      const std::int64_t k = normalize_index(key.as_int(), static_cast<std::int64_t>(items.size()),
                                             "list assignment index out of range");
      items[static_cast<std::size_t>(k)] = value;
      return;
    }
    case Type::kDict: dict_set(dict_of(c), key, value); return;
    default:
      raise(ExcType::kTypeError, fmt::format("'{}' object does not support item assignment", type_name(c)));
  }
}

void Runtime::set_slice(Value c, Value lo, Value hi, Value step, Value items) {
  if (!c.is(Type::kList)) {
    raise(ExcType::kTypeError, fmt::format("'{}' object does not support item assignment", type_name(c)));
  }
  auto& dst = list_of(c)->items;
  std::vector<Value> src;
  if (items.is(Type::kList) || items.is(Type::kTuple) || items.is(Type::kStr) || items.is(Type::kRange) ||
      items.is(Type::kDict) || items.is(Type::kKeys) || items.is(Type::kValues) || items.is(Type::kItems)) {
    src = to_vector(items);
  } else {
    raise(ExcType::kTypeError, "must assign iterable to extended slice");
  }
  const SliceBounds sb = adjust_slice(lo, hi, step, static_cast<std::int64_t>(dst.size()));
  if (sb.step == 1) {
    const auto begin = dst.begin() + sb.start;
    const auto end = dst.begin() + std::max(sb.start, sb.start + sb.count);
    charge_nodes(static_cast<std::int64_t>(src.size()));
    const std::size_t at = static_cast<std::size_t>(begin - dst.begin());
    dst.erase(begin, end);
    dst.insert(dst.begin() + static_cast<std::ptrdiff_t>(at), src.begin(), src.end());
    return;
  }
  if (static_cast<std::int64_t>(src.size()) != sb.count) {
    raise(ExcType::kValueError, fmt::format("attempt to assign sequence of size {} to extended slice of size {}",
                                            src.size(), sb.count));
  }
  for (std::int64_t k = 0, idx = sb.start; k < sb.count; ++k, idx += sb.step) {
    dst[static_cast<std::size_t>(idx)] = src[static_cast<std::size_t>(k)];
  }
}

std::int64_t Runtime::length(Value v) {
  switch (v.type) {
    case Type::kStr: return static_cast<std::int64_t>(str_of(v)->length);
    case Type::kList: return static_cast<std::int64_t>(list_of(v)->items.size());
    case Type::kTuple: return static_cast<std::int64_t>(tuple_of(v)->items.size());
    case Type::kDict: return static_cast<std::int64_t>(dict_of(v)->live);
    case Type::kKeys:
    case Type::kValues:
    case Type::kItems: return static_cast<std::int64_t>(view_of(v)->dict->live);
    case Type::kRange: return range_of(v)->size();
    default:
      raise(ExcType::kTypeError, fmt::format("object of type '{}' has no len()", type_name(v)));
  }
}

std::vector<Value> Runtime::to_vector(Value iterable) {
  std::vector<Value> out;
  if (iterable.is(Type::kRange)) {
    // Fail before materializing a range that cannot fit the value budget.
    const std::int64_t n = range_of(iterable)->size();
    if (charging_ && n > limits_.max_nodes - nodes_) charge_nodes(n);
    tick(n);
    out.reserve(static_cast<std::size_t>(n));
  }
  for_each(iterable, [&](Value v) {
    tick();
    out.push_back(v);
    return true;
  });
  return out;
}

Value Runtime::call(Value callee, CallArgs& args) {
  tick();
  switch (callee.type) {
    case Type::kFunction: return evaluator_->call_function(*static_cast<FunctionObj*>(callee.o), args);
    case Type::kBuiltin: return call_builtin(*this, callee.as_builtin(), args);
    case Type::kMethod: return call_method(*this, *static_cast<MethodObj*>(callee.o), args);
    default:
      raise(ExcType::kTypeError, fmt::format("'{}' object is not callable", type_name(callee)));
  }
}

void Runtime::print(std::string_view text) {
  charge_nodes(static_cast<std::int64_t>(text.size() / 64));
  captured_ += text;
}

}  // namespace chartpot::interp
