#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chartpot/sandbox.hpp"
#include "numeric.hpp"

namespace chartpot::interp {

struct FuncDef;
class Evaluator;

enum class Type : std::uint8_t {
  kUnbound,
  kNone,
  kBool,
  kInt,
  kFloat,
  kStr,
  kList,
  kTuple,
  kDict,
  kRange,
  kKeys,
  kValues,
  kItems,
  kFunction,
  kBuiltin,
  kMethod,
  kModule,
};

enum class Builtin : std::int64_t {
  kLen,
  kSum,
  kMin,
  kMax,
  kAbs,
  kRound,
  kSorted,
  kRange,
  kEnumerate,
  kZip,
  kList,
  kDict,
  kSet,
  kTuple,
  kStr,
  kInt,
  kFloat,
  kBool,
  kAny,
  kAll,
  kMap,
  kFilter,
  kReversed,
  kIsinstance,
  kPrint,
  kStatMean,
  kStatMedian,
  kStatStdev,
  kStatVariance,
  kStatPstdev,
  kMathSqrt,
  kMathFloor,
  kMathCeil,
  kMathFsum,
};

enum class Method : std::uint8_t {
  kKeys,
  kValues,
  kItems,
  kGet,
  kAppend,
  kExtend,
  kUpdate,
  kPop,
  kJoin,
  kSplit,
  kStrip,
  kLower,
  kUpper,
  kReplace,
  kStartswith,
  kEndswith,
  kCount,
  kIndex,
  kFormat,
};

enum class ModuleId : std::int64_t { kStatistics, kMath };

std::optional<Builtin> builtin_by_name(std::string_view name);
std::string_view builtin_name(Builtin b);
std::optional<Method> method_by_name(std::string_view name);
std::string_view method_name(Method m);
std::optional<Builtin> module_function(ModuleId module, std::string_view name);
std::string_view module_name(ModuleId m);

struct Object {
  virtual ~Object() = default;
};

struct Value {
  Type type = Type::kNone;
  union {
    bool b;
    std::int64_t i;
    double f;
    Object* o;
  };

  Value() : i(0) {}
  static Value none() { return {}; }
  static Value unbound() {
    Value v;
    v.type = Type::kUnbound;
    return v;
  }
  static Value boolean(bool x) {
    Value v;
    v.type = Type::kBool;
    v.i = 0;
    v.b = x;
    return v;
  }
  static Value integer(std::int64_t x) {
    Value v;
    v.type = Type::kInt;
    v.i = x;
    return v;
  }
  static Value real(double x) {
    Value v;
    v.type = Type::kFloat;
    v.f = x;
    return v;
  }
  static Value object(Type t, Object* obj) {
    Value v;
    v.type = t;
    v.o = obj;
    return v;
  }
  static Value builtin(Builtin b) {
    Value v;
    v.type = Type::kBuiltin;
    v.i = static_cast<std::int64_t>(b);
    return v;
  }
  static Value module(ModuleId m) {
    Value v;
    v.type = Type::kModule;
    v.i = static_cast<std::int64_t>(m);
    return v;
  }

  bool is(Type t) const { return type == t; }
  bool is_number() const { return type == Type::kInt || type == Type::kFloat || type == Type::kBool; }
  // int-like: int or bool
  bool is_integral() const { return type == Type::kInt || type == Type::kBool; }
  std::int64_t as_int() const { return type == Type::kBool ? static_cast<std::int64_t>(b) : i; }
  Builtin as_builtin() const { return static_cast<Builtin>(i); }
  ModuleId as_module() const { return static_cast<ModuleId>(i); }
};

struct StrObj : Object {
  explicit StrObj(std::string text);
  std::string s;
  std::size_t length = 0;  // code points
  bool ascii = true;
};

struct ListObj : Object {
  std::vector<Value> items;
};

struct TupleObj : Object {
  std::vector<Value> items;
};

struct DictObj : Object {
  struct Entry {
    Value key;
    Value value;
    std::size_t hash = 0;
    bool live = true;
  };
  std::vector<Entry> entries;
  std::unordered_multimap<std::size_t, std::size_t> index;
  std::size_t live = 0;
  std::uint64_t version = 0;
};

struct RangeObj : Object {
  std::int64_t start = 0;
  std::int64_t stop = 0;
  std::int64_t step = 1;
  std::int64_t size() const;
  std::int64_t at(std::int64_t k) const { return start + k * step; }
};

struct ViewObj : Object {
  DictObj* dict = nullptr;
};

struct Frame : Object {
  Frame* parent = nullptr;
  std::vector<Value> slots;
};

struct FunctionObj : Object {
  const FuncDef* def = nullptr;
  Frame* closure = nullptr;
  std::vector<Value> defaults;
};

struct MethodObj : Object {
  Value self;
  Method method = Method::kKeys;
};

enum class ExcType {
  kTypeError,
  kAttributeError,
  kValueError,
  kStatisticsError,
  kKeyError,
  kIndexError,
  kZeroDivisionError,
  kNameError,
  kUnboundLocalError,
  kOverflowError,
  kRuntimeError,
  kRecursionError,
  kUnsupported,
};

std::string_view exc_name(ExcType t);

// An exception raised inside the evaluated program.
struct PyException {
  ExcType type;
  std::string message;
};

// Step, node, depth or time budget exhausted.
struct BudgetExhausted {
  std::string message;
};

struct CallArgs {
  std::vector<Value> pos;
  std::vector<std::pair<std::string, Value>> kw;

  const Value* keyword(std::string_view name) const {
    for (const auto& [k, v] : kw) {
      if (k == name) return &v;
    }
    return nullptr;
  }
};

enum class BinOp { kAdd, kSub, kMul, kDiv, kFloorDiv, kMod, kPow };
enum class CmpOp { kLt, kLe, kGt, kGe, kEq, kNe, kIn, kNotIn, kIs, kIsNot };

std::string_view binop_symbol(BinOp op);
std::string_view cmpop_symbol(CmpOp op);

[[noreturn]] void raise(ExcType type, std::string message);

// Numeric views of number values (bool counts as int).
inline detail::Num to_num(Value v) {
  return v.type == Type::kFloat ? detail::Num::of_float(v.f) : detail::Num::of_int(v.as_int());
}
inline Value from_num(detail::Num n) { return n.is_int ? Value::integer(n.i) : Value::real(n.f); }

// One evaluation's heap, budgets and object-language semantics. Objects live
// until the Runtime is destroyed.
class Runtime {
 public:
  explicit Runtime(const SandboxLimits& limits);
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  const SandboxLimits& limits() const { return limits_; }
  void set_evaluator(Evaluator* e) { evaluator_ = e; }

  // Budgets.
  void tick() {
    if (++steps_ > limits_.max_steps) steps_exhausted();
    if ((steps_ & 0xFFF) == 0) check_clock();
  }
  void tick(std::int64_t n);
  void charge_nodes(std::int64_t n);
  // Chart input is converted without charging the node budget.
  void set_charging(bool on) { charging_ = on; }
  std::int64_t steps() const { return std::min(steps_, limits_.max_steps); }
  void enter_call();
  void leave_call() { --call_depth_; }

  // Allocation.
  template <class T>
  T* make() {
    charge_nodes(1);
    auto owned = std::make_unique<T>();
    T* raw = owned.get();
    objects_.push_back(std::move(owned));
    return raw;
  }
  Value new_str(std::string s);
  Value new_list(std::vector<Value> items = {});
  Value new_tuple(std::vector<Value> items = {});
  Value new_dict();
  Value new_range(std::int64_t start, std::int64_t stop, std::int64_t step);
  Value new_view(Type kind, DictObj* d);
  Value new_method(Value self, Method m);
  Frame* new_frame(Frame* parent, std::size_t slots);

  // Accessors (caller checks the type).
  static StrObj* str_of(Value v) { return static_cast<StrObj*>(v.o); }
  static ListObj* list_of(Value v) { return static_cast<ListObj*>(v.o); }
  static TupleObj* tuple_of(Value v) { return static_cast<TupleObj*>(v.o); }
  static DictObj* dict_of(Value v) { return static_cast<DictObj*>(v.o); }
  static RangeObj* range_of(Value v) { return static_cast<RangeObj*>(v.o); }
  static ViewObj* view_of(Value v) { return static_cast<ViewObj*>(v.o); }

  // Object-language semantics.
  std::string_view type_name(Value v) const;
  bool truthy(Value v);
  std::string repr(Value v);
  std::string str(Value v);
  bool eq(Value a, Value b);
  // Ordering for <, <=, >, >=; raises TypeError for unorderable operands.
  bool compare(CmpOp op, Value a, Value b);
  bool lt(Value a, Value b) { return compare(CmpOp::kLt, a, b); }
  std::size_t hash(Value v);
  bool contains(Value container, Value item);
  bool is(Value a, Value b) const;
  Value binop(BinOp op, Value a, Value b);
  Value negate(Value v);
  Value positive(Value v);
  Value subscript(Value container, Value key);
  Value slice(Value container, Value lo, Value hi, Value step);
  void set_item(Value container, Value key, Value value);
  void set_slice(Value container, Value lo, Value hi, Value step, Value items);
  std::int64_t length(Value v);

  // Dicts.
  const Value* dict_get(DictObj* d, Value key);
  void dict_set(DictObj* d, Value key, Value value);
  std::optional<Value> dict_pop(DictObj* d, Value key);

  // Iteration: calls fn(item) for each element; fn returns false to stop.
  template <class F>
  void for_each(Value iterable, F&& fn);
  std::vector<Value> to_vector(Value iterable);

  // Calls a function-like value.
  Value call(Value callee, CallArgs& args);

  std::string& captured_output() { return captured_; }
  void print(std::string_view text);

 private:
  [[noreturn]] void steps_exhausted();
  void check_clock();
  std::string repr_impl(Value v, int depth);
  bool eq_impl(Value a, Value b, int depth);
  std::size_t hash_impl(Value v, int depth);
  void data_depth_check(int depth);

  SandboxLimits limits_;
  std::int64_t steps_ = 0;
  std::int64_t nodes_ = 0;
  std::int64_t call_depth_ = 0;
  bool charging_ = true;
  std::vector<const Object*> repr_stack_;
  std::chrono::steady_clock::time_point deadline_;
  std::vector<std::unique_ptr<Object>> objects_;
  std::string captured_;
  Evaluator* evaluator_ = nullptr;
};

// Iteration over any iterable value. Lists are read live by index, as the
// object language does; dicts detect size changes during iteration.
template <class F>
void Runtime::for_each(Value it, F&& fn) {
  switch (it.type) {
    case Type::kList: {
      ListObj* l = list_of(it);
      for (std::size_t k = 0; k < l->items.size(); ++k) {
        if (!fn(l->items[k])) return;
      }
      return;
    }
    case Type::kTuple: {
      for (const Value& v : tuple_of(it)->items) {
        if (!fn(v)) return;
      }
      return;
    }
    case Type::kStr: {
      const std::string& s = str_of(it)->s;
      std::size_t k = 0;
      while (k < s.size()) {
        std::size_t len = 1;
        const auto c = static_cast<unsigned char>(s[k]);
        if (c >= 0xF0) len = 4;
        else if (c >= 0xE0) len = 3;
        else if (c >= 0xC0) len = 2;
        len = std::min(len, s.size() - k);
        if (!fn(new_str(s.substr(k, len)))) return;
        k += len;
      }
      return;
    }
    case Type::kRange: {
      RangeObj* r = range_of(it);
      const std::int64_t n = r->size();
      for (std::int64_t k = 0; k < n; ++k) {
        if (!fn(Value::integer(r->at(k)))) return;
      }
      return;
    }
    case Type::kDict:
    case Type::kKeys:
    case Type::kValues:
    case Type::kItems: {
      DictObj* d = it.type == Type::kDict ? dict_of(it) : view_of(it)->dict;
      const std::uint64_t version = d->version;
      for (std::size_t k = 0; k < d->entries.size(); ++k) {
        if (d->version != version) raise(ExcType::kRuntimeError, "dictionary changed size during iteration");
        const DictObj::Entry& e = d->entries[k];
        if (!e.live) continue;
        Value item;
        if (it.type == Type::kValues) {
          item = e.value;
        } else if (it.type == Type::kItems) {
          item = new_tuple({e.key, e.value});
        } else {
          item = e.key;
        }
        if (!fn(item)) return;
        if (d->version != version) raise(ExcType::kRuntimeError, "dictionary changed size during iteration");
      }
      return;
    }
    default:
      raise(ExcType::kTypeError, "'" + std::string(type_name(it)) + "' object is not iterable");
  }
}

}  // namespace chartpot::interp
