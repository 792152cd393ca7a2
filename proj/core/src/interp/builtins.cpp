#include "interp/builtins.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include <fmt/format.h>

#include "interp/format.hpp"
#include "numeric.hpp"
#include "pyrepr.hpp"

namespace chartpot::interp {

namespace {

void check_args(std::string_view name, const CallArgs& args, std::size_t min, std::size_t max,
                bool keywords_allowed = false) {
  if (!keywords_allowed && !args.kw.empty()) {
    raise(ExcType::kTypeError, fmt::format("{}() takes no keyword arguments", name));
  }
  const std::size_t n = args.pos.size();
  if (n >= min && n <= max) return;
  if (min == max) {
    if (min == 0) raise(ExcType::kTypeError, fmt::format("{}() takes no arguments ({} given)", name, n));
    if (min == 1) raise(ExcType::kTypeError, fmt::format("{}() takes exactly one argument ({} given)", name, n));
    raise(ExcType::kTypeError, fmt::format("{}() takes exactly {} arguments ({} given)", name, min, n));
  }
  if (n < min) {
    raise(ExcType::kTypeError,
          fmt::format("{} expected at least {} argument{}, got {}", name, min, min == 1 ? "" : "s", n));
  }
  raise(ExcType::kTypeError,
        fmt::format("{} expected at most {} argument{}, got {}", name, max, max == 1 ? "" : "s", n));
}

void only_keywords(std::string_view name, const CallArgs& args, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : args.kw) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      raise(ExcType::kTypeError, fmt::format("'{}' is an invalid keyword argument for {}()", k, name));
    }
  }
}

std::int64_t index_arg(Runtime& rt, Value v) {
  if (v.is_integral()) return v.as_int();
  raise(ExcType::kTypeError, fmt::format("'{}' object cannot be interpreted as an integer", rt.type_name(v)));
}

const std::string& str_arg(Runtime& rt, Value v, std::string_view what) {
  if (!v.is(Type::kStr)) {
    if (what.empty()) raise(ExcType::kTypeError, fmt::format("must be str, not {}", rt.type_name(v)));
    raise(ExcType::kTypeError, fmt::format("{} must be str, not {}", what, rt.type_name(v)));
  }
  return Runtime::str_of(v)->s;
}

bool is_space(unsigned char c) { return c == ' ' || (c >= 0x09 && c <= 0x0d) || (c >= 0x1c && c <= 0x1f); }

std::size_t cp_count(std::string_view s) { return detail::utf8_length(s); }

// ---- sorting ----

// Stable merge sort; safe with inconsistent comparisons (NaN).
template <class Less>
void merge_sort(std::vector<std::size_t>& idx, Less&& less) {
  std::vector<std::size_t> tmp(idx.size());
  for (std::size_t width = 1; width < idx.size(); width *= 2) {
    for (std::size_t lo = 0; lo < idx.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, idx.size());
      const std::size_t hi = std::min(lo + 2 * width, idx.size());
      std::size_t a = lo;
      std::size_t b = mid;
      std::size_t out = lo;
      while (a < mid && b < hi) {
        if (less(idx[b], idx[a])) {
          tmp[out++] = idx[b++];
        } else {
          tmp[out++] = idx[a++];
        }
      }
      while (a < mid) tmp[out++] = idx[a++];
      while (b < hi) tmp[out++] = idx[b++];
    }
    idx.swap(tmp);
  }
}

std::vector<Value> sorted_values(Runtime& rt, std::vector<Value> items, const Value* key, bool reverse) {
  std::vector<Value> keys;
  if (key != nullptr && !key->is(Type::kNone)) {
    keys.reserve(items.size());
    for (const Value& v : items) {
      CallArgs a;
      a.pos.push_back(v);
      keys.push_back(rt.call(*key, a));
    }
  } else {
    keys = items;
  }
  if (reverse) {
    std::reverse(items.begin(), items.end());
    std::reverse(keys.begin(), keys.end());
  }
  std::vector<std::size_t> idx(items.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  merge_sort(idx, [&](std::size_t a, std::size_t b) {
    rt.tick();
    return rt.lt(keys[a], keys[b]);
  });
  std::vector<Value> out;
  out.reserve(items.size());
  for (std::size_t k : idx) out.push_back(items[k]);
  if (reverse) std::reverse(out.begin(), out.end());
  return out;
}

// ---- numeric helpers ----

std::vector<detail::Num> numeric_data(Runtime& rt, Value data) {
  std::vector<detail::Num> nums;
  rt.for_each(data, [&](Value v) {
    rt.tick();
    if (!v.is_number()) {
      raise(ExcType::kTypeError, fmt::format("can't convert type '{}' to numerator/denominator", rt.type_name(v)));
    }
    nums.push_back(to_num(v));
    return true;
  });
  return nums;
}

double real_arg(Runtime& rt, Value v) {
  if (v.is(Type::kFloat)) return v.f;
  if (v.is_integral()) return static_cast<double>(v.as_int());
  raise(ExcType::kTypeError, fmt::format("must be real number, not {}", rt.type_name(v)));
}

Value int_from_float(double f) {
  if (std::isnan(f)) raise(ExcType::kValueError, "cannot convert float NaN to integer");
  if (std::isinf(f)) raise(ExcType::kOverflowError, "cannot convert float infinity to integer");
  const double t = std::trunc(f);
  if (t >= -9.2233720368547758e18 && t < 9.2233720368547758e18) return Value::integer(static_cast<std::int64_t>(t));
  return Value::real(t);
}

int digit_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'z') return c - 'a' + 10;
  if (c >= 'A' && c <= 'Z') return c - 'A' + 10;
  return 99;
}

Value int_from_string(Runtime& rt, const std::string& original, std::int64_t base) {
  auto invalid = [&]() -> Value {
    raise(ExcType::kValueError, fmt::format("invalid literal for int() with base {}: {}", base,
                                            detail::python_string_repr(original)));
  };
  std::size_t b = 0;
  std::size_t e = original.size();
  while (b < e && is_space(static_cast<unsigned char>(original[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(original[e - 1]))) --e;
  std::string_view s(original.data() + b, e - b);
  bool negative = false;
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
    negative = s[0] == '-';
    s.remove_prefix(1);
  }
  std::int64_t radix = base;
  if (s.size() >= 2 && s[0] == '0') {
    const char p = static_cast<char>(s[1] | 0x20);
    const std::int64_t prefixed = p == 'x' ? 16 : p == 'o' ? 8 : p == 'b' ? 2 : 0;
    if (prefixed != 0 && (base == 0 || base == prefixed)) {
      radix = prefixed;
      s.remove_prefix(2);
      if (!s.empty() && s[0] == '_') s.remove_prefix(1);
    }
  }
  if (radix == 0) {
    radix = 10;
    if (s.size() > 1 && s[0] == '0' && s.find_first_not_of("0_") != std::string_view::npos) return invalid();
  }
  if (s.empty() || s.front() == '_' || s.back() == '_') return invalid();
  rt.tick(static_cast<std::int64_t>(s.size() / 16));
  detail::Int128 acc = 0;
  bool overflow = false;
  double approx = 0.0;
  char prev = 0;
  for (char c : s) {
    if (c == '_') {
      if (prev == '_') return invalid();
      prev = c;
      continue;
    }
    const int d = digit_value(c);
    if (d >= radix) return invalid();
    approx = approx * static_cast<double>(radix) + d;
    if (!overflow) {
      acc = acc * radix + d;
      if (acc > static_cast<detail::Int128>(std::numeric_limits<std::int64_t>::max()) + 1) overflow = true;
    }
    prev = c;
  }
  if (negative) acc = -acc;
  if (overflow || acc > std::numeric_limits<std::int64_t>::max() || acc < std::numeric_limits<std::int64_t>::min()) {
    return Value::real(negative ? -approx : approx);
  }
  return Value::integer(static_cast<std::int64_t>(acc));
}

Value float_from_string(const std::string& original) {
  auto invalid = [&]() -> Value {
    raise(ExcType::kValueError,
          fmt::format("could not convert string to float: {}", detail::python_string_repr(original)));
  };
  std::size_t b = 0;
  std::size_t e = original.size();
  while (b < e && is_space(static_cast<unsigned char>(original[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(original[e - 1]))) --e;
  std::string s = original.substr(b, e - b);
  if (s.empty()) return invalid();
  std::string lower;
  for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::string_view body = lower;
  bool negative = false;
  if (body[0] == '+' || body[0] == '-') {
    negative = body[0] == '-';
    body.remove_prefix(1);
  }
  if (body == "inf" || body == "infinity") return Value::real(negative ? -HUGE_VAL : HUGE_VAL);
  if (body == "nan") return Value::real(negative ? -std::nan("") : std::nan(""));
  // Validate the decimal literal grammar (digits with single underscores
  // between digits, optional fraction and exponent).
  std::string clean;
  char prev = 0;
  bool digits = false;
  bool seen_point = false;
  bool seen_exp = false;
  for (std::size_t k = 0; k < body.size(); ++k) {
    const char c = body[k];
    if (c >= '0' && c <= '9') {
      digits = true;
      clean += c;
    } else if (c == '_') {
      if (!(prev >= '0' && prev <= '9') || k + 1 >= body.size() || !(body[k + 1] >= '0' && body[k + 1] <= '9')) {
        return invalid();
      }
    } else if (c == '.' && !seen_point && !seen_exp) {
      seen_point = true;
      clean += c;
    } else if (c == 'e' && !seen_exp && digits) {
      seen_exp = true;
      clean += c;
      if (k + 1 < body.size() && (body[k + 1] == '+' || body[k + 1] == '-')) {
        clean += body[++k];
      }
      if (k + 1 >= body.size()) return invalid();
    } else {
      return invalid();
    }
    prev = c;
  }
  if (!digits) return invalid();
  char* end = nullptr;
  const double v = std::strtod(clean.c_str(), &end);
  if (end != clean.c_str() + clean.size()) return invalid();
  return Value::real(negative ? -v : v);
}

std::vector<std::string> split_whitespace(std::string_view s, std::int64_t maxsplit) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    if (maxsplit >= 0 && static_cast<std::int64_t>(out.size()) == maxsplit) {
      std::size_t e = s.size();
      while (e > i && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
      out.emplace_back(s.substr(i, e - i));
      return out;
    }
    const std::size_t start = i;
    while (i < s.size() && !is_space(static_cast<unsigned char>(s[i]))) ++i;
    out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::string strip_chars(const std::string& s, const Value* chars) {
  if (chars == nullptr || chars->is(Type::kNone)) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }
  const std::string& set = Runtime::str_of(*chars)->s;
  // Split into code points so multi-byte characters strip as units.
  std::vector<std::pair<std::size_t, std::size_t>> cps;
  for (std::size_t k = 0; k < s.size();) {
    const auto c = static_cast<unsigned char>(s[k]);
    std::size_t len = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
    len = std::min(len, s.size() - k);
    cps.emplace_back(k, len);
    k += len;
  }
  std::size_t b = 0;
  std::size_t e = cps.size();
  auto strip_one = [&](std::size_t idx) {
    // Check as a code point inside the set's code points.
    const std::string cp = s.substr(cps[idx].first, cps[idx].second);
    for (std::size_t k = 0; k < set.size();) {
      const auto c = static_cast<unsigned char>(set[k]);
      std::size_t len = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
      len = std::min(len, set.size() - k);
      if (set.compare(k, len, cp) == 0) return true;
      k += len;
    }
    return false;
  };
  while (b < e && strip_one(b)) ++b;
  while (e > b && strip_one(e - 1)) --e;
  if (b >= e) return {};
  const std::size_t start = cps[b].first;
  const std::size_t stop = cps[e - 1].first + cps[e - 1].second;
  return s.substr(start, stop - start);
}

std::size_t count_substr(const std::string& s, const std::string& sub) {
  if (sub.empty()) return cp_count(s) + 1;
  std::size_t n = 0;
  for (std::size_t pos = s.find(sub); pos != std::string::npos; pos = s.find(sub, pos + sub.size())) ++n;
  return n;
}

std::string replace_substr(Runtime& rt, const std::string& s, const std::string& old, const std::string& repl,
                           std::int64_t count) {
  std::string out;
  std::int64_t done = 0;
  if (old.empty()) {
    // Inserts `repl` before every code point and at the end.
    std::size_t k = 0;
    while (k <= s.size() && (count < 0 || done < count)) {
      out += repl;
      ++done;
      if (k == s.size()) {
        k = s.size() + 1;
        break;
      }
      const auto c = static_cast<unsigned char>(s[k]);
      std::size_t len = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
      len = std::min(len, s.size() - k);
      out.append(s, k, len);
      k += len;
      rt.charge_nodes(static_cast<std::int64_t>(repl.size() / 64));
    }
    if (k < s.size()) out.append(s, k, std::string::npos);
    return out;
  }
  std::size_t pos = 0;
  while (count < 0 || done < count) {
    const std::size_t hit = s.find(old, pos);
    if (hit == std::string::npos) break;
    out.append(s, pos, hit - pos);
    out += repl;
    rt.charge_nodes(static_cast<std::int64_t>(repl.size() / 64));
    pos = hit + old.size();
    ++done;
  }
  out.append(s, pos, std::string::npos);
  return out;
}

bool affix_matches(Runtime& rt, const std::string& s, Value affix, bool prefix, std::string_view method) {
  auto one = [&](Value a) {
    if (!a.is(Type::kStr)) {
      raise(ExcType::kTypeError, fmt::format("{} first arg must be str or a tuple of str, not {}", method,
                                             rt.type_name(a)));
    }
    const std::string& t = Runtime::str_of(a)->s;
    if (t.size() > s.size()) return false;
    return prefix ? s.compare(0, t.size(), t) == 0 : s.compare(s.size() - t.size(), t.size(), t) == 0;
  };
  if (affix.is(Type::kTuple)) {
    for (const Value& a : Runtime::tuple_of(affix)->items) {
      if (one(a)) return true;
    }
    return false;
  }
  return one(affix);
}

// Python's str.lower/upper restricted to ASCII letters.
std::string ascii_case(const std::string& s, bool upper) {
  std::string out = s;
  for (char& c : out) {
    if (upper && c >= 'a' && c <= 'z') c = static_cast<char>(c - 32);
    if (!upper && c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  }
  return out;
}

void dict_update(Runtime& rt, DictObj* d, const CallArgs& args) {
  if (!args.pos.empty()) {
    Value src = args.pos[0];
    if (src.is(Type::kDict)) {
      DictObj* s = Runtime::dict_of(src);
      const std::vector<DictObj::Entry> entries = s->entries;
      for (const auto& e : entries) {
        if (!e.live) continue;
        rt.tick();
        rt.dict_set(d, e.key, e.value);
      }
    } else {
      std::int64_t index = 0;
      for (Value item : rt.to_vector(src)) {
        rt.tick();
        if (!(item.is(Type::kTuple) || item.is(Type::kList) || item.is(Type::kStr))) {
          raise(ExcType::kTypeError,
                fmt::format("cannot convert dictionary update sequence element #{} to a sequence", index));
        }
        std::vector<Value> pair = rt.to_vector(item);
        if (pair.size() != 2) {
          raise(ExcType::kValueError, fmt::format("dictionary update sequence element #{} has length {}; 2 is required",
                                                  index, pair.size()));
        }
        rt.dict_set(d, pair[0], pair[1]);
        ++index;
      }
    }
  }
  for (const auto& [k, v] : args.kw) rt.dict_set(d, rt.new_str(k), v);
}

Value min_max(Runtime& rt, CallArgs& args, bool is_max) {
  const std::string_view name = is_max ? "max" : "min";
  only_keywords(name, args, {"key", "default"});
  const Value* key = args.keyword("key");
  const Value* dflt = args.keyword("default");
  if (args.pos.empty()) {
    raise(ExcType::kTypeError, fmt::format("{} expected at least 1 argument, got 0", name));
  }
  std::vector<Value> items;
  if (args.pos.size() == 1) {
    items = rt.to_vector(args.pos[0]);
  } else {
    if (dflt != nullptr) {
      raise(ExcType::kTypeError,
            fmt::format("Cannot specify a default for {}() with multiple positional arguments", name));
    }
    items = args.pos;
  }
  if (items.empty()) {
    if (dflt != nullptr) return *dflt;
    raise(ExcType::kValueError, fmt::format("{}() iterable argument is empty", name));
  }
  const bool keyed = key != nullptr && !key->is(Type::kNone);
  auto key_of = [&](Value v) {
    if (!keyed) return v;
    CallArgs a;
    a.pos.push_back(v);
    return rt.call(*key, a);
  };
  Value best = items[0];
  Value best_key = key_of(best);
  for (std::size_t k = 1; k < items.size(); ++k) {
    rt.tick();
    const Value kv = key_of(items[k]);
    if (rt.compare(is_max ? CmpOp::kGt : CmpOp::kLt, kv, best_key)) {
      best = items[k];
      best_key = kv;
    }
  }
  return best;
}

Value sum_values(Runtime& rt, CallArgs& args) {
  only_keywords("sum", args, {"start"});
  if (args.pos.empty() || args.pos.size() > 2) {
    raise(ExcType::kTypeError, fmt::format("sum() takes at most 2 arguments ({} given)", args.pos.size()));
  }
  Value start = Value::integer(0);
  if (args.pos.size() == 2) start = args.pos[1];
  if (const Value* s = args.keyword("start")) start = *s;
  if (start.is(Type::kStr)) raise(ExcType::kTypeError, "sum() can't sum strings [use ''.join(seq) instead]");
  bool fast = start.is(Type::kInt) || start.is(Type::kFloat);
  detail::PySum acc;
  Value result = start;
  if (fast) acc.add(to_num(start));
  rt.for_each(args.pos[0], [&](Value item) {
    rt.tick();
    if (fast && item.is_number()) {
      acc.add(to_num(item));
      return true;
    }
    if (fast) {
      result = from_num(acc.result());
      fast = false;
    }
    result = rt.binop(BinOp::kAdd, result, item);
    return true;
  });
  if (fast) result = from_num(acc.result());
  return result;
}

bool type_matches(Value v, Builtin cls) {
  switch (cls) {
    case Builtin::kInt: return v.is(Type::kInt) || v.is(Type::kBool);
    case Builtin::kFloat: return v.is(Type::kFloat);
    case Builtin::kBool: return v.is(Type::kBool);
    case Builtin::kStr: return v.is(Type::kStr);
    case Builtin::kList: return v.is(Type::kList);
    case Builtin::kTuple: return v.is(Type::kTuple);
    case Builtin::kDict: return v.is(Type::kDict);
    case Builtin::kRange: return v.is(Type::kRange);
    default: return false;
  }
}

bool is_class(Value c) {
  if (!c.is(Type::kBuiltin)) return false;
  switch (c.as_builtin()) {
    case Builtin::kInt:
    case Builtin::kFloat:
    case Builtin::kBool:
    case Builtin::kStr:
    case Builtin::kList:
    case Builtin::kTuple:
    case Builtin::kDict:
    case Builtin::kRange:
    case Builtin::kSet:
    case Builtin::kEnumerate:
    case Builtin::kZip:
    case Builtin::kMap:
    case Builtin::kFilter:
    case Builtin::kReversed:
      return true;
    default:
      return false;
  }
}

bool isinstance_of(Runtime& rt, Value v, Value cls, int depth) {
  if (depth > 32) raise(ExcType::kRecursionError, "maximum recursion depth exceeded in __instancecheck__");
  if (cls.is(Type::kTuple)) {
    for (const Value& c : Runtime::tuple_of(cls)->items) {
      if (isinstance_of(rt, v, c, depth + 1)) return true;
    }
    return false;
  }
  if (!is_class(cls)) raise(ExcType::kTypeError, "isinstance() arg 2 must be a type, a tuple of types, or a union");
  return type_matches(v, cls.as_builtin());
}

Value stat_call(Runtime& rt, Builtin b, CallArgs& args) {
  const std::string_view name = builtin_name(b);
  check_args(name, args, 1, b == Builtin::kStatMean || b == Builtin::kStatMedian ? 1 : 2, true);
  only_keywords(name, args, {});
  const std::vector<detail::Num> data = numeric_data(rt, args.pos[0]);
  const std::size_t n = data.size();
  switch (b) {
    case Builtin::kStatMean:
      if (n == 0) raise(ExcType::kStatisticsError, "mean requires at least one data point");
      return Value::real(detail::stat_mean(data));
    case Builtin::kStatMedian:
      if (n == 0) raise(ExcType::kStatisticsError, "no median for empty data");
      rt.tick(static_cast<std::int64_t>(n));
      return Value::real(detail::stat_median(data));
    case Builtin::kStatVariance:
    case Builtin::kStatStdev: {
      if (n < 2) {
        raise(ExcType::kStatisticsError, b == Builtin::kStatVariance ? "variance requires at least two data points"
                                                                     : "stdev requires at least two data points");
      }
      const double var = detail::stat_variance(data, true);
      return Value::real(b == Builtin::kStatVariance ? var : std::sqrt(var));
    }
    case Builtin::kStatPstdev:
      if (n < 1) raise(ExcType::kStatisticsError, "pstdev requires at least one data point");
      return Value::real(std::sqrt(detail::stat_variance(data, false)));
    default: break;
  }
  return Value::none();
}

Value math_call(Runtime& rt, Builtin b, CallArgs& args) {
  const std::string_view name = builtin_name(b);
  check_args(name, args, 1, 1);
  const Value x = args.pos[0];
  switch (b) {
    case Builtin::kMathSqrt: {
      const double v = real_arg(rt, x);
      if (v < 0) raise(ExcType::kValueError, "math domain error");
      return Value::real(std::sqrt(v));
    }
    case Builtin::kMathFloor:
    case Builtin::kMathCeil: {
      if (x.is_integral()) return Value::integer(x.as_int());
      const double v = real_arg(rt, x);
      return int_from_float(b == Builtin::kMathFloor ? std::floor(v) : std::ceil(v));
    }
    case Builtin::kMathFsum: {
      std::vector<double> values;
      rt.for_each(x, [&](Value v) {
        rt.tick();
        values.push_back(real_arg(rt, v));
        return true;
      });
      return Value::real(detail::fsum(values));
    }
    default: break;
  }
  return Value::none();
}

}  // namespace

Value call_builtin(Runtime& rt, Builtin b, CallArgs& args) {
  switch (b) {
    case Builtin::kLen:
      check_args("len", args, 1, 1);
      return Value::integer(rt.length(args.pos[0]));
    case Builtin::kSum: return sum_values(rt, args);
    case Builtin::kMin: return min_max(rt, args, false);
    case Builtin::kMax: return min_max(rt, args, true);
    case Builtin::kAbs: {
      check_args("abs", args, 1, 1);
      const Value x = args.pos[0];
      if (x.is(Type::kFloat)) return Value::real(std::fabs(x.f));
      if (x.is_integral()) {
        const std::int64_t v = x.as_int();
        if (v == std::numeric_limits<std::int64_t>::min()) return Value::real(-static_cast<double>(v));
        return Value::integer(v < 0 ? -v : v);
      }
      raise(ExcType::kTypeError, fmt::format("bad operand type for abs(): '{}'", rt.type_name(x)));
    }
    case Builtin::kRound: {
      only_keywords("round", args, {"number", "ndigits"});
      std::optional<Value> number;
      std::optional<Value> ndigits;
      if (!args.pos.empty()) number = args.pos[0];
      if (args.pos.size() > 1) ndigits = args.pos[1];
      if (args.pos.size() > 2) {
        raise(ExcType::kTypeError, fmt::format("round() takes at most 2 arguments ({} given)", args.pos.size()));
      }
      if (const Value* v = args.keyword("number")) number = *v;
      if (const Value* v = args.keyword("ndigits")) ndigits = *v;
      if (!number) raise(ExcType::kTypeError, "round() missing required argument 'number' (pos 1)");
      return round_value(rt, *number, ndigits);
    }
    case Builtin::kSorted: {
      only_keywords("sorted", args, {"key", "reverse"});
      if (args.pos.size() != 1) {
        raise(ExcType::kTypeError,
              fmt::format("sorted expected 1 argument, got {}", args.pos.size()));
      }
      const Value* key = args.keyword("key");
      const Value* rev = args.keyword("reverse");
      const bool reverse = rev != nullptr && rt.truthy(*rev);
      return rt.new_list(sorted_values(rt, rt.to_vector(args.pos[0]), key, reverse));
    }
    case Builtin::kRange: {
      check_args("range", args, 1, 3);
      std::int64_t start = 0;
      std::int64_t stop = 0;
      std::int64_t step = 1;
      if (args.pos.size() == 1) {
        stop = index_arg(rt, args.pos[0]);
      } else {
        start = index_arg(rt, args.pos[0]);
        stop = index_arg(rt, args.pos[1]);
        if (args.pos.size() == 3) step = index_arg(rt, args.pos[2]);
      }
      if (step == 0) raise(ExcType::kValueError, "range() arg 3 must not be zero");
      return rt.new_range(start, stop, step);
    }
    case Builtin::kEnumerate: {
      only_keywords("enumerate", args, {"start"});
      if (args.pos.empty() || args.pos.size() > 2) {
        raise(ExcType::kTypeError, "enumerate() missing required argument 'iterable'");
      }
      std::int64_t k = 0;
      if (args.pos.size() == 2) k = index_arg(rt, args.pos[1]);
      if (const Value* s = args.keyword("start")) k = index_arg(rt, *s);
      std::vector<Value> out;
      rt.for_each(args.pos[0], [&](Value v) {
        rt.tick();
        out.push_back(rt.new_tuple({Value::integer(k++), v}));
        return true;
      });
      return rt.new_list(std::move(out));
    }
    case Builtin::kZip: {
      only_keywords("zip", args, {"strict"});
      std::vector<std::vector<Value>> cols;
      for (const Value& it : args.pos) cols.push_back(rt.to_vector(it));
      std::size_t n = cols.empty() ? 0 : std::numeric_limits<std::size_t>::max();
      for (const auto& c : cols) n = std::min(n, c.size());
      std::vector<Value> out;
      for (std::size_t k = 0; k < n; ++k) {
        rt.tick();
        std::vector<Value> row;
        for (const auto& c : cols) row.push_back(c[k]);
        out.push_back(rt.new_tuple(std::move(row)));
      }
      return rt.new_list(std::move(out));
    }
    case Builtin::kList:
      check_args("list", args, 0, 1);
      return rt.new_list(args.pos.empty() ? std::vector<Value>{} : rt.to_vector(args.pos[0]));
    case Builtin::kTuple:
      check_args("tuple", args, 0, 1);
      if (!args.pos.empty() && args.pos[0].is(Type::kTuple)) return args.pos[0];
      return rt.new_tuple(args.pos.empty() ? std::vector<Value>{} : rt.to_vector(args.pos[0]));
    case Builtin::kDict: {
      check_args("dict", args, 0, 1, true);
      Value d = rt.new_dict();
      dict_update(rt, Runtime::dict_of(d), args);
      return d;
    }
    case Builtin::kSet:
      raise(ExcType::kUnsupported, "set is not available");
    case Builtin::kStr: {
      check_args("str", args, 0, 1);
      if (args.pos.empty()) return rt.new_str("");
      if (args.pos[0].is(Type::kStr)) return args.pos[0];
      return rt.new_str(rt.str(args.pos[0]));
    }
    case Builtin::kInt: {
      only_keywords("int", args, {"base"});
      if (args.pos.size() > 2) {
        raise(ExcType::kTypeError, fmt::format("int() takes at most 2 arguments ({} given)", args.pos.size()));
      }
      const Value* base_kw = args.keyword("base");
      const bool has_base = args.pos.size() == 2 || base_kw != nullptr;
      if (args.pos.empty()) {
        if (has_base) raise(ExcType::kTypeError, "int() missing string argument");
        return Value::integer(0);
      }
      const Value x = args.pos[0];
      if (has_base) {
        const std::int64_t base = index_arg(rt, args.pos.size() == 2 ? args.pos[1] : *base_kw);
        if (base != 0 && (base < 2 || base > 36)) raise(ExcType::kValueError, "int() base must be >= 2 and <= 36, or 0");
        if (!x.is(Type::kStr)) raise(ExcType::kTypeError, "int() can't convert non-string with explicit base");
        return int_from_string(rt, Runtime::str_of(x)->s, base);
      }
      if (x.is_integral()) return Value::integer(x.as_int());
      if (x.is(Type::kFloat)) return int_from_float(x.f);
      if (x.is(Type::kStr)) return int_from_string(rt, Runtime::str_of(x)->s, 10);
      raise(ExcType::kTypeError,
            fmt::format("int() argument must be a string, a bytes-like object or a real number, not '{}'",
                        rt.type_name(x)));
    }
    case Builtin::kFloat: {
      check_args("float", args, 0, 1);
      if (args.pos.empty()) return Value::real(0.0);
      const Value x = args.pos[0];
      if (x.is(Type::kFloat)) return x;
      if (x.is_integral()) return Value::real(static_cast<double>(x.as_int()));
      if (x.is(Type::kStr)) return float_from_string(Runtime::str_of(x)->s);
      raise(ExcType::kTypeError,
            fmt::format("float() argument must be a string or a real number, not '{}'", rt.type_name(x)));
    }
    case Builtin::kBool:
      check_args("bool", args, 0, 1);
      return Value::boolean(!args.pos.empty() && rt.truthy(args.pos[0]));
    case Builtin::kAny:
    case Builtin::kAll: {
      const bool any = b == Builtin::kAny;
      check_args(any ? "any" : "all", args, 1, 1);
      bool result = !any;
      rt.for_each(args.pos[0], [&](Value v) {
        rt.tick();
        if (rt.truthy(v) == any) {
          result = any;
          return false;
        }
        return true;
      });
      return Value::boolean(result);
    }
    case Builtin::kMap: {
      if (!args.kw.empty()) raise(ExcType::kTypeError, "map() takes no keyword arguments");
      if (args.pos.size() < 2) raise(ExcType::kTypeError, "map() must have at least two arguments.");
      const Value fn = args.pos[0];
      std::vector<std::vector<Value>> cols;
      for (std::size_t k = 1; k < args.pos.size(); ++k) cols.push_back(rt.to_vector(args.pos[k]));
      std::size_t n = std::numeric_limits<std::size_t>::max();
      for (const auto& c : cols) n = std::min(n, c.size());
      std::vector<Value> out;
      for (std::size_t k = 0; k < n; ++k) {
        CallArgs a;
        for (const auto& c : cols) a.pos.push_back(c[k]);
        out.push_back(rt.call(fn, a));
      }
      return rt.new_list(std::move(out));
    }
    case Builtin::kFilter: {
      check_args("filter", args, 2, 2);
      const Value fn = args.pos[0];
      std::vector<Value> out;
      for (Value v : rt.to_vector(args.pos[1])) {
        bool keep = false;
        if (fn.is(Type::kNone)) {
          keep = rt.truthy(v);
        } else {
          CallArgs a;
          a.pos.push_back(v);
          keep = rt.truthy(rt.call(fn, a));
        }
        if (keep) out.push_back(v);
      }
      return rt.new_list(std::move(out));
    }
    case Builtin::kReversed: {
      check_args("reversed", args, 1, 1);
      const Value x = args.pos[0];
      switch (x.type) {
        case Type::kList:
        case Type::kTuple:
        case Type::kStr:
        case Type::kRange:
        case Type::kDict:
        case Type::kKeys:
        case Type::kValues:
        case Type::kItems: {
          std::vector<Value> items = rt.to_vector(x);
          std::reverse(items.begin(), items.end());
          return rt.new_list(std::move(items));
        }
        default:
          raise(ExcType::kTypeError, fmt::format("'{}' object is not reversible", rt.type_name(x)));
      }
    }
    case Builtin::kIsinstance:
      check_args("isinstance", args, 2, 2);
      return Value::boolean(isinstance_of(rt, args.pos[0], args.pos[1], 0));
    case Builtin::kPrint: {
      only_keywords("print", args, {"sep", "end"});
      std::string sep = " ";
      std::string end = "\n";
      if (const Value* s = args.keyword("sep"); s != nullptr && !s->is(Type::kNone)) sep = str_arg(rt, *s, "sep");
      if (const Value* e = args.keyword("end"); e != nullptr && !e->is(Type::kNone)) end = str_arg(rt, *e, "end");
      std::string line;
      for (std::size_t k = 0; k < args.pos.size(); ++k) {
        if (k > 0) line += sep;
        line += rt.str(args.pos[k]);
      }
      line += end;
      rt.print(line);
      return Value::none();
    }
    case Builtin::kStatMean:
    case Builtin::kStatMedian:
    case Builtin::kStatStdev:
    case Builtin::kStatVariance:
    case Builtin::kStatPstdev: return stat_call(rt, b, args);
    case Builtin::kMathSqrt:
    case Builtin::kMathFloor:
    case Builtin::kMathCeil:
    case Builtin::kMathFsum: return math_call(rt, b, args);
  }
  return Value::none();
}

namespace {

bool method_applies(Type t, Method m) {
  switch (m) {
    case Method::kKeys:
    case Method::kValues:
    case Method::kItems:
    case Method::kGet:
    case Method::kUpdate: return t == Type::kDict;
    case Method::kPop: return t == Type::kDict || t == Type::kList;
    case Method::kAppend:
    case Method::kExtend: return t == Type::kList;
    case Method::kCount:
    case Method::kIndex: return t == Type::kList || t == Type::kTuple || t == Type::kStr;
    case Method::kJoin:
    case Method::kSplit:
    case Method::kStrip:
    case Method::kLower:
    case Method::kUpper:
    case Method::kReplace:
    case Method::kStartswith:
    case Method::kEndswith:
    case Method::kFormat: return t == Type::kStr;
  }
  return false;
}

// Python's index() start/end clamping for sequences.
std::pair<std::int64_t, std::int64_t> search_bounds(Runtime& rt, const CallArgs& args, std::size_t first,
                                                    std::int64_t n) {
  auto clamp = [&](std::size_t k, std::int64_t dflt) {
    if (args.pos.size() <= k || args.pos[k].is(Type::kNone)) return dflt;
    std::int64_t v = index_arg(rt, args.pos[k]);
    if (v < 0) v = std::max<std::int64_t>(0, v + n);
    return std::min(v, n);
  };
  return {clamp(first, 0), clamp(first + 1, n)};
}

}  // namespace

Value get_attribute(Runtime& rt, Value obj, const std::string& name) {
  rt.tick();
  if (obj.is(Type::kModule)) {
    if (auto f = module_function(obj.as_module(), name)) return Value::builtin(*f);
    raise(ExcType::kAttributeError,
          fmt::format("module '{}' has no attribute '{}'", module_name(obj.as_module()), name));
  }
  if (auto m = method_by_name(name); m && method_applies(obj.type, *m)) return rt.new_method(obj, *m);
  raise(ExcType::kAttributeError, fmt::format("'{}' object has no attribute '{}'", rt.type_name(obj), name));
}

Value call_method(Runtime& rt, const MethodObj& mo, CallArgs& args) {
  const Value self = mo.self;
  const std::string_view name = method_name(mo.method);
  switch (mo.method) {
    case Method::kKeys:
    case Method::kValues:
    case Method::kItems: {
      check_args(name, args, 0, 0);
      const Type kind = mo.method == Method::kKeys ? Type::kKeys : mo.method == Method::kValues ? Type::kValues
                                                                                               : Type::kItems;
      return rt.new_view(kind, Runtime::dict_of(self));
    }
    case Method::kGet: {
      check_args("get", args, 1, 2);
      const Value* v = rt.dict_get(Runtime::dict_of(self), args.pos[0]);
      if (v != nullptr) return *v;
      return args.pos.size() == 2 ? args.pos[1] : Value::none();
    }
    case Method::kUpdate:
      check_args("update", args, 0, 1, true);
      dict_update(rt, Runtime::dict_of(self), args);
      return Value::none();
    case Method::kPop: {
      if (self.is(Type::kDict)) {
        check_args("pop", args, 1, 2);
        auto v = rt.dict_pop(Runtime::dict_of(self), args.pos[0]);
        if (v) return *v;
        if (args.pos.size() == 2) return args.pos[1];
        raise(ExcType::kKeyError, rt.repr(args.pos[0]));
      }
      check_args("pop", args, 0, 1);
      auto& items = Runtime::list_of(self)->items;
      if (items.empty()) raise(ExcType::kIndexError, "pop from empty list");
      std::int64_t k = static_cast<std::int64_t>(items.size()) - 1;
      if (!args.pos.empty()) {
        k = index_arg(rt, args.pos[0]);
        if (k < 0) k += static_cast<std::int64_t>(items.size());
        if (k < 0 || k >= static_cast<std::int64_t>(items.size())) raise(ExcType::kIndexError, "pop index out of range");
      }
      const Value v = items[static_cast<std::size_t>(k)];
      items.erase(items.begin() + k);
      rt.tick(static_cast<std::int64_t>(items.size()) - k);
      return v;
    }
    case Method::kAppend:
      check_args("append", args, 1, 1);
      rt.charge_nodes(1);
      Runtime::list_of(self)->items.push_back(args.pos[0]);
      return Value::none();
    case Method::kExtend: {
      check_args("extend", args, 1, 1);
      std::vector<Value> more = rt.to_vector(args.pos[0]);
      rt.charge_nodes(static_cast<std::int64_t>(more.size()));
      auto& items = Runtime::list_of(self)->items;
      items.insert(items.end(), more.begin(), more.end());
      return Value::none();
    }
    case Method::kCount: {
      if (self.is(Type::kStr)) {
        check_args("count", args, 1, 1);
        const std::string& sub = str_arg(rt, args.pos[0], "");
        const std::string& s = Runtime::str_of(self)->s;
        rt.tick(static_cast<std::int64_t>(s.size() / 64));
        return Value::integer(static_cast<std::int64_t>(count_substr(s, sub)));
      }
      check_args("count", args, 1, 1);
      std::int64_t n = 0;
      rt.for_each(self, [&](Value v) {
        rt.tick();
        if (rt.is(v, args.pos[0]) || rt.eq(v, args.pos[0])) ++n;
        return true;
      });
      return Value::integer(n);
    }
    case Method::kIndex: {
      check_args("index", args, 1, 3);
      if (self.is(Type::kStr)) {
        const StrObj& s = *Runtime::str_of(self);
        const std::string& sub = str_arg(rt, args.pos[0], "");
        const auto [lo, hi] = search_bounds(rt, args, 1, static_cast<std::int64_t>(s.length));
        const Value window = rt.slice(self, Value::integer(lo), Value::integer(hi), Value::none());
        const std::string& w = Runtime::str_of(window)->s;
        const std::size_t pos = w.find(sub);
        if (pos == std::string::npos) raise(ExcType::kValueError, "substring not found");
        return Value::integer(lo + static_cast<std::int64_t>(cp_count(std::string_view(w).substr(0, pos))));
      }
      const auto& items = self.is(Type::kList) ? Runtime::list_of(self)->items : Runtime::tuple_of(self)->items;
      const auto [lo, hi] = search_bounds(rt, args, 1, static_cast<std::int64_t>(items.size()));
      for (std::int64_t k = lo; k < hi && k < static_cast<std::int64_t>(items.size()); ++k) {
        rt.tick();
        const Value v = items[static_cast<std::size_t>(k)];
        if (rt.is(v, args.pos[0]) || rt.eq(v, args.pos[0])) return Value::integer(k);
      }
      if (self.is(Type::kTuple)) raise(ExcType::kValueError, "tuple.index(x): x not in tuple");
      raise(ExcType::kValueError, fmt::format("{} is not in list", rt.repr(args.pos[0])));
    }
    case Method::kJoin: {
      check_args("join", args, 1, 1);
      const std::string& sep = Runtime::str_of(self)->s;
      std::string out;
      std::size_t k = 0;
      rt.for_each(args.pos[0], [&](Value v) {
        rt.tick();
        if (!v.is(Type::kStr)) {
          raise(ExcType::kTypeError,
                fmt::format("sequence item {}: expected str instance, {} found", k, rt.type_name(v)));
        }
        if (k > 0) out += sep;
        out += Runtime::str_of(v)->s;
        ++k;
        return true;
      });
      return rt.new_str(std::move(out));
    }
    case Method::kSplit: {
      only_keywords("split", args, {"sep", "maxsplit"});
      if (args.pos.size() > 2) {
        raise(ExcType::kTypeError, fmt::format("split() takes at most 2 arguments ({} given)", args.pos.size()));
      }
      Value sepv = args.pos.empty() ? Value::none() : args.pos[0];
      if (const Value* s = args.keyword("sep")) sepv = *s;
      std::int64_t maxsplit = -1;
      if (args.pos.size() == 2) maxsplit = index_arg(rt, args.pos[1]);
      if (const Value* m = args.keyword("maxsplit")) maxsplit = index_arg(rt, *m);
      const std::string& s = Runtime::str_of(self)->s;
      rt.tick(static_cast<std::int64_t>(s.size() / 16));
      std::vector<std::string> parts;
      if (sepv.is(Type::kNone)) {
        parts = split_whitespace(s, maxsplit);
      } else {
        const std::string& sep = str_arg(rt, sepv, "");
        if (sep.empty()) raise(ExcType::kValueError, "empty separator");
        std::size_t pos = 0;
        while (maxsplit < 0 || static_cast<std::int64_t>(parts.size()) < maxsplit) {
          const std::size_t hit = s.find(sep, pos);
          if (hit == std::string::npos) break;
          parts.push_back(s.substr(pos, hit - pos));
          pos = hit + sep.size();
        }
        parts.push_back(s.substr(pos));
      }
      std::vector<Value> out;
      out.reserve(parts.size());
      for (auto& p : parts) out.push_back(rt.new_str(std::move(p)));
      return rt.new_list(std::move(out));
    }
    case Method::kStrip: {
      check_args("strip", args, 0, 1);
      if (!args.pos.empty() && !args.pos[0].is(Type::kNone) && !args.pos[0].is(Type::kStr)) {
        raise(ExcType::kTypeError, "strip arg must be None or str");
      }
      return rt.new_str(strip_chars(Runtime::str_of(self)->s, args.pos.empty() ? nullptr : &args.pos[0]));
    }
    case Method::kLower:
    case Method::kUpper:
      check_args(name, args, 0, 0);
      return rt.new_str(ascii_case(Runtime::str_of(self)->s, mo.method == Method::kUpper));
    case Method::kReplace: {
      check_args("replace", args, 2, 3);
      const std::string& old = str_arg(rt, args.pos[0], "replace() argument 1");
      const std::string& repl = str_arg(rt, args.pos[1], "replace() argument 2");
      const std::int64_t count = args.pos.size() == 3 ? index_arg(rt, args.pos[2]) : -1;
      const std::string& s = Runtime::str_of(self)->s;
      rt.tick(static_cast<std::int64_t>(s.size() / 16));
      return rt.new_str(replace_substr(rt, s, old, repl, count));
    }
    case Method::kStartswith:
    case Method::kEndswith: {
      check_args(name, args, 1, 3);
      Value target = self;
      if (args.pos.size() > 1) {
        const auto [lo, hi] =
            search_bounds(rt, args, 1, static_cast<std::int64_t>(Runtime::str_of(self)->length));
        target = rt.slice(self, Value::integer(lo), Value::integer(hi), Value::none());
      }
      return Value::boolean(
          affix_matches(rt, Runtime::str_of(target)->s, args.pos[0], mo.method == Method::kStartswith, name));
    }
    case Method::kFormat:
      return rt.new_str(str_format(rt, Runtime::str_of(self)->s, args));
  }
  return Value::none();
}

}  // namespace chartpot::interp
