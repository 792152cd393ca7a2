#include "interp/format.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include <fmt/format.h>

#include "interp/builtins.hpp"
#include "pyrepr.hpp"

namespace chartpot::interp {

namespace {

struct Spec {
  std::string fill = " ";
  char align = 0;
  char sign = 0;
  bool alt = false;
  bool zero = false;
  std::int64_t width = -1;
  char grouping = 0;
  std::int64_t precision = -1;
  char type = 0;
};

std::size_t cp_len(std::string_view s, std::size_t pos) {
  const auto c = static_cast<unsigned char>(s[pos]);
  const std::size_t len = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
  return std::min(len, s.size() - pos);
}

bool is_align(char c) { return c == '<' || c == '>' || c == '=' || c == '^'; }

std::int64_t read_number(std::string_view s, std::size_t& i) {
  std::int64_t v = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
    if (v > 100'000'000) raise(ExcType::kValueError, "Too many decimal digits in format string");
    v = v * 10 + (s[i] - '0');
    ++i;
  }
  return v;
}

Spec parse_spec(std::string_view s, std::string_view type_name) {
  Spec spec;
  std::size_t i = 0;
  if (!s.empty()) {
    const std::size_t l = cp_len(s, 0);
    if (l < s.size() && is_align(s[l])) {
      spec.fill = std::string(s.substr(0, l));
      spec.align = s[l];
      i = l + 1;
    } else if (is_align(s[0])) {
      spec.align = s[0];
      i = 1;
    }
  }
  const bool explicit_fill = spec.align != 0 && i > 1;
  if (i < s.size() && (s[i] == '+' || s[i] == '-' || s[i] == ' ')) spec.sign = s[i++];
  if (i < s.size() && s[i] == '#') {
    spec.alt = true;
    ++i;
  }
  if (i < s.size() && s[i] == '0') {
    spec.zero = true;
    if (!explicit_fill) spec.fill = "0";
    ++i;
  }
  if (i < s.size() && s[i] >= '0' && s[i] <= '9') spec.width = read_number(s, i);
  if (i < s.size() && (s[i] == ',' || s[i] == '_')) spec.grouping = s[i++];
  if (i < s.size() && s[i] == '.') {
    ++i;
    if (i >= s.size() || s[i] < '0' || s[i] > '9') raise(ExcType::kValueError, "Format specifier missing precision");
    spec.precision = read_number(s, i);
  }
  if (i < s.size()) spec.type = s[i++];
  if (i < s.size()) {
    raise(ExcType::kValueError,
          fmt::format("Invalid format specifier '{}' for object of type '{}'", s, type_name));
  }
  return spec;
}

std::string group_digits(const std::string& digits, char sep, std::size_t every) {
  if (sep == 0 || digits.size() <= every) return digits;
  std::string out;
  const std::size_t first = digits.size() % every == 0 ? every : digits.size() % every;
  out += digits.substr(0, first);
  for (std::size_t k = first; k < digits.size(); k += every) {
    out += sep;
    out += digits.substr(k, every);
  }
  return out;
}

// Pads `sign_prefix + body` to the spec width. `numeric` selects the
// default alignment; `digits`/`rest` allow zero-padding into grouped digits.
std::string pad(Runtime& rt, const Spec& spec, const std::string& sign_prefix, std::string body, bool numeric) {
  char align = spec.align;
  if (align == 0) align = numeric ? (spec.zero ? '=' : '>') : '<';
  const std::int64_t len =
      static_cast<std::int64_t>(detail::utf8_length(sign_prefix) + detail::utf8_length(body));
  if (spec.width <= len) return sign_prefix + body;
  const std::int64_t missing = spec.width - len;
  rt.charge_nodes(missing / 64);
  auto fill = [&](std::int64_t n) {
    std::string out;
    for (std::int64_t k = 0; k < n; ++k) out += spec.fill;
    return out;
  };
  switch (align) {
    case '<': return sign_prefix + body + fill(missing);
    case '^': return fill(missing / 2) + sign_prefix + body + fill(missing - missing / 2);
    case '=': return sign_prefix + fill(missing) + body;
    default: return fill(missing) + sign_prefix + body;
  }
}

// Zero padding with grouping pads inside the grouped digits.
std::string grouped_zero_pad(Runtime& rt, const Spec& spec, const std::string& sign_prefix,
                             const std::string& int_digits, const std::string& rest, std::size_t every) {
  rt.charge_nodes(spec.width / 64);
  const auto fixed = static_cast<std::int64_t>(sign_prefix.size() + rest.size());
  auto grouped_len = [&](std::int64_t d) { return d + (d - 1) / static_cast<std::int64_t>(every); };
  auto d = static_cast<std::int64_t>(int_digits.size());
  while (fixed + grouped_len(d) < spec.width) ++d;
  std::string digits(static_cast<std::size_t>(d) - int_digits.size(), '0');
  digits += int_digits;
  return sign_prefix + group_digits(digits, spec.grouping, every) + rest;
}

bool zero_pads_groups(const Spec& spec) {
  return spec.grouping != 0 && spec.fill == "0" && (spec.align == '=' || (spec.align == 0 && spec.zero));
}

std::string sign_for(const Spec& spec, bool negative) {
  if (negative) return "-";
  if (spec.sign == '+') return "+";
  if (spec.sign == ' ') return " ";
  return "";
}

std::string cformat(const char* fmtstr, int precision, double x) {
  const int n = std::snprintf(nullptr, 0, fmtstr, precision, x);
  std::string out(static_cast<std::size_t>(n), '\0');
  std::snprintf(out.data(), out.size() + 1, fmtstr, precision, x);
  return out;
}

std::string format_int(Runtime& rt, std::int64_t value, const Spec& spec) {
  const char type = spec.type == 0 ? 'd' : spec.type;
  if (spec.precision >= 0) raise(ExcType::kValueError, "Precision not allowed in integer format specifier");
  const bool negative = value < 0;
  const std::uint64_t mag = negative ? 0 - static_cast<std::uint64_t>(value) : static_cast<std::uint64_t>(value);
  std::string digits;
  std::string prefix;
  std::size_t every = 3;
  switch (type) {
    case 'd':
    case 'n': digits = std::to_string(mag); break;
    case 'x':
    case 'X':
      digits = type == 'x' ? fmt::format("{:x}", mag) : fmt::format("{:X}", mag);
      if (spec.alt) prefix = type == 'x' ? "0x" : "0X";
      every = 4;
      break;
    case 'o':
      digits = fmt::format("{:o}", mag);
      if (spec.alt) prefix = "0o";
      every = 4;
      break;
    case 'b':
      digits = fmt::format("{:b}", mag);
      if (spec.alt) prefix = "0b";
      every = 4;
      break;
    case 'c': {
      if (spec.sign != 0) raise(ExcType::kValueError, "Sign not allowed with integer format specifier 'c'");
      if (value < 0 || value > 0x10FFFF) raise(ExcType::kOverflowError, "%c arg not in range(0x110000)");
      std::string ch;
      detail::append_utf8(ch, static_cast<std::uint32_t>(value));
      return pad(rt, spec, "", ch, true);
    }
    default:
      raise(ExcType::kValueError, fmt::format("Unknown format code '{}' for object of type 'int'", type));
  }
  if (spec.grouping == ',' && every == 4) {
    raise(ExcType::kValueError, fmt::format("Cannot specify ',' with '{}'.", type));
  }
  const std::string sign_prefix = sign_for(spec, negative) + prefix;
  if (zero_pads_groups(spec)) return grouped_zero_pad(rt, spec, sign_prefix, digits, "", every);
  return pad(rt, spec, sign_prefix, group_digits(digits, spec.grouping, every), true);
}

std::string format_float(Runtime& rt, double value, const Spec& spec) {
  char type = spec.type;
  switch (type) {
    case 0:
    case 'e':
    case 'E':
    case 'f':
    case 'F':
    case 'g':
    case 'G':
    case 'n':
    case '%': break;
    default:
      raise(ExcType::kValueError, fmt::format("Unknown format code '{}' for object of type 'float'", type));
  }
  if (spec.precision > 1000) rt.charge_nodes(spec.precision / 64);
  const bool negative = std::signbit(value) && !std::isnan(value);
  double x = std::fabs(value);
  const int precision = static_cast<int>(std::min<std::int64_t>(spec.precision, 100'000));
  std::string body;
  std::string suffix;
  if (type == '%') {
    x *= 100.0;
    type = 'f';
    suffix = "%";
  }
  if (type == 'n') type = 'g';
  const bool upper = type == 'E' || type == 'F' || type == 'G';
  if (type == 0) {
    if (precision < 0) {
      body = detail::python_float_repr(x);
    } else {
      body = cformat(spec.alt ? "%#.*g" : "%.*g", std::max(precision, 1), x);
      if (std::isfinite(x) && body.find_first_of(".e") == std::string::npos) body += ".0";
    }
  } else {
    const int p = precision < 0 ? 6 : precision;
    const char lower = static_cast<char>(type | 0x20);
    std::string f = spec.alt ? "%#.*" : "%.*";
    f += lower;
    body = cformat(f.c_str(), lower == 'g' ? std::max(p, 1) : p, x);
    if (lower == 'g' && p == 0) body = cformat(spec.alt ? "%#.*g" : "%.*g", 1, x);
    if (upper) {
      for (char& c : body) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
  }
  body += suffix;
  // Split into integer digits and the rest for grouping.
  std::size_t int_end = 0;
  while (int_end < body.size() && body[int_end] >= '0' && body[int_end] <= '9') ++int_end;
  const std::string int_digits = body.substr(0, int_end);
  const std::string rest = body.substr(int_end);
  const std::string sign_prefix = sign_for(spec, negative);
  if (zero_pads_groups(spec) && int_end > 0) return grouped_zero_pad(rt, spec, sign_prefix, int_digits, rest, 3);
  if (int_end > 0) body = group_digits(int_digits, spec.grouping, 3) + rest;
  return pad(rt, spec, sign_prefix, body, true);
}

std::string format_str(Runtime& rt, const std::string& s, const Spec& spec) {
  if (spec.type != 0 && spec.type != 's') {
    raise(ExcType::kValueError, fmt::format("Unknown format code '{}' for object of type 'str'", spec.type));
  }
  if (spec.sign != 0) raise(ExcType::kValueError, "Sign not allowed in string format specifier");
  if (spec.alt) raise(ExcType::kValueError, "Alternate form (#) not allowed in string format specifier");
  if (spec.align == '=') raise(ExcType::kValueError, "'=' alignment not allowed in string format specifier");
  if (spec.grouping != 0) raise(ExcType::kValueError, fmt::format("Cannot specify '{}' with 's'.", spec.grouping));
  std::string body = s;
  if (spec.precision >= 0 && static_cast<std::size_t>(spec.precision) < detail::utf8_length(s)) {
    std::size_t pos = 0;
    for (std::int64_t k = 0; k < spec.precision; ++k) pos += cp_len(s, pos);
    body = s.substr(0, pos);
  }
  return pad(rt, spec, "", body, false);
}

}  // namespace

std::string format_value(Runtime& rt, Value v, std::string_view spec_text) {
  rt.tick();
  if (spec_text.empty()) return rt.str(v);
  switch (v.type) {
    case Type::kBool:
    case Type::kInt: {
      const Spec spec = parse_spec(spec_text, "int");
      switch (spec.type) {
        case 'e':
        case 'E':
        case 'f':
        case 'F':
        case 'g':
        case 'G':
        case '%':
          return format_float(rt, static_cast<double>(v.as_int()), spec);
        default:
          return format_int(rt, v.as_int(), spec);
      }
    }
    case Type::kFloat: return format_float(rt, v.f, parse_spec(spec_text, "float"));
    case Type::kStr: return format_str(rt, Runtime::str_of(v)->s, parse_spec(spec_text, "str"));
    default:
      raise(ExcType::kTypeError, fmt::format("unsupported format string passed to {}.__format__", rt.type_name(v)));
  }
}

namespace {

Value lookup_field(Runtime& rt, std::string_view field, const CallArgs& args, int& auto_index, bool& manual) {
  std::size_t i = 0;
  while (i < field.size() && field[i] != '.' && field[i] != '[') ++i;
  const std::string_view head = field.substr(0, i);
  Value v;
  if (head.empty() || std::all_of(head.begin(), head.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    std::size_t index = 0;
    if (head.empty()) {
      if (manual) {
        raise(ExcType::kValueError, "cannot switch from manual field specification to automatic field numbering");
      }
      index = static_cast<std::size_t>(auto_index++);
    } else {
      if (auto_index > 0) {
        raise(ExcType::kValueError, "cannot switch from automatic field numbering to manual field specification");
      }
      manual = true;
      index = std::strtoull(std::string(head).c_str(), nullptr, 10);
    }
    if (index >= args.pos.size()) {
      raise(ExcType::kIndexError, fmt::format("Replacement index {} out of range for positional args tuple", index));
    }
    v = args.pos[index];
  } else {
    const Value* kw = args.keyword(head);
    if (kw == nullptr) raise(ExcType::kKeyError, detail::python_string_repr(head));
    v = *kw;
  }
  while (i < field.size()) {
    if (field[i] == '.') {
      std::size_t j = i + 1;
      while (j < field.size() && field[j] != '.' && field[j] != '[') ++j;
      if (j == i + 1) raise(ExcType::kValueError, "Empty attribute in format string");
      v = get_attribute(rt, v, std::string(field.substr(i + 1, j - i - 1)));
      i = j;
    } else {
      const std::size_t close = field.find(']', i);
      if (close == std::string_view::npos) raise(ExcType::kValueError, "Missing ']' in format string");
      const std::string_view key = field.substr(i + 1, close - i - 1);
      if (key.empty()) raise(ExcType::kValueError, "Empty attribute in format string");
      const bool numeric = std::all_of(key.begin(), key.end(), [](char c) { return c >= '0' && c <= '9'; });
      const Value k = numeric ? Value::integer(std::strtoll(std::string(key).c_str(), nullptr, 10))
                              : rt.new_str(std::string(key));
      v = rt.subscript(v, k);
      i = close + 1;
    }
  }
  return v;
}

std::string format_impl(Runtime& rt, std::string_view f, const CallArgs& args, int& auto_index, bool& manual,
                        int depth) {
  if (depth > 2) raise(ExcType::kValueError, "Max string recursion exceeded");
  std::string out;
  std::size_t i = 0;
  while (i < f.size()) {
    const char c = f[i];
    if (c == '}') {
      if (i + 1 < f.size() && f[i + 1] == '}') {
        out += '}';
        i += 2;
        continue;
      }
      raise(ExcType::kValueError, "Single '}' encountered in format string");
    }
    if (c != '{') {
      out += c;
      ++i;
      continue;
    }
    if (i + 1 < f.size() && f[i + 1] == '{') {
      out += '{';
      i += 2;
      continue;
    }
    // Find the matching close brace, allowing one level of nesting in the spec.
    std::size_t j = i + 1;
    int nest = 1;
    while (j < f.size()) {
      if (f[j] == '{') ++nest;
      if (f[j] == '}' && --nest == 0) break;
      ++j;
    }
    if (j >= f.size()) {
      raise(ExcType::kValueError, nest > 1 ? "expected '}' before end of string" : "Single '{' encountered in format string");
    }
    std::string_view inner = f.substr(i + 1, j - i - 1);
    std::string_view field = inner;
    std::string_view spec;
    char conversion = 0;
    std::size_t k = 0;
    bool in_bracket = false;
    for (; k < inner.size(); ++k) {
      if (inner[k] == '[') in_bracket = true;
      if (inner[k] == ']') in_bracket = false;
      if (!in_bracket && (inner[k] == '!' || inner[k] == ':')) break;
    }
    field = inner.substr(0, k);
    if (k < inner.size() && inner[k] == '!') {
      if (k + 1 >= inner.size()) raise(ExcType::kValueError, "end of string while looking for conversion specifier");
      conversion = inner[k + 1];
      if (k + 2 < inner.size() && inner[k + 2] != ':') raise(ExcType::kValueError, "expected ':' after conversion specifier");
      k += 2;
    }
    if (k < inner.size() && inner[k] == ':') spec = inner.substr(k + 1);
    Value v = lookup_field(rt, field, args, auto_index, manual);
    if (conversion == 'r' || conversion == 'a') {
      v = rt.new_str(rt.repr(v));
    } else if (conversion == 's') {
      v = rt.new_str(rt.str(v));
    } else if (conversion != 0) {
      raise(ExcType::kValueError, fmt::format("Unknown conversion specifier {}", conversion));
    }
    std::string spec_text(spec);
    if (spec_text.find('{') != std::string::npos) {
      spec_text = format_impl(rt, spec_text, args, auto_index, manual, depth + 1);
    }
    out += format_value(rt, v, spec_text);
    i = j + 1;
  }
  return out;
}

}  // namespace

std::string str_format(Runtime& rt, std::string_view f, const CallArgs& args) {
  int auto_index = 0;
  bool manual = false;
  std::string out = format_impl(rt, f, args, auto_index, manual, 0);
  rt.charge_nodes(static_cast<std::int64_t>(out.size() / 64));
  return out;
}

// ---- printf-style formatting ----

namespace {

double real_arg(Runtime& rt, Value v) {
  if (v.is(Type::kFloat)) return v.f;
  if (v.is_integral()) return static_cast<double>(v.as_int());
  raise(ExcType::kTypeError, fmt::format("must be real number, not {}", rt.type_name(v)));
}

}  // namespace

Value percent_format(Runtime& rt, const StrObj& fmt_obj, Value args) {
  const std::string& f = fmt_obj.s;
  std::vector<Value> items;
  const bool is_mapping = args.is(Type::kDict);
  if (args.is(Type::kTuple)) {
    items = Runtime::tuple_of(args)->items;
  } else {
    items.push_back(args);
  }
  std::size_t next = 0;
  auto take = [&]() -> Value {
    if (next >= items.size()) raise(ExcType::kTypeError, "not enough arguments for format string");
    return items[next++];
  };
  std::string out;
  std::size_t i = 0;
  while (i < f.size()) {
    rt.tick();
    if (f[i] != '%') {
      out += f[i++];
      continue;
    }
    ++i;
    if (i >= f.size()) raise(ExcType::kValueError, "incomplete format");
    Value mapped;
    bool has_mapped = false;
    if (f[i] == '(') {
      if (!is_mapping) raise(ExcType::kTypeError, "format requires a mapping");
      std::size_t depth = 1;
      std::size_t j = i + 1;
      while (j < f.size() && depth > 0) {
        if (f[j] == '(') ++depth;
        if (f[j] == ')') --depth;
        ++j;
      }
      if (depth > 0) raise(ExcType::kValueError, "incomplete format key");
      const Value key = rt.new_str(f.substr(i + 1, j - i - 2));
      const Value* v = rt.dict_get(Runtime::dict_of(args), key);
      if (v == nullptr) raise(ExcType::kKeyError, rt.repr(key));
      mapped = *v;
      has_mapped = true;
      i = j;
    }
    Spec spec;
    bool left = false;
    bool zero = false;
    for (; i < f.size(); ++i) {
      const char c = f[i];
      if (c == '-') left = true;
      else if (c == '+') spec.sign = '+';
      else if (c == ' ') { if (spec.sign != '+') spec.sign = ' '; }
      else if (c == '#') spec.alt = true;
      else if (c == '0') zero = true;
      else break;
    }
    if (i < f.size() && f[i] == '*') {
      const Value w = take();
      if (!w.is_integral()) raise(ExcType::kTypeError, "* wants int");
      spec.width = w.as_int();
      if (spec.width < 0) {
        left = true;
        spec.width = -spec.width;
      }
      ++i;
    } else {
      spec.width = read_number(f, i);
      if (spec.width == 0) spec.width = -1;
    }
    if (i < f.size() && f[i] == '.') {
      ++i;
      if (i < f.size() && f[i] == '*') {
        const Value p = take();
        if (!p.is_integral()) raise(ExcType::kTypeError, "* wants int");
        spec.precision = std::max<std::int64_t>(0, p.as_int());
        ++i;
      } else {
        spec.precision = read_number(f, i);
      }
    }
    while (i < f.size() && (f[i] == 'h' || f[i] == 'l' || f[i] == 'L')) ++i;
    if (i >= f.size()) raise(ExcType::kValueError, "incomplete format");
    const char type = f[i++];
    if (type == '%') {
      out += '%';
      continue;
    }
    const Value v = has_mapped ? mapped : take();
    if (left) {
      spec.align = '<';
    } else if (zero) {
      spec.fill = "0";
      spec.align = '=';
    } else {
      spec.align = '>';
    }
    std::string piece;
    switch (type) {
      case 'd':
      case 'i':
      case 'u': {
        if (!v.is_number()) {
          raise(ExcType::kTypeError,
                fmt::format("%{} format: a real number is required, not {}", type, rt.type_name(v)));
        }
        std::int64_t n = 0;
        if (v.is(Type::kFloat)) {
          if (std::isnan(v.f)) raise(ExcType::kValueError, "cannot convert float NaN to integer");
          if (std::isinf(v.f)) raise(ExcType::kOverflowError, "cannot convert float infinity to integer");
          n = static_cast<std::int64_t>(std::trunc(v.f));
        } else {
          n = v.as_int();
        }
        Spec s = spec;
        s.precision = -1;
        s.type = 'd';
        piece = format_int(rt, n, s);
        if (spec.precision > 0) {
          // %.3d zero-extends the digits.
          const std::uint64_t mag = n < 0 ? 0 - static_cast<std::uint64_t>(n) : static_cast<std::uint64_t>(n);
          std::string digits = std::to_string(mag);
          while (static_cast<std::int64_t>(digits.size()) < spec.precision) digits.insert(digits.begin(), '0');
          Spec s2 = spec;
          s2.precision = -1;
          piece = pad(rt, s2, sign_for(spec, n < 0), digits, true);
        }
        break;
      }
      case 'x':
      case 'X':
      case 'o': {
        if (!v.is_integral()) {
          raise(ExcType::kTypeError, fmt::format("%{} format: an integer is required, not {}", type, rt.type_name(v)));
        }
        Spec s = spec;
        s.precision = -1;
        s.type = type;
        piece = format_int(rt, v.as_int(), s);
        break;
      }
      case 'e':
      case 'E':
      case 'f':
      case 'F':
      case 'g':
      case 'G': {
        Spec s = spec;
        s.type = type;
        if (s.precision < 0) s.precision = 6;
        piece = format_float(rt, real_arg(rt, v), s);
        break;
      }
      case 'c': {
        std::string ch;
        if (v.is(Type::kStr) && Runtime::str_of(v)->length == 1) {
          ch = Runtime::str_of(v)->s;
        } else if (v.is_integral()) {
          if (v.as_int() < 0 || v.as_int() > 0x10FFFF) raise(ExcType::kOverflowError, "%c arg not in range(0x110000)");
          detail::append_utf8(ch, static_cast<std::uint32_t>(v.as_int()));
        } else {
          raise(ExcType::kTypeError, "%c requires int or char");
        }
        Spec s = spec;
        s.align = left ? '<' : '>';
        s.fill = " ";
        piece = pad(rt, s, "", ch, false);
        break;
      }
      case 's':
      case 'r':
      case 'a': {
        std::string text = type == 's' ? rt.str(v) : rt.repr(v);
        Spec s;
        s.width = spec.width;
        s.precision = spec.precision;
        s.align = left ? '<' : '>';
        piece = format_str(rt, text, s);
        break;
      }
      default:
        raise(ExcType::kValueError,
              fmt::format("unsupported format character '{}' (0x{:x}) at index {}", type,
                          static_cast<unsigned char>(type), i - 1));
    }
    out += piece;
  }
  if (!is_mapping && next < items.size()) {
    raise(ExcType::kTypeError, "not all arguments converted during string formatting");
  }
  return rt.new_str(std::move(out));
}

// ---- round ----

std::string fixed_digits(double x, int digits) { return cformat("%.*f", digits, x); }

namespace {

// Rounds the exact decimal expansion of |x| half-even to `ndigits` places
// (negative: tens, hundreds, ...) and returns the correctly rounded double.
double round_decimal(double x, std::int64_t ndigits) {
  const bool negative = std::signbit(x);
  const std::string exact = cformat("%.*f", 1080, std::fabs(x));
  const std::size_t point = exact.find('.');
  std::string digits = exact.substr(0, point) + exact.substr(point + 1);
  const std::int64_t int_len = static_cast<std::int64_t>(point);
  // Digits kept: everything before position int_len + ndigits.
  const std::int64_t keep = int_len + ndigits;
  if (keep < 0) return negative ? -0.0 : 0.0;
  std::string kept = digits.substr(0, static_cast<std::size_t>(keep));
  const std::string dropped = digits.substr(static_cast<std::size_t>(keep));
  bool round_up = false;
  if (!dropped.empty()) {
    if (dropped[0] > '5') {
      round_up = true;
    } else if (dropped[0] == '5') {
      const bool exact_half = dropped.find_first_not_of('0', 1) == std::string::npos;
      const bool odd = !kept.empty() && ((kept.back() - '0') % 2 == 1);
      round_up = !exact_half || odd;
    }
  }
  if (round_up) {
    std::int64_t k = static_cast<std::int64_t>(kept.size()) - 1;
    while (k >= 0 && kept[static_cast<std::size_t>(k)] == '9') kept[static_cast<std::size_t>(k--)] = '0';
    if (k < 0) {
      kept.insert(kept.begin(), '1');
    } else {
      ++kept[static_cast<std::size_t>(k)];
    }
  }
  if (kept.empty()) kept = "0";
  std::string text = kept;
  if (ndigits < 0) {
    text += "e" + std::to_string(-ndigits);
  } else if (ndigits > 0) {
    text = text.substr(0, text.size() - static_cast<std::size_t>(ndigits)) + "." +
           text.substr(text.size() - static_cast<std::size_t>(ndigits));
    if (text[0] == '.') text.insert(text.begin(), '0');
  }
  const double r = std::strtod(text.c_str(), nullptr);
  return negative ? -r : r;
}

}  // namespace

Value round_value(Runtime& rt, Value x, std::optional<Value> ndigits) {
  if (!x.is_number()) {
    raise(ExcType::kTypeError, fmt::format("type {} doesn't define __round__ method", rt.type_name(x)));
  }
  const bool no_digits = !ndigits || ndigits->is(Type::kNone);
  if (!no_digits && !ndigits->is_integral()) {
    raise(ExcType::kTypeError,
          fmt::format("'{}' object cannot be interpreted as an integer", rt.type_name(*ndigits)));
  }
  if (x.is_integral()) {
    const std::int64_t v = x.as_int();
    if (no_digits || ndigits->as_int() >= 0) return Value::integer(v);
    const std::int64_t nd = -ndigits->as_int();
    if (nd >= 19) return Value::integer(0);
    std::int64_t pow10 = 1;
    for (std::int64_t k = 0; k < nd; ++k) pow10 *= 10;
    std::int64_t q = v / pow10;
    std::int64_t r = v % pow10;
    if (r < 0) {
      r += pow10;
      --q;
    }
    const std::int64_t twice = 2 * r;
    if (r > pow10 - r || (twice == pow10 && (q & 1) != 0)) ++q;
    std::int64_t result = 0;
    if (__builtin_mul_overflow(q, pow10, &result)) {
      return Value::real(static_cast<double>(q) * static_cast<double>(pow10));
    }
    return Value::integer(result);
  }
  const double f = x.f;
  if (no_digits) {
    if (std::isnan(f)) raise(ExcType::kValueError, "cannot convert float NaN to integer");
    if (std::isinf(f)) raise(ExcType::kOverflowError, "cannot convert float infinity to integer");
    const double r = std::nearbyint(f);  // default rounding mode is half-even
    if (r >= -9.2233720368547758e18 && r < 9.2233720368547758e18) return Value::integer(static_cast<std::int64_t>(r));
    return Value::real(r);
  }
  const std::int64_t nd = ndigits->as_int();
  if (!std::isfinite(f) || f == 0.0) return Value::real(f);
  if (nd > 323) return Value::real(f);
  if (nd < -308) return Value::real(0.0 * f);
  return Value::real(round_decimal(f, nd));
}

}  // namespace chartpot::interp
