#include "chartpot/pyliteral.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <limits>
#include <unordered_map>

#include <fmt/format.h>

#include "chartpot/error.hpp"
#include "pyrepr.hpp"

namespace chartpot {

std::string_view to_string(Repair r) {
  switch (r) {
    case Repair::kFenceStripped: return "FenceStripped";
    case Repair::kPrefixStripped: return "PrefixStripped";
    case Repair::kTrailingTrimmed: return "TrailingTrimmed";
    case Repair::kQuoteNormalized: return "QuoteNormalized";
    case Repair::kTrailingCommaDropped: return "TrailingCommaDropped";
    case Repair::kDuplicateKeyMerged: return "DuplicateKeyMerged";
  }
  return "?";
}

namespace {

constexpr std::string_view kLeftDouble = "\xE2\x80\x9C";   // “
constexpr std::string_view kRightDouble = "\xE2\x80\x9D";  // ”
constexpr std::string_view kLeftSingle = "\xE2\x80\x98";   // ‘
constexpr std::string_view kRightSingle = "\xE2\x80\x99";  // ’

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

void add_repair(std::vector<Repair>& repairs, Repair r) {
  if (std::find(repairs.begin(), repairs.end(), r) == repairs.end()) repairs.push_back(r);
}

// Returns one past the delimiter that balances text[start], or npos when the
// text ends first (or brackets mismatch). String- and comment-aware.
std::size_t balanced_end(std::string_view text, std::size_t start) {
  std::vector<char> stack;
  std::size_t i = start;
  auto closer = [](char open) { return open == '{' ? '}' : open == '[' ? ']' : ')'; };
  while (i < text.size()) {
    const char c = text[i];
    if (c == '{' || c == '[' || c == '(') {
      stack.push_back(closer(c));
      ++i;
    } else if (c == '}' || c == ']' || c == ')') {
      if (stack.empty() || stack.back() != c) return std::string_view::npos;
      stack.pop_back();
      ++i;
      if (stack.empty()) return i;
    } else if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == '\'' || c == '"') {
      const bool triple = text.substr(i, 3) == std::string(3, c);
      const std::string_view close = triple ? text.substr(i, 3) : text.substr(i, 1);
      i += close.size();
      for (;;) {
        if (i >= text.size()) return std::string_view::npos;
        if (text[i] == '\\') {
          i += 2;
          continue;
        }
        if (!triple && text[i] == '\n') return std::string_view::npos;
        if (text.substr(i, close.size()) == close) {
          i += close.size();
          break;
        }
        ++i;
      }
    } else if (text.substr(i, 3) == kLeftDouble || text.substr(i, 3) == kLeftSingle) {
      const std::string_view close = text.substr(i, 3) == kLeftDouble ? kRightDouble : kRightSingle;
      auto end = text.find(close, i + 3);
      if (end == std::string_view::npos) return end;
      i = end + 3;
    } else {
      ++i;
    }
  }
  return std::string_view::npos;
}

struct ParseFailure {
  FailureCategory category;
  std::string message;
};

class LiteralParser {
 public:
  explicit LiteralParser(std::string_view src) : s_(src) {}

  ParseOutcome run() {
    ParseOutcome out;
    try {
      ValueTree v = parse_value();
      skip_ws();
      if (!at_end()) {
        const char c = peek();
        if (c == ')' || c == ']' || c == '}') fail_syntax(fmt::format("unmatched '{}'", c));
        if (starts_value(c)) fail_syntax("invalid syntax");
        fail_syntax("expressions are not allowed in literals");
      }
      out.result = std::move(v);
      out.repairs_applied = std::move(repairs_);
    } catch (const ParseFailure& f) {
      out.failure = FailureClass{FailureStage::kDictParse, f.category, f.message};
    }
    return out;
  }

 private:
  struct Open {
    char ch;
    int line;
  };

  static constexpr std::size_t kMaxNesting = 200;

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::vector<Open> open_;
  std::vector<Repair> repairs_;

  bool at_end() const { return pos_ >= s_.size(); }
  char peek(std::size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }
  bool looking_at(std::string_view t) const { return s_.substr(pos_, t.size()) == t; }

  void advance(std::size_t n = 1) {
    for (std::size_t k = 0; k < n && pos_ < s_.size(); ++k) {
      if (s_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  [[noreturn]] void fail(FailureCategory cat, const std::string& msg, int line) {
    throw ParseFailure{cat, fmt::format("{} (<string>, line {})", msg, line)};
  }
  [[noreturn]] void fail_syntax(const std::string& msg) { fail(FailureCategory::kSyntaxError, msg, line_); }

  [[noreturn]] void fail_eof() {
    if (!open_.empty()) {
      const Open& o = open_.back();
      fail(FailureCategory::kTruncated, fmt::format("'{}' was never closed", o.ch), o.line);
    }
    fail_syntax("invalid syntax");
  }

  void skip_ws() {
    while (!at_end()) {
      const char c = peek();
      if (is_space(c)) {
        advance();
      } else if (c == '#') {
        while (!at_end() && peek() != '\n') advance();
      } else if (c == '\\' && peek(1) == '\n') {
        advance(2);
      } else {
        break;
      }
    }
  }

  bool starts_string() const {
    const char c = peek();
    if (c == '\'' || c == '"') return true;
    if (looking_at(kLeftDouble) || looking_at(kLeftSingle)) return true;
    // String prefixes (r, u, b, f and two-letter combinations).
    std::size_t k = 0;
    while (k < 2 && is_ident_start(peek(k)) && std::string_view("rRuUbBfF").find(peek(k)) != std::string_view::npos) ++k;
    return k > 0 && (peek(k) == '\'' || peek(k) == '"');
  }

  static bool starts_value(char c) {
    return c == '{' || c == '[' || c == '(' || c == '\'' || c == '"' || is_digit(c) || is_ident_start(c) ||
           static_cast<unsigned char>(c) >= 0x80;
  }

  void push_open(char c) {
    open_.push_back({c, line_});
    if (open_.size() > kMaxNesting) throw ParseFailure{FailureCategory::kOther, "too many nested parentheses"};
    advance();
  }

  void close(char expected) {
    const char c = peek();
    if (c != expected) mismatch(c);
    open_.pop_back();
    advance();
  }

  [[noreturn]] void mismatch(char c) {
    const Open& o = open_.back();
    if (o.line == line_) {
      fail_syntax(fmt::format("closing parenthesis '{}' does not match opening parenthesis '{}'", c, o.ch));
    }
    fail_syntax(fmt::format("closing parenthesis '{}' does not match opening parenthesis '{}' on line {}", c, o.ch,
                            o.line));
  }

  // After an element: a separator, the expected closer, or an error.
  // Returns true when the container is finished.
  bool after_element(char closer) {
    skip_ws();
    if (at_end()) fail_eof();
    const char c = peek();
    if (c == ',') {
      advance();
      skip_ws();
      if (at_end()) fail_eof();
      if (peek() == closer) {
        add_repair(repairs_, Repair::kTrailingCommaDropped);
        close(closer);
        return true;
      }
      if (peek() == ',') fail_syntax("invalid syntax");
      return false;
    }
    if (c == closer) {
      close(closer);
      return true;
    }
    if (c == ')' || c == ']' || c == '}') mismatch(c);
    if (starts_value(c)) fail_syntax("invalid syntax. Perhaps you forgot a comma?");
    fail_syntax("expressions are not allowed in literals");
  }

  ValueTree parse_value() {
    skip_ws();
    if (at_end()) fail_eof();
    const char c = peek();
    if (c == '{') return parse_mapping();
    if (c == '[') return parse_list();
    if (c == '(') return parse_paren();
    if (starts_string()) return parse_strings();
    if (is_digit(c) || (c == '.' && is_digit(peek(1)))) return parse_number(false);
    if (c == '-' || c == '+') {
      advance();
      skip_ws();
      if (at_end()) fail_eof();
      if (is_digit(peek()) || (peek() == '.' && is_digit(peek(1)))) return parse_number(c == '-');
      fail_syntax("expressions are not allowed in literals");
    }
    if (is_ident_start(c)) return parse_name();
    if (c == ')' || c == ']' || c == '}') {
      if (open_.empty()) fail_syntax(fmt::format("unmatched '{}'", c));
      fail_syntax("invalid syntax");
    }
    if (static_cast<unsigned char>(c) >= 0x80) invalid_character();
    fail_syntax("invalid syntax");
  }

  [[noreturn]] void invalid_character() {
    std::size_t len = 1;
    const auto b = static_cast<unsigned char>(peek());
    std::uint32_t cp = b;
    if ((b & 0xE0) == 0xC0) {
      len = 2;
      cp = b & 0x1F;
    } else if ((b & 0xF0) == 0xE0) {
      len = 3;
      cp = b & 0x0F;
    } else if ((b & 0xF8) == 0xF0) {
      len = 4;
      cp = b & 0x07;
    }
    for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(peek(k)) & 0x3F);
    fail_syntax(fmt::format("invalid character '{}' (U+{:04X})", s_.substr(pos_, len), cp));
  }

  ValueTree parse_mapping() {
    push_open('{');
    skip_ws();
    if (at_end()) fail_eof();
    Mapping entries;
    std::unordered_map<std::string, std::size_t> index;
    if (peek() == '}') {
      close('}');
      return ValueTree::mapping();
    }
    for (bool first = true;; first = false) {
      ValueTree key = parse_value();
      skip_ws();
      if (at_end()) fail_eof();
      if (peek() != ':') {
        if (first && (peek() == ',' || peek() == '}')) {
          throw ParseFailure{FailureCategory::kOther, "set literals are not supported"};
        }
        fail_syntax("':' expected after dictionary key");
      }
      advance();
      skip_ws();
      if (at_end()) fail_eof();
      if (peek() == ',' || peek() == '}') fail_syntax("expression expected after dictionary key and ':'");
      ValueTree value = parse_value();
      std::string canon = canonical_key(key);
      if (auto it = index.find(canon); it != index.end()) {
        entries[it->second].value = std::move(value);
        add_repair(repairs_, Repair::kDuplicateKeyMerged);
      } else {
        index.emplace(std::move(canon), entries.size());
        entries.push_back({std::move(key), std::move(value)});
      }
      if (after_element('}')) break;
    }
    return ValueTree::mapping(std::move(entries));
  }

  ValueTree parse_list() {
    push_open('[');
    skip_ws();
    if (at_end()) fail_eof();
    Sequence items;
    if (peek() == ']') {
      close(']');
      return ValueTree::sequence();
    }
    for (;;) {
      items.push_back(parse_value());
      if (after_element(']')) break;
    }
    return ValueTree::sequence(std::move(items));
  }

  ValueTree parse_paren() {
    push_open('(');
    skip_ws();
    if (at_end()) fail_eof();
    if (peek() == ')') {
      close(')');
      return ValueTree::sequence();
    }
    ValueTree first = parse_value();
    skip_ws();
    if (at_end()) fail_eof();
    if (peek() == ')') {
      close(')');
      return first;
    }
    if (peek() != ',') {
      const char c = peek();
      if (c == ']' || c == '}') mismatch(c);
      if (starts_value(c)) fail_syntax("invalid syntax. Perhaps you forgot a comma?");
      fail_syntax("expressions are not allowed in literals");
    }
    // A tuple; the comma after a single element is syntax, not a repair.
    advance();
    Sequence items;
    items.push_back(std::move(first));
    skip_ws();
    if (at_end()) fail_eof();
    if (peek() == ')') {
      close(')');
      return ValueTree::sequence(std::move(items));
    }
    for (;;) {
      items.push_back(parse_value());
      if (after_element(')')) break;
    }
    return ValueTree::sequence(std::move(items));
  }

  ValueTree parse_name() {
    const std::size_t start = pos_;
    while (!at_end() && is_ident_char(peek())) advance();
    const std::string_view name = s_.substr(start, pos_ - start);
    if (name == "True" || name == "true") return ValueTree::boolean(true);
    if (name == "False" || name == "false") return ValueTree::boolean(false);
    if (name == "None" || name == "null") return ValueTree::null();
    fail_syntax("invalid syntax");
  }

  ValueTree parse_number(bool negative) {
    const int start_line = line_;
    std::string digits;
    bool is_float = false;
    int base = 10;
    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X' || peek(1) == 'o' || peek(1) == 'O' || peek(1) == 'b' ||
                          peek(1) == 'B')) {
      const char p = static_cast<char>(peek(1) | 0x20);
      base = p == 'x' ? 16 : p == 'o' ? 8 : 2;
      advance(2);
      while (!at_end() && (std::isxdigit(static_cast<unsigned char>(peek())) || peek() == '_')) {
        if (peek() != '_') digits.push_back(peek());
        advance();
      }
      if (digits.empty()) fail(FailureCategory::kSyntaxError, "invalid hexadecimal literal", start_line);
    } else {
      auto take_digits = [&] {
        while (!at_end() && (is_digit(peek()) || (peek() == '_' && is_digit(peek(1))))) {
          if (peek() != '_') digits.push_back(peek());
          advance();
        }
      };
      take_digits();
      if (peek() == '.') {
        is_float = true;
        digits.push_back('.');
        advance();
        take_digits();
      }
      if ((peek() == 'e' || peek() == 'E') &&
          (is_digit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && is_digit(peek(2))))) {
        is_float = true;
        digits.push_back('e');
        advance();
        if (peek() == '+' || peek() == '-') {
          digits.push_back(peek());
          advance();
        }
        take_digits();
      }
      if (!is_float && digits.size() > 1 && digits[0] == '0' &&
          digits.find_first_not_of('0') != std::string::npos) {
        fail(FailureCategory::kSyntaxError,
             "leading zeros in decimal integer literals are not permitted; use an 0o prefix for octal integers",
             start_line);
      }
    }
    if (peek() == 'j' || peek() == 'J') {
      throw ParseFailure{FailureCategory::kOther, "complex literals are not supported"};
    }
    if (!at_end() && is_ident_char(peek())) fail_syntax("invalid decimal literal");

    ValueTree value;
    if (is_float) {
      value = ValueTree::real(parse_double(digits));
    } else {
      std::int64_t iv = 0;
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), iv, base);
      if (ec == std::errc::result_out_of_range) {
        value = ValueTree::real(base == 10 ? parse_double(digits)
                                           : static_cast<double>(std::strtoull(digits.c_str(), nullptr, base)));
      } else {
        value = ValueTree::integer(iv);
      }
    }

    if (peek() == '%') {
      // An attached percent sign is a unit suffix unless another operand follows.
      std::size_t k = 1;
      while (peek(k) == ' ' || peek(k) == '\t') ++k;
      const char next = peek(k);
      if (!(is_digit(next) || is_ident_start(next) || next == '(' || next == '\'' || next == '"')) {
        advance();
        const double v = value.as_number();
        return ValueTree::real(negative ? -v : v, "%");
      }
    }
    if (negative) {
      if (value.kind() == ValueTree::Kind::kInt) {
        return value.as_int() == std::numeric_limits<std::int64_t>::min() ? ValueTree::real(-value.as_number())
                                                                           : ValueTree::integer(-value.as_int());
      }
      return ValueTree::real(-value.as_float());
    }
    return value;
  }

  static double parse_double(const std::string& text) {
    errno = 0;
    return std::strtod(text.c_str(), nullptr);
  }

  ValueTree parse_strings() {
    std::string joined;
    do {
      joined += parse_one_string();
      skip_ws();
    } while (!at_end() && starts_string());
    if (auto pct = as_percent(joined)) return *pct;
    return ValueTree::string(std::move(joined));
  }

  static std::optional<ValueTree> as_percent(std::string_view s) {
    s = trim(s);
    if (s.size() < 2 || s.back() != '%') return std::nullopt;
    std::string_view num = trim(s.substr(0, s.size() - 1));
    bool neg = false;
    if (!num.empty() && (num[0] == '-' || num[0] == '+')) {
      neg = num[0] == '-';
      num.remove_prefix(1);
    }
    if (num.empty()) return std::nullopt;
    bool dot = false;
    bool digit = false;
    for (char c : num) {
      if (is_digit(c)) {
        digit = true;
      } else if (c == '.' && !dot) {
        dot = true;
      } else {
        return std::nullopt;
      }
    }
    if (!digit) return std::nullopt;
    const double v = parse_double(std::string(num));
    return ValueTree::real(neg ? -v : v, "%");
  }

  std::string parse_one_string() {
    bool raw = false;
    while (is_ident_start(peek())) {
      const char p = static_cast<char>(peek() | 0x20);
      if (p == 'b') throw ParseFailure{FailureCategory::kOther, "bytes literals are not supported"};
      if (p == 'f') fail_syntax("f-strings are not allowed in literals");
      if (p == 'r') raw = true;
      advance();
    }
    const int start_line = line_;
    std::string out;
    if (looking_at(kLeftDouble) || looking_at(kLeftSingle)) {
      const std::string_view close = looking_at(kLeftDouble) ? kRightDouble : kRightSingle;
      add_repair(repairs_, Repair::kQuoteNormalized);
      advance(3);
      for (;;) {
        if (at_end() || peek() == '\n') unterminated(false, start_line);
        if (looking_at(close)) {
          advance(3);
          return out;
        }
        if (!raw && peek() == '\\') {
          read_escape(out);
          continue;
        }
        out.push_back(peek());
        advance();
      }
    }
    const char q = peek();
    const bool triple = peek(1) == q && peek(2) == q;
    advance(triple ? 3 : 1);
    for (;;) {
      if (at_end()) unterminated(triple, start_line);
      const char c = peek();
      if (c == q && (!triple || (peek(1) == q && peek(2) == q))) {
        advance(triple ? 3 : 1);
        return out;
      }
      if (c == '\n' && !triple) unterminated(false, start_line);
      if (c == '\\') {
        if (raw) {
          out.push_back('\\');
          advance();
          if (at_end()) unterminated(triple, start_line);
          out.push_back(peek());
          advance();
        } else {
          read_escape(out);
        }
        continue;
      }
      out.push_back(c);
      advance();
    }
  }

  [[noreturn]] void unterminated(bool triple, int start_line) {
    throw ParseFailure{FailureCategory::kSyntaxError,
                       fmt::format("unterminated {}string literal (detected at line {}) (<string>, line {})",
                                   triple ? "triple-quoted " : "", line_, start_line)};
  }

  int hex_value(char c) const {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  }

  std::uint32_t read_hex(std::size_t count) {
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < count; ++k) {
      const int h = hex_value(peek());
      if (h < 0) {
        fail_syntax(fmt::format("(unicode error) 'unicodeescape' codec can't decode bytes: truncated \\{}XX escape",
                                count == 2 ? "x" : count == 4 ? "u" : "U"));
      }
      v = v * 16 + static_cast<std::uint32_t>(h);
      advance();
    }
    return v;
  }

  void read_escape(std::string& out) {
    advance();  // backslash
    if (at_end()) return;
    const char e = peek();
    switch (e) {
      case '\n': advance(); return;
      case '\\': out.push_back('\\'); break;
      case '\'': out.push_back('\''); break;
      case '"': out.push_back('"'); break;
      case '/': out.push_back('/'); break;
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      case 'b': out.push_back('\b'); break;
      case 'f': out.push_back('\f'); break;
      case 'v': out.push_back('\v'); break;
      case 'a': out.push_back('\a'); break;
      case 'x': {
        advance();
        detail::append_utf8(out, read_hex(2));
        return;
      }
      case 'u':
      case 'U': {
        advance();
        std::uint32_t cp = read_hex(e == 'u' ? 4 : 8);
        if (cp >= 0xD800 && cp <= 0xDBFF && looking_at("\\u")) {
          const std::size_t save = pos_;
          advance(2);
          const std::uint32_t lo = read_hex(4);
          if (lo >= 0xDC00 && lo <= 0xDFFF) {
            cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
          } else {
            pos_ = save;
          }
        }
        if ((cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) cp = 0xFFFD;
        detail::append_utf8(out, cp);
        return;
      }
      default:
        if (e >= '0' && e <= '7') {
          std::uint32_t v = 0;
          for (int k = 0; k < 3 && peek() >= '0' && peek() <= '7'; ++k) {
            v = v * 8 + static_cast<std::uint32_t>(peek() - '0');
            advance();
          }
          detail::append_utf8(out, v);
          return;
        }
        // Unknown escapes keep the backslash, as the object language does.
        out.push_back('\\');
        return;
    }
    advance();
  }

  static std::string canonical_key(const ValueTree& key) {
    using K = ValueTree::Kind;
    switch (key.kind()) {
      case K::kNull: return "N";
      case K::kBool: return key.as_bool() ? "n:1" : "n:0";
      case K::kInt: return "n:" + std::to_string(key.as_int());
      case K::kFloat: {
        const double v = key.as_float();
        if (v == static_cast<double>(static_cast<std::int64_t>(v)) && v > -9.2e18 && v < 9.2e18) {
          return "n:" + std::to_string(static_cast<std::int64_t>(v));
        }
        return "f:" + detail::python_float_repr(v);
      }
      case K::kString: return "s:" + key.as_string();
      default: return "c:" + to_python_literal(key);
    }
  }
};

}  // namespace

ExtractedPayload extract_payload_with_repairs(std::string_view raw) {
  ExtractedPayload out;
  std::string_view text = raw;
  if (auto open = text.find("```"); open != std::string_view::npos) {
    const auto line_end = text.find('\n', open);
    std::string_view inner = line_end == std::string_view::npos ? std::string_view{} : text.substr(line_end + 1);
    if (auto close = inner.find("```"); close != std::string_view::npos) inner = inner.substr(0, close);
    if (inner.find_first_of("{[") != std::string_view::npos) {
      text = inner;
      out.repairs.push_back(Repair::kFenceStripped);
    }
  }
  text = trim(text);
  if (text.substr(0, 10) == "chart_dict") {
    std::string_view rest = text.substr(10);
    while (!rest.empty() && is_space(rest.front())) rest.remove_prefix(1);
    if (!rest.empty() && rest.front() == '=' && (rest.size() == 1 || rest[1] != '=')) {
      text = trim(rest.substr(1));
      add_repair(out.repairs, Repair::kPrefixStripped);
    }
  }
  const auto start = text.find_first_of("{[");
  if (start == std::string_view::npos) throw Error(ErrorCode::kNoPayloadFound, "no '{' or '[' in model output");
  if (start > 0) add_repair(out.repairs, Repair::kPrefixStripped);
  text = text.substr(start);
  const auto end = balanced_end(text, 0);
  if (end != std::string_view::npos) {
    if (!trim(text.substr(end)).empty()) add_repair(out.repairs, Repair::kTrailingTrimmed);
    text = text.substr(0, end);
  } else {
    text = trim(text);
  }
  out.text = std::string(text);
  return out;
}

std::string extract_payload(std::string_view raw_model_text) {
  return extract_payload_with_repairs(raw_model_text).text;
}

ParseOutcome parse_value_tree(std::string_view payload) {
  if (payload.size() > kMaxPayloadBytes) {
    const std::string_view t = trim(payload.substr(0, 64));
    const char open = !t.empty() && (t[0] == '[' || t[0] == '(') ? t[0] : '{';
    ParseOutcome out;
    out.failure = FailureClass{FailureStage::kDictParse, FailureCategory::kTruncated,
                               fmt::format("'{}' was never closed within the {}-byte payload limit", open,
                                           kMaxPayloadBytes)};
    return out;
  }
  return LiteralParser(payload).run();
}

ParseOutcome parse_model_dict(std::string_view raw_model_text) {
  ExtractedPayload payload;
  try {
    payload = extract_payload_with_repairs(raw_model_text);
  } catch (const Error& e) {
    ParseOutcome out;
    const bool blank = trim(raw_model_text).empty();
    out.failure = FailureClass{FailureStage::kDictParse,
                               blank ? FailureCategory::kEmptyOutput : FailureCategory::kOther,
                               blank ? "empty model output" : "no dictionary literal found in model output"};
    return out;
  }
  ParseOutcome out = parse_value_tree(payload.text);
  if (out.ok()) {
    std::vector<Repair> merged = payload.repairs;
    for (Repair r : out.repairs_applied) add_repair(merged, r);
    out.repairs_applied = std::move(merged);
  }
  return out;
}

namespace {

bool keys_are_scalar(const ValueTree& t) {
  if (t.kind() == ValueTree::Kind::kSequence) {
    for (const auto& v : t.as_sequence()) {
      if (!keys_are_scalar(v)) return false;
    }
  } else if (t.kind() == ValueTree::Kind::kMapping) {
    for (const auto& e : t.as_mapping()) {
      if (!e.key.is_scalar() || !keys_are_scalar(e.value)) return false;
    }
  }
  return true;
}

}  // namespace

std::optional<FailureClass> validate_executable(const ValueTree& tree, const SandboxLimits& limits) {
  const auto depth = static_cast<std::int64_t>(tree.depth());
  if (depth > limits.max_depth) {
    return FailureClass{FailureStage::kDictParse, FailureCategory::kBudgetExceeded,
                        fmt::format("chart dictionary depth {} exceeds limit {}", depth, limits.max_depth)};
  }
  const auto nodes = static_cast<std::int64_t>(tree.node_count());
  if (nodes > limits.max_nodes) {
    return FailureClass{FailureStage::kDictParse, FailureCategory::kBudgetExceeded,
                        fmt::format("chart dictionary has {} nodes, limit {}", nodes, limits.max_nodes)};
  }
  if (!keys_are_scalar(tree)) {
    return FailureClass{FailureStage::kDictParse, FailureCategory::kOther, "unhashable mapping key"};
  }
  return std::nullopt;
}

}  // namespace chartpot
