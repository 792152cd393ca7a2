#include "interp/lexer.hpp"

#include <array>
#include <charconv>
#include <cstdlib>

#include <fmt/format.h>

#include "pyrepr.hpp"

namespace chartpot::interp {

void syntax_error(std::string_view what, int line) {
  throw SourceError{FailureCategory::kSyntaxError, fmt::format("{} (<string>, line {})", what, line)};
}

void unsupported(std::string_view what, int line) {
  throw SourceError{FailureCategory::kOther, fmt::format("unsupported construct: {} (<string>, line {})", what, line)};
}

namespace {

constexpr std::size_t kMaxBrackets = 200;
constexpr std::size_t kMaxIndent = 100;

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Operators, longest first.
constexpr std::array<std::string_view, 47> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=",
    "/=",  "%=",  "&=",  "|=",  "^=",  "@=", "<<", ">>", "+",  "-",  "*",  "/",  "%",  "<",  ">",  "=",
    "(",   ")",   "[",   "]",   "{",   "}",  ",",  ":",  ".",  ";",  "@",  "&",  "|",  "^",  "~",
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : s_(src) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    bool line_start = true;
    while (pos_ < s_.size()) {
      if (line_start && brackets_.empty()) {
        if (!handle_indent()) continue;
        line_start = false;
        if (pos_ >= s_.size()) break;
      }
      const char c = s_[pos_];
      if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (c == '\\' && (peek(1) == '\n' || (peek(1) == '\r' && peek(2) == '\n'))) {
        pos_ += peek(1) == '\n' ? 2 : 3;
        ++line_;
        if (pos_ >= s_.size()) syntax_error("unexpected EOF while parsing", line_);
      } else if (c == '\n') {
        if (brackets_.empty() && !tokens_.empty() && tokens_.back().kind != Tok::kNewline &&
            tokens_.back().kind != Tok::kIndent && tokens_.back().kind != Tok::kDedent) {
          push(Tok::kNewline, "");
        }
        ++pos_;
        ++line_;
        line_start = brackets_.empty();
      } else if (is_ident_start(c)) {
        lex_name();
      } else if (is_digit(c) || (c == '.' && is_digit(peek(1)))) {
        lex_number();
      } else if (c == '\'' || c == '"') {
        lex_string("");
      } else if (static_cast<unsigned char>(c) >= 0x80) {
        invalid_character();
      } else {
        lex_operator();
      }
    }
    if (!brackets_.empty()) {
      const auto& [ch, line] = brackets_.back();
      throw SourceError{FailureCategory::kTruncated, fmt::format("'{}' was never closed (<string>, line {})", ch, line)};
    }
    if (!tokens_.empty() && tokens_.back().kind != Tok::kNewline && tokens_.back().kind != Tok::kDedent &&
        tokens_.back().kind != Tok::kIndent) {
      push(Tok::kNewline, "");
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      push(Tok::kDedent, "");
    }
    push(Tok::kEnd, "");
    return std::move(tokens_);
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::vector<int> indents_;
  std::vector<std::pair<char, int>> brackets_;
  std::vector<Token> tokens_;

  char peek(std::size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }

  Token& push(Tok kind, std::string text) {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.line = line_;
    tokens_.push_back(std::move(t));
    return tokens_.back();
  }

  // Measures indentation at the start of a logical line. Returns false when
  // the line is blank or comment-only (already consumed).
  bool handle_indent() {
    int col = 0;
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == ' ') {
        ++col;
      } else if (c == '\t') {
        col = (col / 8 + 1) * 8;
      } else if (c == '\f') {
        col = 0;
      } else {
        break;
      }
      ++pos_;
    }
    if (pos_ >= s_.size()) return true;
    const char c = s_[pos_];
    if (c == '\n' || c == '#' || (c == '\r' && peek(1) == '\n')) {
      while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      if (pos_ < s_.size()) {
        ++pos_;
        ++line_;
      }
      return false;
    }
    if (col > indents_.back()) {
      indents_.push_back(col);
      if (indents_.size() > kMaxIndent) syntax_error("too many levels of indentation", line_);
      push(Tok::kIndent, "");
    } else {
      while (col < indents_.back()) {
        indents_.pop_back();
        push(Tok::kDedent, "");
      }
      if (col != indents_.back()) syntax_error("unindent does not match any outer indentation level", line_);
    }
    return true;
  }

  [[noreturn]] void invalid_character() {
    const auto b = static_cast<unsigned char>(s_[pos_]);
    std::size_t len = b >= 0xF0 ? 4 : b >= 0xE0 ? 3 : b >= 0xC0 ? 2 : 1;
    len = std::min(len, s_.size() - pos_);
    std::uint32_t cp = len == 4 ? (b & 0x07) : len == 3 ? (b & 0x0F) : len == 2 ? (b & 0x1F) : b;
    for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s_[pos_ + k]) & 0x3F);
    syntax_error(fmt::format("invalid character '{}' (U+{:04X})", s_.substr(pos_, len), cp), line_);
  }

  void lex_name() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
    if (pos_ < s_.size() && static_cast<unsigned char>(s_[pos_]) >= 0x80) invalid_character();
    const std::string_view name = s_.substr(start, pos_ - start);
    if (name.size() <= 2 && (peek() == '\'' || peek() == '"')) {
      bool prefix = true;
      for (char c : name) {
        if (std::string_view("rRuUbBfF").find(c) == std::string_view::npos) prefix = false;
      }
      if (prefix) {
        lex_string(name);
        return;
      }
    }
    push(Tok::kName, std::string(name));
  }

  void lex_number() {
    const std::size_t start = pos_;
    const int line = line_;
    std::string digits;
    bool is_float = false;
    int base = 10;
    if (peek() == '0' && std::string_view("xXoObB").find(peek(1)) != std::string_view::npos && peek(1) != '\0') {
      const char p = static_cast<char>(peek(1) | 0x20);
      base = p == 'x' ? 16 : p == 'o' ? 8 : 2;
      pos_ += 2;
      while (pos_ < s_.size() && (hex_value(s_[pos_]) >= 0 || s_[pos_] == '_')) {
        if (s_[pos_] != '_') {
          if (hex_value(s_[pos_]) >= base) syntax_error(fmt::format("invalid digit '{}' in literal", s_[pos_]), line);
          digits.push_back(s_[pos_]);
        }
        ++pos_;
      }
      if (digits.empty()) syntax_error("invalid literal", line);
    } else {
      auto take_digits = [&] {
        while (pos_ < s_.size() && (is_digit(s_[pos_]) || (s_[pos_] == '_' && is_digit(peek(1))))) {
          if (s_[pos_] != '_') digits.push_back(s_[pos_]);
          ++pos_;
        }
      };
      take_digits();
      if (peek() == '.') {
        is_float = true;
        digits.push_back('.');
        ++pos_;
        take_digits();
      }
      if ((peek() == 'e' || peek() == 'E') && (is_digit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && is_digit(peek(2))))) {
        is_float = true;
        digits.push_back('e');
        ++pos_;
        if (peek() == '+' || peek() == '-') {
          digits.push_back(peek());
          ++pos_;
        }
        take_digits();
      }
      if (!is_float && digits.size() > 1 && digits[0] == '0' && digits.find_first_not_of('0') != std::string::npos) {
        syntax_error(
            "leading zeros in decimal integer literals are not permitted; use an 0o prefix for octal integers", line);
      }
    }
    if (peek() == 'j' || peek() == 'J') unsupported("complex number literal", line);
    if (pos_ < s_.size() && is_ident_char(s_[pos_])) syntax_error("invalid decimal literal", line);
    Token& t = push(Tok::kNumber, std::string(s_.substr(start, pos_ - start)));
    t.line = line;
    t.is_float = is_float;
    if (is_float) {
      t.fval = std::strtod(digits.c_str(), nullptr);
    } else {
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t.ival, base);
      if (ec == std::errc::result_out_of_range) {
        t.int_overflow = true;
        t.is_float = true;
        t.fval = base == 10 ? std::strtod(digits.c_str(), nullptr)
                            : static_cast<double>(std::strtoull(digits.c_str(), nullptr, base));
      }
    }
  }

  void lex_string(std::string_view prefix) {
    bool raw = false;
    bool fstr = false;
    for (char c : prefix) {
      const char p = static_cast<char>(c | 0x20);
      if (p == 'r') raw = true;
      if (p == 'f') fstr = true;
      if (p == 'b') unsupported("bytes literal", line_);
    }
    const int start_line = line_;
    const char q = s_[pos_];
    const bool triple = peek(1) == q && peek(2) == q;
    pos_ += triple ? 3 : 1;
    const std::size_t body_start = pos_;
    for (;;) {
      if (pos_ >= s_.size()) unterminated(triple, fstr, start_line);
      const char c = s_[pos_];
      if (c == '\\') {
        if (peek(1) == '\n') ++line_;
        pos_ += 2;
        if (pos_ > s_.size()) unterminated(triple, fstr, start_line);
        continue;
      }
      if (c == '\n') {
        if (!triple) unterminated(false, fstr, start_line);
        ++line_;
        ++pos_;
        continue;
      }
      if (c == q && (!triple || (peek(1) == q && peek(2) == q))) break;
      ++pos_;
    }
    const std::string_view body = s_.substr(body_start, pos_ - body_start);
    pos_ += triple ? 3 : 1;
    Token& t = push(Tok::kString, "");
    t.line = start_line;
    t.fstring = fstr;
    t.raw = raw;
    if (fstr || raw) {
      t.value = std::string(body);
    } else {
      t.value = decode_escapes(body, start_line);
    }
  }

  [[noreturn]] void unterminated(bool triple, bool fstr, int start_line) {
    throw SourceError{FailureCategory::kSyntaxError,
                      fmt::format("unterminated {}{}string literal (detected at line {}) (<string>, line {})",
                                  triple ? "triple-quoted " : "", fstr ? "f-" : "", line_, start_line)};
  }

  void lex_operator() {
    for (std::string_view op : kOperators) {
      if (s_.substr(pos_, op.size()) != op) continue;
      const char c = op[0];
      if (op.size() == 1 && (c == '(' || c == '[' || c == '{')) {
        brackets_.emplace_back(c, line_);
        if (brackets_.size() > kMaxBrackets) syntax_error("too many nested parentheses", line_);
      } else if (op.size() == 1 && (c == ')' || c == ']' || c == '}')) {
        if (brackets_.empty()) syntax_error(fmt::format("unmatched '{}'", c), line_);
        const auto [open, open_line] = brackets_.back();
        const char expected = open == '(' ? ')' : open == '[' ? ']' : '}';
        if (c != expected) {
          if (open_line == line_) {
            syntax_error(fmt::format("closing parenthesis '{}' does not match opening parenthesis '{}'", c, open),
                         line_);
          }
          syntax_error(fmt::format("closing parenthesis '{}' does not match opening parenthesis '{}' on line {}", c,
                                   open, open_line),
                       line_);
        }
        brackets_.pop_back();
      }
      push(Tok::kOp, std::string(op));
      pos_ += op.size();
      return;
    }
    syntax_error("invalid syntax", line_);
  }
};

}  // namespace

std::string decode_escapes(std::string_view body, int line) {
  std::string out;
  out.reserve(body.size());
  std::size_t i = 0;
  auto read_hex = [&](std::size_t count, char kind) {
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < count; ++k) {
      const int h = i < body.size() ? hex_value(body[i]) : -1;
      if (h < 0) {
        syntax_error(fmt::format("(unicode error) 'unicodeescape' codec can't decode bytes: truncated \\{}{} escape",
                                 kind, std::string(count, 'X')),
                     line);
      }
      v = v * 16 + static_cast<std::uint32_t>(h);
      ++i;
    }
    return v;
  };
  while (i < body.size()) {
    const char c = body[i];
    if (c != '\\' || i + 1 >= body.size()) {
      out.push_back(c);
      ++i;
      continue;
    }
    const char e = body[i + 1];
    i += 2;
    switch (e) {
      case '\n': break;
      case '\\': out.push_back('\\'); break;
      case '\'': out.push_back('\''); break;
      case '"': out.push_back('"'); break;
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      case 'b': out.push_back('\b'); break;
      case 'f': out.push_back('\f'); break;
      case 'v': out.push_back('\v'); break;
      case 'a': out.push_back('\a'); break;
      case 'x': detail::append_utf8(out, read_hex(2, 'x')); break;
      case 'u':
      case 'U': {
        std::uint32_t cp = read_hex(e == 'u' ? 4 : 8, e);
        if ((cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) cp = 0xFFFD;
        detail::append_utf8(out, cp);
        break;
      }
      default:
        if (e >= '0' && e <= '7') {
          std::uint32_t v = static_cast<std::uint32_t>(e - '0');
          for (int k = 0; k < 2 && i < body.size() && body[i] >= '0' && body[i] <= '7'; ++k, ++i) {
            v = v * 8 + static_cast<std::uint32_t>(body[i] - '0');
          }
          detail::append_utf8(out, v);
        } else {
          out.push_back('\\');
          out.push_back(e);
        }
    }
  }
  return out;
}

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace chartpot::interp
