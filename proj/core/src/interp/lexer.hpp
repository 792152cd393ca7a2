#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "chartpot/chart.hpp"

namespace chartpot::interp {

// A diagnosed problem with the program text itself (tokenizing, parsing,
// unsupported constructs). Messages follow the object language's style,
// e.g. "'[' was never closed (<string>, line 40)".
struct SourceError {
  FailureCategory category;
  std::string message;
};

[[noreturn]] void syntax_error(std::string_view what, int line);
[[noreturn]] void unsupported(std::string_view what, int line);

enum class Tok { kName, kNumber, kString, kOp, kNewline, kIndent, kDedent, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;  // name, operator, or number spelling
  int line = 1;
  // numbers
  bool is_float = false;
  std::int64_t ival = 0;
  double fval = 0.0;
  bool int_overflow = false;
  // strings: decoded value, or the raw body for f-strings
  std::string value;
  bool fstring = false;
  bool raw = false;
};

std::vector<Token> tokenize(std::string_view source);

// Decodes backslash escapes the way the object language does for str
// literals. Throws SourceError on malformed \x / \u escapes.
std::string decode_escapes(std::string_view body, int line);

}  // namespace chartpot::interp
