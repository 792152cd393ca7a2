#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace chartpot::detail {

// repr() of a binary64 float in the object language (shortest round-trip
// digits, exponent form outside [1e-4, 1e16)).
std::string python_float_repr(double value);

// repr() of a str: single quotes unless the text contains a single quote and
// no double quote.
std::string python_string_repr(std::string_view text);

// Number of code points in a UTF-8 string (invalid bytes count as one each).
std::size_t utf8_length(std::string_view text);

// Appends the UTF-8 encoding of a code point.
void append_utf8(std::string& out, std::uint32_t code_point);

}  // namespace chartpot::detail
