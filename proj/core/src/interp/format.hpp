#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "interp/runtime.hpp"

namespace chartpot::interp {

// format(value, spec) with the standard format-spec mini-language.
std::string format_value(Runtime& rt, Value v, std::string_view spec);

// str.format(*args, **kwargs).
std::string str_format(Runtime& rt, std::string_view fmt, const CallArgs& args);

// fmt % args.
Value percent_format(Runtime& rt, const StrObj& fmt, Value args);

// round(x) / round(x, ndigits); ndigits may be None.
Value round_value(Runtime& rt, Value x, std::optional<Value> ndigits);

// Decimal text of a float with `digits` places after the point, rounded
// half-even on the exact binary value.
std::string fixed_digits(double x, int digits);

}  // namespace chartpot::interp
