#pragma once

#include <string>

#include "interp/runtime.hpp"

namespace chartpot::interp {

Value call_builtin(Runtime& rt, Builtin b, CallArgs& args);
Value call_method(Runtime& rt, const MethodObj& m, CallArgs& args);

// obj.name: module functions and bound container/string methods.
Value get_attribute(Runtime& rt, Value obj, const std::string& name);

}  // namespace chartpot::interp
