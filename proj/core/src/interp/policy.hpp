#pragma once

#include <optional>
#include <string>

#include "interp/ast.hpp"

namespace chartpot::interp {

// Returns the first name that the program may not use: a free name outside
// the builtin whitelist, an attribute outside the method whitelist, or a
// `from` import of an unknown module function.
std::optional<std::string> find_forbidden_name(const Program& prog);

}  // namespace chartpot::interp
