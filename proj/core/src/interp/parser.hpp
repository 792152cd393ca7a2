#pragma once

#include <memory>
#include <string_view>

#include "interp/ast.hpp"
#include "interp/lexer.hpp"

namespace chartpot::interp {

inline constexpr std::string_view kEntryName = "get_summary_statistics";

// Parses and resolves a generated program. Throws SourceError.
std::unique_ptr<Program> parse_program_source(std::string_view source);

}  // namespace chartpot::interp
