#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "chartpot/chart.hpp"

namespace chartpot {

/// One JSON line (no trailing newline) mirroring RunRecord field names.
std::string encode_run(const RunRecord& record);
/// Throws Error(kSerialization) on malformed input.
RunRecord decode_run(std::string_view line);

/// Appends exactly one line. Throws Error(kIo) when the stream fails.
void persist_run(const RunRecord& record, std::ostream& sink);

std::vector<RunRecord> read_runs(std::istream& in);
/// A missing file reads as an empty list.
std::vector<RunRecord> read_runs(const std::filesystem::path& path);

/// Value trees in JSON: plain JSON where lossless, tagged objects
/// ({"$float": 45.0, "unit": "%"}, {"$float": "nan"}, {"$map": [[k, v], ...]}) otherwise.
std::string encode_value_tree(const ValueTree& tree);
ValueTree decode_value_tree(std::string_view json_text);

}  // namespace chartpot
