#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "chartpot/chart.hpp"
#include "chartpot/config.hpp"
#include "chartpot/value_tree.hpp"

namespace chartpot::testing {

/// Absolute path under tests/data.
std::filesystem::path data_path(const std::string& relative);
std::string read_file(const std::filesystem::path& path);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Chart-shaped random tree: nested mappings with string and int keys,
/// numeric series, mixed lists, strings, bools, None and unit floats.
ValueTree random_chart_tree(std::mt19937_64& rng, int max_depth = 4);

/// Programs the sandbox must refuse before running any statement.
struct ForbiddenProgram {
  std::string label;
  std::string source;
};
std::vector<ForbiddenProgram> forbidden_programs();

/// One generated artifact from the failure table and its expected diagnosis.
struct TaxonomyCase {
  std::string label;
  enum class Kind { kDict, kProgram } kind;
  std::string text;       // raw model dictionary text or program source
  ValueTree chart;        // program input (kProgram)
  FailureStage stage;
  FailureCategory category;
  std::string message;    // expected exact message
};
std::vector<TaxonomyCase> taxonomy_cases();
/// Classifies a case the way the pipeline would.
std::optional<FailureClass> classify(const TaxonomyCase& c);

/// Endpoint names used by tests/data/e2e/mock_script.json.
inline constexpr const char* kVlmModel = "vlm-model";
inline constexpr const char* kCoderModel = "coder-model";
inline constexpr const char* kRepairModel = "repair-model";

struct E2eConfig {
  Strategy strategy;
  InputComposition composition;
};
/// Direct, MCoT, PoT over all five compositions, PoTTemplate.
std::vector<E2eConfig> e2e_matrix();
/// Deterministic config against a mock server (no auth, no timings).
PipelineConfig e2e_config(const std::string& base_url, Strategy strategy, InputComposition composition);

}  // namespace chartpot::testing
