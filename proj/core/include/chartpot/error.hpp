#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chartpot {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kSerialization,
  // manifest
  kMalformedLine,
  kDuplicateId,
  kUnknownChartType,
  kEmptyCandidateList,
  // literal extraction
  kNoPayloadFound,
  // model client
  kUnknownTemplate,
  kImageOnNonUserTurn,
  kTransport,
  kTimeout,
  kAuthMissing,
  kImageUnsupported,
  // pipeline
  kConfig,
  kMissingSlot,
  kMissingRepairEndpoint,
  // metrics
  kEmptyCorpus,
  kCorpusTooSmall,
  kShapeMismatch,
  // harness
  kOrphanRun,
  // human evaluation
  kDuplicateChoice,
  kUnknownPair,
  kInvalidChoice,
  kUnknownSession,
};

std::string_view to_string(ErrorCode code);

// Every operation-level failure in the library is reported as an Error.
// Parse and execution failures of generated artifacts are values instead
// (see FailureClass).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace chartpot
