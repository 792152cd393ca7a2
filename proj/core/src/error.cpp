#include "chartpot/error.hpp"

namespace chartpot {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kSerialization: return "SerializationError";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kUnknownChartType: return "UnknownChartType";
    case ErrorCode::kEmptyCandidateList: return "EmptyCandidateList";
    case ErrorCode::kNoPayloadFound: return "NoPayloadFound";
    case ErrorCode::kUnknownTemplate: return "UnknownTemplate";
    case ErrorCode::kImageOnNonUserTurn: return "ImageOnNonUserTurn";
    case ErrorCode::kTransport: return "Transport";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kAuthMissing: return "AuthMissing";
    case ErrorCode::kImageUnsupported: return "ImageUnsupported";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kMissingSlot: return "MissingSlot";
    case ErrorCode::kMissingRepairEndpoint: return "MissingRepairEndpoint";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kCorpusTooSmall: return "CorpusTooSmall";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kOrphanRun: return "OrphanRun";
    case ErrorCode::kDuplicateChoice: return "DuplicateChoice";
    case ErrorCode::kUnknownPair: return "UnknownPair";
    case ErrorCode::kInvalidChoice: return "InvalidChoice";
    case ErrorCode::kUnknownSession: return "UnknownSession";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace chartpot
