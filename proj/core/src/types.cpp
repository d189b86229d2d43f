#include "maecho/types.hpp"

namespace maecho {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kInvalidBeta: return "InvalidBeta";
    case ErrorCode::kEmptyShard: return "EmptyShard";
    case ErrorCode::kMissingInput: return "MissingInput";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kBadArch: return "BadArch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kArchMismatch: return "ArchMismatch";
    case ErrorCode::kNonSquare: return "NonSquare";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kDegenerateBasis: return "DegenerateBasis";
    case ErrorCode::kUnknownKey: return "UnknownKey";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace maecho
