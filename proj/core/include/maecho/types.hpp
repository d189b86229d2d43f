#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace maecho {

/// Dense row-major matrix of doubles. Carrier for weights, projectors and features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class ErrorCode {
  // data ingestion / partitioning
  kBadMagic,
  kTruncatedFile,
  kCountMismatch,
  kEmptyDataset,
  kInvalidBeta,
  kEmptyShard,
  kMissingInput,
  kIo,
  // model structure
  kBadArch,
  kShapeMismatch,
  kArchMismatch,
  kNonSquare,
  // numerics
  kSingularSystem,
  kInfeasible,
  kDegenerateBasis,
  // configuration
  kUnknownKey,
  kInvalidConfig,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace maecho
