#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace suiteeval {

enum class ErrorCode {
  kDuplicateSuiteName,
  kEmptyDatasetList,
  kUnparseableMeasure,
  kParseError,
  kUnknownDatasetId,
  kUnknownSuite,
  kMissingFile,
  kMalformedRecord,
  kDuplicateDocno,
  kDuplicateQid,
  kEmptyQuery,
  kUnknownDocno,
  kEmptyCorpus,
  kIoError,
  kFingerprintMismatch,
  kCorruptIndex,
  kDuplicateSystemTag,
  kNoFirstStage,
  kEmptyPipelineSet,
  kRerankerFailure,
  kEmptyQuerySet,
  kNegativeValueForGeomean,
  kInsufficientPairs,
  kInvalidArgument,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this exception; callers that
// need to branch on the failure kind inspect code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace suiteeval
