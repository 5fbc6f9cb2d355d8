#include "suiteeval/error.hpp"

namespace suiteeval {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateSuiteName: return "DuplicateSuiteName";
    case ErrorCode::kEmptyDatasetList: return "EmptyDatasetList";
    case ErrorCode::kUnparseableMeasure: return "UnparseableMeasure";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kUnknownDatasetId: return "UnknownDatasetId";
    case ErrorCode::kUnknownSuite: return "UnknownSuite";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kDuplicateDocno: return "DuplicateDocno";
    case ErrorCode::kDuplicateQid: return "DuplicateQid";
    case ErrorCode::kEmptyQuery: return "EmptyQuery";
    case ErrorCode::kUnknownDocno: return "UnknownDocno";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::kCorruptIndex: return "CorruptIndex";
    case ErrorCode::kDuplicateSystemTag: return "DuplicateSystemTag";
    case ErrorCode::kNoFirstStage: return "NoFirstStage";
    case ErrorCode::kEmptyPipelineSet: return "EmptyPipelineSet";
    case ErrorCode::kRerankerFailure: return "RerankerFailure";
    case ErrorCode::kEmptyQuerySet: return "EmptyQuerySet";
    case ErrorCode::kNegativeValueForGeomean: return "NegativeValueForGeomean";
    case ErrorCode::kInsufficientPairs: return "InsufficientPairs";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace suiteeval
