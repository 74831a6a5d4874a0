#include "adasteer/common.hpp"

namespace adasteer {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMagicMismatch: return "MagicMismatch";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kDuplicatePromptId: return "DuplicatePromptId";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kLayerOutOfRange: return "LayerOutOfRange";
    case ErrorCode::kNoAdmissibleLayer: return "NoAdmissibleLayer";
    case ErrorCode::kZeroDirection: return "ZeroDirection";
    case ErrorCode::kEmptyGrid: return "EmptyGrid";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kDegeneratePositions: return "DegeneratePositions";
    case ErrorCode::kEmptyValidationSet: return "EmptyValidationSet";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kMissingInput: return "MissingInput";
  }
  return "Unknown";
}

std::string_view to_string(DatasetTag tag) {
  switch (tag) {
    case DatasetTag::kRejectedHarmful: return "rejected_harmful";
    case DatasetTag::kCompliedHarmful: return "complied_harmful";
    case DatasetTag::kCompliedBenign: return "complied_benign";
    case DatasetTag::kProbe: return "probe";
  }
  return "probe";
}

std::string_view to_string(Behavior behavior) {
  switch (behavior) {
    case Behavior::kReject: return "reject";
    case Behavior::kComply: return "comply";
    case Behavior::kUnknown: return "unknown";
  }
  return "unknown";
}

DatasetTag parse_dataset_tag(std::string_view text) {
  for (DatasetTag tag : kAllTags) {
    if (to_string(tag) == text) return tag;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown dataset tag '" + std::string(text) + "'");
}

Behavior parse_behavior(std::string_view text) {
  for (Behavior b : {Behavior::kReject, Behavior::kComply, Behavior::kUnknown}) {
    if (to_string(b) == text) return b;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown behavior '" + std::string(text) + "'");
}

}  // namespace adasteer
