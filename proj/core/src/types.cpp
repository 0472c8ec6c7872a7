#include "bcer/types.hpp"

namespace bcer {

bool is_artifact_type(SemanticType t) {
  switch (t) {
    case SemanticType::VolumeRef:
    case SemanticType::MaskRef:
    case SemanticType::KSpaceRef:
    case SemanticType::MeasurementTable:
    case SemanticType::Label:
    case SemanticType::ReportDoc:
      return true;
    case SemanticType::Scalar:
    case SemanticType::Text:
    case SemanticType::FrameIndex:
      return false;
  }
  return false;
}

bool is_long_chain(TaskId t) {
  return t == TaskId::BrainGrade || t == TaskId::ProstateRpt ||
         t == TaskId::CardiacRpt;
}

std::string_view to_string(SemanticType t) {
  switch (t) {
    case SemanticType::VolumeRef: return "VolumeRef";
    case SemanticType::MaskRef: return "MaskRef";
    case SemanticType::KSpaceRef: return "KSpaceRef";
    case SemanticType::MeasurementTable: return "MeasurementTable";
    case SemanticType::Label: return "Label";
    case SemanticType::ReportDoc: return "ReportDoc";
    case SemanticType::Scalar: return "Scalar";
    case SemanticType::Text: return "Text";
    case SemanticType::FrameIndex: return "FrameIndex";
  }
  return "?";
}

std::string_view to_string(ErrorCode e) {
  switch (e) {
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::UnknownTool: return "UnknownTool";
    case ErrorCode::BadReference: return "BadReference";
    case ErrorCode::ScopeViolation: return "ScopeViolation";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::ToolTransientFailure: return "ToolTransientFailure";
    case ErrorCode::ToolHardFailure: return "ToolHardFailure";
    case ErrorCode::InvalidOverride: return "InvalidOverride";
  }
  return "?";
}

std::string_view to_string(TaskId t) {
  switch (t) {
    case TaskId::Denoise: return "Denoise";
    case TaskId::SuperRes: return "SuperRes";
    case TaskId::Segment: return "Segment";
    case TaskId::Recon: return "Recon";
    case TaskId::Register: return "Register";
    case TaskId::BrainGrade: return "BrainGrade";
    case TaskId::ProstateRpt: return "ProstateRpt";
    case TaskId::CardiacRpt: return "CardiacRpt";
  }
  return "?";
}

std::optional<SemanticType> semantic_type_from(std::string_view s) {
  for (auto t : {SemanticType::VolumeRef, SemanticType::MaskRef,
                 SemanticType::KSpaceRef, SemanticType::MeasurementTable,
                 SemanticType::Label, SemanticType::ReportDoc,
                 SemanticType::Scalar, SemanticType::Text,
                 SemanticType::FrameIndex}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::optional<ErrorCode> error_code_from(std::string_view s) {
  for (auto e : {ErrorCode::SchemaMismatch, ErrorCode::UnknownTool,
                 ErrorCode::BadReference, ErrorCode::ScopeViolation,
                 ErrorCode::MissingInput, ErrorCode::ToolTransientFailure,
                 ErrorCode::ToolHardFailure, ErrorCode::InvalidOverride}) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

std::optional<TaskId> task_from(std::string_view s) {
  for (auto t : kAllTasks) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

}  // namespace bcer
