#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace bcer {

/// Closed set of semantic type tags shared by tool argument schemas and
/// output schemas. Type equality is tag equality.
enum class SemanticType {
  VolumeRef,
  MaskRef,
  KSpaceRef,
  MeasurementTable,
  Label,
  ReportDoc,
  Scalar,
  Text,
  FrameIndex,
};

/// Normalized error codes shared by every tool and the engine.
enum class ErrorCode {
  SchemaMismatch,
  UnknownTool,
  BadReference,
  ScopeViolation,
  MissingInput,
  ToolTransientFailure,
  ToolHardFailure,
  InvalidOverride,
};

/// The eight benchmark tasks.
enum class TaskId {
  Denoise,
  SuperRes,
  Segment,
  Recon,
  Register,
  BrainGrade,
  ProstateRpt,
  CardiacRpt,
};

inline constexpr TaskId kAllTasks[] = {
    TaskId::Denoise,    TaskId::SuperRes,    TaskId::Segment,
    TaskId::Recon,      TaskId::Register,    TaskId::BrainGrade,
    TaskId::ProstateRpt, TaskId::CardiacRpt,
};

/// True for types whose values are case-scoped artifacts (as opposed to
/// plain scalars carried inline).
bool is_artifact_type(SemanticType t);

/// Long-chain tasks are the multi-stage analysis-and-reporting workflows.
bool is_long_chain(TaskId t);

std::string_view to_string(SemanticType t);
std::string_view to_string(ErrorCode e);
std::string_view to_string(TaskId t);

std::optional<SemanticType> semantic_type_from(std::string_view s);
std::optional<ErrorCode> error_code_from(std::string_view s);
std::optional<TaskId> task_from(std::string_view s);

}  // namespace bcer
