#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "bcer/artifact_store.hpp"
#include "bcer/compiler.hpp"
#include "bcer/types.hpp"

namespace bcer {

enum class RepairAction { RetryAsIs, ReplaceToken, RemoveOverride, AdjustArg };

std::string_view to_string(RepairAction a);

struct ArgEdit {
  RepairAction action = RepairAction::RetryAsIs;
  std::string arg;       // empty for RetryAsIs
  Value new_value;       // for ReplaceToken / AdjustArg
};

struct RepairPatch {
  std::string node_id;
  std::vector<ArgEdit> edits;
  std::string rationale;
  bool pluggable = false;  // which budget the patch draws from
};

struct GiveUp {
  std::string reason;
};

using RepairDecision = std::variant<RepairPatch, GiveUp>;

/// Normalized description of a node failure, from either the binder or
/// the tool call itself.
struct FailureInfo {
  std::string node_id;
  ErrorCode code = ErrorCode::MissingInput;
  std::string arg;  // offending argument when known
  std::string detail;
  std::optional<BindError::Kind> bind_kind;  // set when binding failed
};

/// Finds the one value of the wanted type visible in the case: outputs
/// of Succeeded nodes first, then declared case inputs. Refuses when
/// the choice is not unique.
struct ProducerLookup {
  enum class Status { Unique, Ambiguous, None };
  Status status = Status::None;
  SymbolicToken token;  // valid when Unique
  std::vector<std::string> candidates;
};

ProducerLookup unique_producer(SemanticType wanted, const CaseState& state,
                               const WorkflowGraph& graph,
                               const ToolRegistry& registry);

/// Optional second-stage repair. Consulted only after the deterministic
/// table declines, and charged against the separate pluggable budget.
class RepairHook {
 public:
  virtual ~RepairHook() = default;
  virtual std::optional<RepairPatch> propose(const FailureInfo& failure,
                                             const WorkflowNode& node,
                                             const WorkflowGraph& graph,
                                             const CaseState& state,
                                             const ToolRegistry& registry) = 0;
};

/// First-stage repair: a fixed rule table evaluated in order. Edits are
/// local to the failed node; anything outside the table is a GiveUp.
RepairDecision propose_deterministic_repair(const FailureInfo& failure,
                                            const WorkflowNode& node,
                                            const WorkflowGraph& graph,
                                            const CaseState& state,
                                            const ToolRegistry& registry);

/// Nodes that must (re-)execute for the patch: the failed node, plus
/// the producer of a missing stored artifact when one must be rebuilt.
std::set<std::string> affected_subworkflow(const WorkflowGraph& graph,
                                           const WorkflowNode& node,
                                           const FailureInfo& failure,
                                           const RepairPatch& patch);

nlohmann::json patch_to_json(const RepairPatch& patch);

}  // namespace bcer
