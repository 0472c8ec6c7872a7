#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bcer/artifact_store.hpp"
#include "bcer/rng.hpp"
#include "bcer/tool_registry.hpp"
#include "bcer/types.hpp"

namespace bcer {

/// Fault-injection knobs. Deterministic given the run seed: every draw
/// is keyed by (seed, node, attempt), never by wall clock or call order.
struct FaultConfig {
  double transient_failure_prob = 0.0;
  ErrorCode transient_error_code = ErrorCode::ToolTransientFailure;
  int max_transient_per_node = 1;
  std::set<std::pair<std::string, int>> hard_failure_nodes;  // (task, position)
  double scope_escape_prob = 0.0;

  nlohmann::json to_json() const;
  static FaultConfig from_json(const nlohmann::json& j);
  static FaultConfig from_file(const std::filesystem::path& file);
};

/// The default fault config of the simulation study.
FaultConfig default_fault_config();

struct ToolResult {
  std::map<std::string, SimArtifact> artifacts;  // output field -> artifact
  std::map<std::string, Value> scalars;          // output field -> scalar
  std::map<std::string, Value> runtime_exports;  // -> CaseState.runtime_values
};

struct InvokeFailure {
  ErrorCode code = ErrorCode::MissingInput;
  std::string arg;
  std::string detail;
};

struct InvokeContext {
  TaskId task = TaskId::Denoise;
  std::string node_id;
  int node_position = 0;
  int attempt = 0;  // dispatch attempt for this node, 0-based
  FaultStream stream;
  std::map<std::string, int>* transient_counts = nullptr;  // per node id
};

/// Runs one simulated tool call. bound_args must be concrete; strings
/// in artifact-typed slots are looked up in the case store and fail
/// with MissingInput when absent. Output digests are pure functions of
/// (tool, canonical args, input digests). Writes stay inside the case
/// scope; a fault-injected escape attempt surfaces as ScopeViolation
/// without writing anything.
std::variant<ToolResult, InvokeFailure> invoke(const ToolSpec& spec,
                                               const std::map<std::string, Value>& bound_args,
                                               CaseState& state,
                                               const FaultConfig& faults,
                                               const InvokeContext& ctx);

/// One step of a task's canonical reference chain, with correct token
/// wiring for its reference-accepting arguments.
struct ChainStep {
  std::string step_id;
  std::string tool_name;
  std::map<std::string, Value> args;
};

struct Toolset {
  std::vector<ToolSpec> specs;       // allowed toolset for the task
  std::vector<std::string> chain;    // canonical tool-name order
  std::vector<ChainStep> reference;  // wired reference chain
};

/// Instantiates the per-task toolset and reference chain. Short-chain
/// tasks have 1-3 steps; long-chain tasks 5-7, with CardiacRpt fixed at
/// six: sequence identification, reconstruction, segmentation, feature
/// extraction, phenotype classification, report synthesis.
Toolset build_task_toolset(TaskId task);

/// Registry holding every tool any task may use.
ToolRegistry build_full_registry();

ToolRegistry registry_from(const std::vector<ToolSpec>& specs);

/// Allowed label vocabularies for the classification tools.
const std::set<std::string>& allowed_labels();

}  // namespace bcer
