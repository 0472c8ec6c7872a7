#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bcer/artifact.hpp"
#include "bcer/token.hpp"
#include "bcer/tool_registry.hpp"
#include "bcer/types.hpp"

namespace bcer {

enum class NodeState {
  Pending,
  Ready,
  Running,
  Succeeded,
  Failed,
  Repaired,
  Abandoned,
};

std::string_view to_string(NodeState s);
std::optional<NodeState> node_state_from(std::string_view s);

struct NodeStatus {
  NodeState state = NodeState::Pending;
  ErrorCode error = ErrorCode::MissingInput;  // meaningful when Failed
  int dispatch_count = 0;
  int deterministic_repairs_used = 0;
  int pluggable_repairs_used = 0;
};

/// Per-case artifact store and execution state. All storage lives under
/// case_scope; nothing in one case ever references another case.
struct CaseState {
  std::string case_id;
  std::filesystem::path case_scope;

  std::map<std::string, Value> inputs;  // dotted field path -> id or scalar
  std::map<std::string, std::map<std::string, Value>> sequences;
  std::map<std::string, SimArtifact> artifacts;  // by artifact id
  std::map<std::string, std::map<std::string, Value>> node_outputs;
  std::map<std::string, Value> runtime_values;
  std::map<std::string, NodeStatus> status;

  std::filesystem::path artifacts_dir() const { return case_scope / "artifacts"; }
  std::filesystem::path state_record_path() const {
    return case_scope / "state.record";
  }
  std::filesystem::path trace_path() const { return case_scope / "trace.log"; }
};

struct BindError {
  enum class Kind { UnknownField, ProducerNotSucceeded, ArtifactMissing };
  Kind kind = Kind::UnknownField;
  std::string detail;
};

std::string_view to_string(BindError::Kind k);

using BindResult = std::variant<Value, BindError>;

/// Creates the on-disk case layout.
void init_case_dirs(const CaseState& state);

/// Writes payload bytes plus the sidecar metadata record, after a scope
/// check, and registers the artifact in the in-memory index.
void write_artifact(CaseState& state, const SimArtifact& artifact);

/// True when both the payload bytes and the sidecar are present on disk.
bool artifact_present(const CaseState& state, const std::string& artifact_id);

std::optional<std::string> read_artifact_payload(const CaseState& state,
                                                 const std::string& artifact_id);

/// Resolves a token against case inputs, node outputs, the sequence
/// namespace, or runtime values. Artifact references are verified
/// present on storage before they are returned.
BindResult bind(const SymbolicToken& token, const CaseState& state);

struct BindFailure {
  std::string arg;
  std::string token_text;
  BindError error;
};

/// Replaces every token in every argument (including tokens embedded in
/// longer strings) with its bound value. Literals pass through.
std::variant<std::map<std::string, Value>, BindFailure> bind_all(
    const std::map<std::string, Value>& args, const CaseState& state);

struct ScopeViolationInfo {
  std::string location;
};

/// Ok iff the location normalizes to a path inside case_scope.
std::optional<ScopeViolationInfo> check_scope(const std::filesystem::path& location,
                                              const CaseState& state);

/// Snapshot sufficient to resume binding after a restart.
void save_state_record(const CaseState& state);
CaseState load_state_record(const std::filesystem::path& case_scope);

}  // namespace bcer
