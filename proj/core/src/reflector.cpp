#include "bcer/reflector.hpp"

namespace bcer {

std::string_view to_string(RepairAction a) {
  switch (a) {
    case RepairAction::RetryAsIs: return "RetryAsIs";
    case RepairAction::ReplaceToken: return "ReplaceToken";
    case RepairAction::RemoveOverride: return "RemoveOverride";
    case RepairAction::AdjustArg: return "AdjustArg";
  }
  return "?";
}

ProducerLookup unique_producer(SemanticType wanted, const CaseState& state,
                               const WorkflowGraph& graph,
                               const ToolRegistry& registry) {
  ProducerLookup r;
  SymbolicToken tok;
  for (const auto& [node_id, status] : state.status) {
    if (status.state != NodeState::Succeeded) continue;
    auto gnode = graph.nodes.find(node_id);
    if (gnode == graph.nodes.end()) continue;
    const ToolSpec* spec = registry.find(gnode->second.tool_name);
    if (!spec) continue;
    for (const auto& [field, type] : spec->outputs) {
      if (type != wanted) continue;
      r.candidates.push_back(node_id + "." + field);
      tok.kind = TokenKind::Node;
      tok.node_id = node_id;
      tok.field_path = {field};
    }
  }
  if (r.candidates.empty()) {
    // Fall back to the case's declared inputs.
    for (const auto& [field, value] : state.inputs) {
      if (!value.is_string()) continue;
      auto art = state.artifacts.find(value.get_ref<const std::string&>());
      if (art == state.artifacts.end() || art->second.semantic_type != wanted)
        continue;
      r.candidates.push_back("case." + field);
      tok.kind = TokenKind::Case;
      tok.node_id.clear();
      tok.field_path.clear();
      for (std::size_t start = 0, dot = 0; dot != std::string::npos;
           start = dot + 1) {
        dot = field.find('.', start);
        tok.field_path.push_back(field.substr(
            start, dot == std::string::npos ? dot : dot - start));
      }
    }
  }
  if (r.candidates.empty()) {
    r.status = ProducerLookup::Status::None;
  } else if (r.candidates.size() > 1) {
    r.status = ProducerLookup::Status::Ambiguous;
  } else {
    r.status = ProducerLookup::Status::Unique;
    r.token = tok;
  }
  return r;
}

static RepairDecision replace_with_unique(const FailureInfo& failure,
                                          const WorkflowNode& node,
                                          const WorkflowGraph& graph,
                                          const CaseState& state,
                                          const ToolRegistry& registry) {
  const ToolSpec* spec = registry.find(node.tool_name);
  if (!spec || !spec->args.count(failure.arg)) {
    return GiveUp{"no spec for failing argument " + failure.arg};
  }
  const ArgSpec& aspec = spec->args.at(failure.arg);
  if (!aspec.accepts_reference) {
    return GiveUp{"argument does not accept references"};
  }
  ProducerLookup lookup = unique_producer(aspec.type, state, graph, registry);
  switch (lookup.status) {
    case ProducerLookup::Status::Unique: {
      RepairPatch patch;
      patch.node_id = node.node_id;
      patch.edits.push_back({RepairAction::ReplaceToken, failure.arg,
                             Value(render_token(lookup.token))});
      patch.rationale = "relink " + failure.arg + " to the unique " +
                        std::string(to_string(aspec.type)) + " producer";
      return patch;
    }
    case ProducerLookup::Status::Ambiguous:
      return GiveUp{"multiple producers for " + failure.arg + ": " +
                    std::to_string(lookup.candidates.size()) + " candidates"};
    case ProducerLookup::Status::None:
      return GiveUp{"no producer available for " + failure.arg};
  }
  return GiveUp{"unreachable"};
}

RepairDecision propose_deterministic_repair(const FailureInfo& failure,
                                            const WorkflowNode& node,
                                            const WorkflowGraph& graph,
                                            const CaseState& state,
                                            const ToolRegistry& registry) {
  // Rule 1: transient tool failures are retried verbatim.
  if (failure.code == ErrorCode::ToolTransientFailure) {
    RepairPatch patch;
    patch.node_id = node.node_id;
    patch.edits.push_back({RepairAction::RetryAsIs, "", Value()});
    patch.rationale = "transient failure; retry unchanged";
    return patch;
  }

  // Rule 2: a reference that no longer binds.
  if (failure.code == ErrorCode::BadReference && !failure.arg.empty()) {
    if (failure.bind_kind == BindError::Kind::ArtifactMissing) {
      // The token is well-formed but the stored bytes are gone; rebuild
      // the producer, then retry this node as-is.
      RepairPatch patch;
      patch.node_id = node.node_id;
      patch.edits.push_back({RepairAction::RetryAsIs, "", Value()});
      patch.rationale = "stored artifact missing; re-execute its producer";
      return patch;
    }
    return replace_with_unique(failure, node, graph, state, registry);
  }

  // Rule 3: an override the tool rejected reverts to its default.
  if (failure.code == ErrorCode::InvalidOverride && !failure.arg.empty()) {
    RepairPatch patch;
    patch.node_id = node.node_id;
    patch.edits.push_back({RepairAction::RemoveOverride, failure.arg, Value()});
    patch.rationale = "drop rejected override for " + failure.arg;
    return patch;
  }

  // Rule 4: a literal where an artifact reference was needed.
  if (failure.code == ErrorCode::MissingInput && !failure.arg.empty()) {
    auto it = node.args.find(failure.arg);
    const bool literal =
        it != node.args.end() && it->second.is_string() &&
        !scan_arguments(it->second.get_ref<const std::string&>()).has_tokens();
    if (literal) {
      return replace_with_unique(failure, node, graph, state, registry);
    }
    return GiveUp{"missing input was not a replaceable literal"};
  }

  // Rule 5: schema complaints about an optional argument.
  if (failure.code == ErrorCode::SchemaMismatch && !failure.arg.empty()) {
    const ToolSpec* spec = registry.find(node.tool_name);
    if (spec && spec->args.count(failure.arg) &&
        !spec->args.at(failure.arg).required) {
      RepairPatch patch;
      patch.node_id = node.node_id;
      patch.edits.push_back(
          {RepairAction::RemoveOverride, failure.arg, Value()});
      patch.rationale = "drop optional argument " + failure.arg;
      return patch;
    }
    return GiveUp{"schema mismatch on a required argument"};
  }

  return GiveUp{"no deterministic rule for " +
                std::string(to_string(failure.code))};
}

std::set<std::string> affected_subworkflow(const WorkflowGraph& graph,
                                           const WorkflowNode& node,
                                           const FailureInfo& failure,
                                           const RepairPatch& patch) {
  std::set<std::string> affected{node.node_id};
  if (failure.bind_kind == BindError::Kind::ArtifactMissing &&
      !failure.arg.empty()) {
    auto it = node.args.find(failure.arg);
    if (it != node.args.end() && it->second.is_string()) {
      for (const auto& tok :
           scan_arguments(it->second.get_ref<const std::string&>()).tokens()) {
        if (tok.kind == TokenKind::Node && graph.nodes.count(tok.node_id)) {
          affected.insert(tok.node_id);
        }
      }
    }
  }
  (void)patch;
  return affected;
}

nlohmann::json patch_to_json(const RepairPatch& patch) {
  nlohmann::json edits = nlohmann::json::array();
  for (const auto& e : patch.edits) {
    edits.push_back({{"action", std::string(to_string(e.action))},
                     {"arg", e.arg},
                     {"new_value", e.new_value}});
  }
  return {{"node_id", patch.node_id},
          {"edits", edits},
          {"rationale", patch.rationale},
          {"stage", patch.pluggable ? "pluggable" : "deterministic"}};
}

}  // namespace bcer
