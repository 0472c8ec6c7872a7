#include "bcer/executor.hpp"

namespace bcer {

std::vector<std::string> ready_nodes(const WorkflowGraph& graph,
                                     const CaseState& state) {
  std::vector<std::string> out;
  for (const auto& id : graph.execution_order) {
    auto st = state.status.find(id);
    if (st != state.status.end() && st->second.state != NodeState::Pending)
      continue;
    bool ready = true;
    for (const auto& pred : graph.predecessors(id)) {
      auto ps = state.status.find(pred);
      if (ps == state.status.end() ||
          ps->second.state != NodeState::Succeeded) {
        ready = false;
        break;
      }
    }
    if (ready) out.push_back(id);
  }
  return out;
}

namespace {

struct NodeRunContext {
  const ToolRegistry& registry;
  const TaskContract& contract;
  CaseState& state;
  TraceWriter& trace;
  const RunConstraints& rc;
  FaultStream stream;
  std::map<std::string, int> transient_counts;
  int total_dispatches = 0;
};

nlohmann::json outputs_payload(const ToolResult& result) {
  nlohmann::json outputs = nlohmann::json::object();
  for (const auto& [field, art] : result.artifacts) {
    outputs[field] = {{"artifact_id", art.artifact_id},
                      {"digest", art.content_digest},
                      {"type", std::string(to_string(art.semantic_type))}};
  }
  for (const auto& [field, value] : result.scalars) {
    outputs[field] = {{"value", value}};
  }
  return outputs;
}

// One dispatch: bind then invoke. Records trace events and, on
// success, the node's outputs in the case state.
std::optional<FailureInfo> dispatch_once(WorkflowNode& node,
                                         NodeRunContext& ctx) {
  NodeStatus& status = ctx.state.status[node.node_id];
  status.state = NodeState::Running;
  status.dispatch_count += 1;
  ctx.total_dispatches += 1;
  ctx.trace.append(EventKind::NodeDispatched, node.node_id,
                   {{"tool", node.tool_name},
                    {"attempt", status.dispatch_count - 1},
                    {"args", node.args}});

  auto bound = bind_all(node.args, ctx.state);
  if (auto* bf = std::get_if<BindFailure>(&bound)) {
    ctx.trace.append(EventKind::BindFailed, node.node_id,
                     {{"arg", bf->arg},
                      {"token", bf->token_text},
                      {"kind", std::string(to_string(bf->error.kind))},
                      {"detail", bf->error.detail}});
    status.state = NodeState::Failed;
    status.error = ErrorCode::BadReference;
    FailureInfo f;
    f.node_id = node.node_id;
    f.code = ErrorCode::BadReference;
    f.arg = bf->arg;
    f.detail = bf->error.detail;
    f.bind_kind = bf->error.kind;
    return f;
  }

  InvokeContext ic;
  ic.task = ctx.contract.task;
  ic.node_id = node.node_id;
  ic.node_position = node.position;
  ic.attempt = status.dispatch_count - 1;
  ic.stream = ctx.stream;
  ic.transient_counts = &ctx.transient_counts;

  const ToolSpec* spec = ctx.registry.find(node.tool_name);
  auto result = invoke(*spec, std::get<std::map<std::string, Value>>(bound),
                       ctx.state, ctx.rc.faults, ic);
  if (auto* fail = std::get_if<InvokeFailure>(&result)) {
    ctx.trace.append(EventKind::NodeFailed, node.node_id,
                     {{"code", std::string(to_string(fail->code))},
                      {"arg", fail->arg},
                      {"detail", fail->detail}});
    status.state = NodeState::Failed;
    status.error = fail->code;
    FailureInfo f;
    f.node_id = node.node_id;
    f.code = fail->code;
    f.arg = fail->arg;
    f.detail = fail->detail;
    return f;
  }

  const ToolResult& tr = std::get<ToolResult>(result);
  auto& outs = ctx.state.node_outputs[node.node_id];
  outs.clear();
  for (const auto& [field, art] : tr.artifacts) outs[field] = art.artifact_id;
  for (const auto& [field, value] : tr.scalars) outs[field] = value;
  for (const auto& [key, value] : tr.runtime_exports)
    ctx.state.runtime_values[key] = value;
  status.state = NodeState::Succeeded;
  ctx.trace.append(EventKind::NodeSucceeded, node.node_id,
                   {{"outputs", outputs_payload(tr)}});
  return std::nullopt;
}

bool execute_node(WorkflowGraph& graph, WorkflowNode& node, NodeRunContext& ctx);

// Applies a patch: edits the node's arguments in place and re-executes
// the producer first when the patch rebuilds a missing artifact.
bool apply_patch(WorkflowGraph& graph, WorkflowNode& node,
                 const FailureInfo& failure, const RepairPatch& patch,
                 NodeRunContext& ctx) {
  NodeStatus& status = ctx.state.status[node.node_id];
  for (const auto& edit : patch.edits) {
    switch (edit.action) {
      case RepairAction::RetryAsIs:
        break;
      case RepairAction::RemoveOverride:
        node.args.erase(edit.arg);
        break;
      case RepairAction::ReplaceToken:
      case RepairAction::AdjustArg:
        node.args[edit.arg] = edit.new_value;
        break;
    }
  }
  status.state = NodeState::Repaired;
  ctx.trace.append(EventKind::RepairApplied, node.node_id,
                   patch_to_json(patch));

  for (const auto& other : affected_subworkflow(graph, node, failure, patch)) {
    if (other == node.node_id) continue;
    ctx.state.status[other].state = NodeState::Pending;
    if (!execute_node(graph, graph.nodes.at(other), ctx)) return false;
  }
  return true;
}

// Dispatch/repair loop for one node. Returns true when it Succeeded.
bool execute_node(WorkflowGraph& graph, WorkflowNode& node,
                  NodeRunContext& ctx) {
  NodeStatus& status = ctx.state.status[node.node_id];
  const int max_dispatches = 1 + node.retry_budget.deterministic_attempts +
                             node.retry_budget.pluggable_attempts;

  while (true) {
    if (status.dispatch_count >= max_dispatches) {
      status.state = NodeState::Abandoned;
      ctx.trace.append(EventKind::NodeAbandoned, node.node_id,
                       {{"reason", "dispatch budget exhausted"}});
      return false;
    }
    auto failure = dispatch_once(node, ctx);
    if (!failure) return true;

    if (!ctx.rc.repairs_enabled) {
      status.state = NodeState::Abandoned;
      ctx.trace.append(EventKind::NodeAbandoned, node.node_id,
                       {{"reason", "repairs disabled"}});
      return false;
    }

    std::optional<RepairPatch> patch;
    std::string giveup_reason;
    if (status.deterministic_repairs_used <
        node.retry_budget.deterministic_attempts) {
      RepairDecision decision = propose_deterministic_repair(
          *failure, node, graph, ctx.state, ctx.registry);
      if (auto* p = std::get_if<RepairPatch>(&decision)) {
        patch = *p;
        status.deterministic_repairs_used += 1;
      } else {
        giveup_reason = std::get<GiveUp>(decision).reason;
      }
    } else {
      giveup_reason = "deterministic repair budget exhausted";
    }
    if (!patch && ctx.rc.hook &&
        status.pluggable_repairs_used < node.retry_budget.pluggable_attempts) {
      patch = ctx.rc.hook->propose(*failure, node, graph, ctx.state,
                                   ctx.registry);
      if (patch) {
        patch->pluggable = true;
        status.pluggable_repairs_used += 1;
      }
    }

    if (!patch) {
      ctx.trace.append(EventKind::RepairProposed, node.node_id,
                       {{"decision", "give_up"}, {"reason", giveup_reason}});
      status.state = NodeState::Abandoned;
      ctx.trace.append(EventKind::NodeAbandoned, node.node_id,
                       {{"reason", giveup_reason}});
      return false;
    }
    ctx.trace.append(EventKind::RepairProposed, node.node_id,
                     patch_to_json(*patch));
    if (!apply_patch(graph, node, *failure, *patch, ctx)) return false;
  }
}

}  // namespace

CaseOutcome run_graph(WorkflowGraph graph, const ToolRegistry& registry,
                      const TaskContract& contract, CaseState& state,
                      TraceWriter& trace, const RunConstraints& rc) {
  NodeRunContext ctx{registry, contract, state,
                     trace,    rc,       FaultStream(rc.seed)};

  for (const auto& [id, _] : graph.nodes) {
    state.status.emplace(id, NodeStatus{});
  }

  bool halted = false;
  for (const auto& id : graph.execution_order) {
    WorkflowNode& node = graph.nodes.at(id);
    NodeStatus& status = state.status[id];
    if (status.state == NodeState::Succeeded) continue;

    bool upstream_ok = true;
    for (const auto& pred : graph.predecessors(id)) {
      if (state.status[pred].state != NodeState::Succeeded) {
        upstream_ok = false;
        break;
      }
    }
    if (halted || !upstream_ok) {
      status.state = NodeState::Abandoned;
      trace.append(EventKind::NodeAbandoned, id,
                   {{"reason", "upstream failure"}});
      continue;
    }
    if (!execute_node(graph, node, ctx) && node.required) halted = true;
  }

  CaseOutcome outcome;
  outcome.total_dispatches = ctx.total_dispatches;
  outcome.all_required_succeeded = true;
  for (const auto& [id, node] : graph.nodes) {
    outcome.final_states[id] = state.status[id].state;
    if (node.required && state.status[id].state != NodeState::Succeeded) {
      outcome.all_required_succeeded = false;
    }
  }

  for (const auto& m : contract.milestones) {
    MilestoneVerdict v = validate_milestone(m, state, trace.events());
    trace.append(EventKind::MilestoneValidated, m.milestone_id,
                 {{"validated", v.validated},
                  {"evidence", v.evidence},
                  {"detail", v.detail}});
  }
  outcome.score = score_case(contract, state, trace.events());
  trace.append(EventKind::CaseFinished, "",
               {{"sr", outcome.score.sr},
                {"tcr", outcome.score.tcr},
                {"dispatches", ctx.total_dispatches}});
  save_state_record(state);
  return outcome;
}

}  // namespace bcer
