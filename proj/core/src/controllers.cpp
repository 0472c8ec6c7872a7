#include "bcer/controllers.hpp"

namespace bcer {

std::string_view to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::React: return "react";
    case ControllerKind::ReactBind: return "react_bind";
    case ControllerKind::ReactBindRef: return "react_bind_ref";
    case ControllerKind::Bcer: return "bcer";
  }
  return "?";
}

std::optional<ControllerKind> controller_kind_from(std::string_view s) {
  if (s == "react") return ControllerKind::React;
  if (s == "react_bind") return ControllerKind::ReactBind;
  if (s == "react_bind_ref") return ControllerKind::ReactBindRef;
  if (s == "bcer") return ControllerKind::Bcer;
  return std::nullopt;
}

std::string make_case_id(TaskId task, std::uint64_t seed) {
  return std::string(to_string(task)) + "_s" + std::to_string(seed);
}

namespace {

struct ReactiveFlags {
  bool bind = false;
  bool reflect = false;
};

nlohmann::json errors_payload(const std::vector<CompileError>& errors) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : errors) {
    arr.push_back({{"kind", std::string(to_string(e.kind))},
                   {"step_id", e.step_id},
                   {"arg", e.arg},
                   {"detail", e.detail}});
  }
  return arr;
}

// Symbolic-binding fallback (the "Bind" rung): before dispatch, any
// artifact reference that cannot resolve — a fabricated literal path or
// a token pointing at nothing — is relinked to the unique in-scope
// producer of the right type, when there is exactly one.
void bind_fallback(WorkflowNode& node, const ToolSpec& spec,
                   const CaseState& state, const WorkflowGraph& graph,
                   const ToolRegistry& registry) {
  for (const auto& [arg, aspec] : spec.args) {
    if (!aspec.accepts_reference || !is_artifact_type(aspec.type)) continue;
    auto it = node.args.find(arg);
    if (it == node.args.end() || !it->second.is_string()) continue;
    const std::string& text = it->second.get_ref<const std::string&>();
    TokenScan scan = scan_arguments(text);

    bool broken = false;
    if (scan.single_token()) {
      auto bound = bind(scan.tokens().front(), state);
      auto* err = std::get_if<BindError>(&bound);
      broken = err && err->kind == BindError::Kind::UnknownField;
    } else if (!scan.has_tokens()) {
      broken = !state.artifacts.count(text);
    }
    if (!broken) continue;

    ProducerLookup lookup = unique_producer(aspec.type, state, graph, registry);
    if (lookup.status == ProducerLookup::Status::Unique) {
      node.args[arg] = render_token(lookup.token);
    }
  }
}

void finish_case(const TaskContract& contract, CaseState& state,
                 TraceWriter& trace, int total_dispatches,
                 ControllerResult& result) {
  for (const auto& m : contract.milestones) {
    MilestoneVerdict v = validate_milestone(m, state, trace.events());
    trace.append(EventKind::MilestoneValidated, m.milestone_id,
                 {{"validated", v.validated},
                  {"evidence", v.evidence},
                  {"detail", v.detail}});
  }
  result.score = score_case(contract, state, trace.events());
  result.total_dispatches = total_dispatches;
  trace.append(EventKind::CaseFinished, "",
               {{"sr", result.score.sr},
                {"tcr", result.score.tcr},
                {"dispatches", total_dispatches}});
  save_state_record(state);
}

ControllerResult run_reactive(const TaskContract& contract,
                              const ControllerConfig& config,
                              ReactiveFlags flags) {
  ControllerResult result;
  result.case_id = make_case_id(contract.task, config.seed);
  result.case_scope = config.workdir / std::string(to_string(config.kind)) /
                      "cases" / result.case_id;

  Toolset toolset = build_task_toolset(contract.task);
  ToolRegistry registry = registry_from(toolset.specs);
  FaultStream stream(config.seed);
  PlanSketch sketch = surrogate_brain(contract, config.policy, stream, 0);

  CaseState state =
      materialize_case(contract, result.case_id, result.case_scope);
  init_case_dirs(state);
  TraceWriter trace(state.trace_path(), result.case_id);
  trace.append(EventKind::CaseStarted, "",
               {{"controller", std::string(to_string(config.kind))},
                {"task", std::string(to_string(contract.task))},
                {"seed", config.seed}});
  trace.append(EventKind::SketchProduced, "",
               {{"revision", 0}, {"steps", sketch.steps.size()}});

  WorkflowGraph graph;  // grown stepwise; backs producer lookups
  std::map<std::string, int> transient_counts;
  const int turn_limit = 3 * static_cast<int>(sketch.steps.size());
  int turns = 0;
  bool out_of_turns = false;

  for (std::size_t i = 0; i < sketch.steps.size(); ++i) {
    const SketchStep& step = sketch.steps[i];
    NodeStatus& status = state.status[step.step_id];
    if (out_of_turns) {
      status.state = NodeState::Abandoned;
      trace.append(EventKind::NodeAbandoned, step.step_id,
                   {{"reason", "turn limit reached"}});
      continue;
    }

    WorkflowNode& node =
        graph.nodes
            .emplace(step.step_id,
                     WorkflowNode{step.step_id, step.tool_name,
                                  step.partial_args, false, RetryBudget{},
                                  static_cast<int>(i)})
            .first->second;
    const ToolSpec* spec = registry.find(step.tool_name);
    if (!spec) {
      status.state = NodeState::Failed;
      status.error = ErrorCode::UnknownTool;
      trace.append(EventKind::NodeFailed, step.step_id,
                   {{"code", "UnknownTool"},
                    {"arg", ""},
                    {"detail", step.tool_name}});
      continue;
    }

    const int max_dispatches =
        flags.reflect ? 1 + node.retry_budget.deterministic_attempts +
                            (config.hook
                                 ? node.retry_budget.pluggable_attempts
                                 : 0)
                      : 1;
    while (status.dispatch_count < max_dispatches) {
      if (turns >= turn_limit) {
        out_of_turns = true;
        break;
      }
      ++turns;
      if (flags.bind) bind_fallback(node, *spec, state, graph, registry);

      status.state = NodeState::Running;
      status.dispatch_count += 1;
      trace.append(EventKind::NodeDispatched, step.step_id,
                   {{"tool", node.tool_name},
                    {"attempt", status.dispatch_count - 1},
                    {"args", node.args}});

      std::optional<FailureInfo> failure;
      auto bound = bind_all(node.args, state);
      if (auto* bf = std::get_if<BindFailure>(&bound)) {
        trace.append(EventKind::BindFailed, step.step_id,
                     {{"arg", bf->arg},
                      {"token", bf->token_text},
                      {"kind", std::string(to_string(bf->error.kind))},
                      {"detail", bf->error.detail}});
        status.state = NodeState::Failed;
        status.error = ErrorCode::BadReference;
        failure = FailureInfo{step.step_id, ErrorCode::BadReference, bf->arg,
                              bf->error.detail, bf->error.kind};
      } else {
        InvokeContext ic;
        ic.task = contract.task;
        ic.node_id = step.step_id;
        ic.node_position = static_cast<int>(i);
        ic.attempt = status.dispatch_count - 1;
        ic.stream = stream;
        ic.transient_counts = &transient_counts;
        auto invoked =
            invoke(*spec, std::get<std::map<std::string, Value>>(bound), state,
                   config.faults, ic);
        if (auto* fail = std::get_if<InvokeFailure>(&invoked)) {
          trace.append(EventKind::NodeFailed, step.step_id,
                       {{"code", std::string(to_string(fail->code))},
                        {"arg", fail->arg},
                        {"detail", fail->detail}});
          status.state = NodeState::Failed;
          status.error = fail->code;
          failure = FailureInfo{step.step_id, fail->code, fail->arg,
                                fail->detail, std::nullopt};
        } else {
          const ToolResult& tr = std::get<ToolResult>(invoked);
          auto& outs = state.node_outputs[step.step_id];
          outs.clear();
          for (const auto& [field, art] : tr.artifacts)
            outs[field] = art.artifact_id;
          for (const auto& [field, value] : tr.scalars) outs[field] = value;
          for (const auto& [key, value] : tr.runtime_exports)
            state.runtime_values[key] = value;
          status.state = NodeState::Succeeded;
          nlohmann::json outputs = nlohmann::json::object();
          for (const auto& [field, art] : tr.artifacts) {
            outputs[field] = {
                {"artifact_id", art.artifact_id},
                {"digest", art.content_digest},
                {"type", std::string(to_string(art.semantic_type))}};
          }
          for (const auto& [field, value] : tr.scalars)
            outputs[field] = {{"value", value}};
          trace.append(EventKind::NodeSucceeded, step.step_id,
                       {{"outputs", outputs}});
          break;
        }
      }

      if (!flags.reflect) break;
      std::optional<RepairPatch> patch;
      std::string giveup_reason;
      if (status.deterministic_repairs_used <
          node.retry_budget.deterministic_attempts) {
        RepairDecision decision = propose_deterministic_repair(
            *failure, node, graph, state, registry);
        if (auto* p = std::get_if<RepairPatch>(&decision)) {
          patch = *p;
          status.deterministic_repairs_used += 1;
        } else {
          giveup_reason = std::get<GiveUp>(decision).reason;
        }
      } else {
        giveup_reason = "deterministic repair budget exhausted";
      }
      if (!patch && config.hook &&
          status.pluggable_repairs_used <
              node.retry_budget.pluggable_attempts) {
        patch = config.hook->propose(*failure, node, graph, state, registry);
        if (patch) {
          patch->pluggable = true;
          status.pluggable_repairs_used += 1;
        }
      }
      if (!patch) {
        trace.append(EventKind::RepairProposed, step.step_id,
                     {{"decision", "give_up"}, {"reason", giveup_reason}});
        status.state = NodeState::Abandoned;
        trace.append(EventKind::NodeAbandoned, step.step_id,
                     {{"reason", giveup_reason}});
        break;
      }
      trace.append(EventKind::RepairProposed, step.step_id,
                   patch_to_json(*patch));
      for (const auto& edit : patch->edits) {
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
      trace.append(EventKind::RepairApplied, step.step_id,
                   patch_to_json(*patch));
    }
    if (flags.reflect && status.state == NodeState::Failed &&
        status.dispatch_count >= max_dispatches) {
      status.state = NodeState::Abandoned;
      trace.append(EventKind::NodeAbandoned, step.step_id,
                   {{"reason", "dispatch budget exhausted"}});
    }
  }

  finish_case(contract, state, trace, turns, result);
  return result;
}

ControllerResult run_bcer(const TaskContract& contract,
                          const ControllerConfig& config) {
  ControllerResult result;
  result.case_id = make_case_id(contract.task, config.seed);
  result.case_scope = config.workdir / std::string(to_string(config.kind)) /
                      "cases" / result.case_id;

  Toolset toolset = build_task_toolset(contract.task);
  ToolRegistry registry = registry_from(toolset.specs);
  FaultStream stream(config.seed);
  PlanSketch sketch = surrogate_brain(contract, config.policy, stream, 0);

  CaseState state =
      materialize_case(contract, result.case_id, result.case_scope);
  init_case_dirs(state);
  TraceWriter trace(state.trace_path(), result.case_id);
  trace.append(EventKind::CaseStarted, "",
               {{"controller", std::string(to_string(config.kind))},
                {"task", std::string(to_string(contract.task))},
                {"seed", config.seed}});
  trace.append(EventKind::SketchProduced, "",
               {{"revision", 0}, {"steps", sketch.steps.size()}});

  for (int revision = 0;; ++revision) {
    CompileResult compiled = compile(sketch, registry, contract);
    if (auto* errors = std::get_if<std::vector<CompileError>>(&compiled)) {
      trace.append(EventKind::CompileFailed, "",
                   {{"revision", revision}, {"errors", errors_payload(*errors)}});
      if (revision >= config.sketch_retries) {
        finish_case(contract, state, trace, 0, result);
        result.detail = "compile failed after " + std::to_string(revision + 1) +
                        " attempts";
        return result;
      }
      sketch = replan_with_diagnostics(contract, sketch, *errors);
      trace.append(EventKind::SketchProduced, "",
                   {{"revision", revision + 1}, {"steps", sketch.steps.size()}});
      continue;
    }

    WorkflowGraph& graph = std::get<WorkflowGraph>(compiled);
    trace.append(EventKind::Compiled, "",
                 {{"revision", revision},
                  {"nodes", graph.nodes.size()},
                  {"edges", graph.edges.size()},
                  {"execution_order", graph.execution_order}});
    RunConstraints rc;
    rc.faults = config.faults;
    rc.seed = config.seed;
    rc.hook = config.hook;
    CaseOutcome outcome =
        run_graph(graph, registry, contract, state, trace, rc);
    result.score = outcome.score;
    result.total_dispatches = outcome.total_dispatches;
    return result;
  }
}

}  // namespace

ControllerResult run_controller(const TaskContract& contract,
                                const ControllerConfig& config) {
  try {
    switch (config.kind) {
      case ControllerKind::React:
        return run_reactive(contract, config, {false, false});
      case ControllerKind::ReactBind:
        return run_reactive(contract, config, {true, false});
      case ControllerKind::ReactBindRef:
        return run_reactive(contract, config, {true, true});
      case ControllerKind::Bcer:
        return run_bcer(contract, config);
    }
    ControllerResult r;
    r.engine_error = true;
    r.detail = "unknown controller kind";
    return r;
  } catch (const std::exception& e) {
    ControllerResult r;
    r.case_id = make_case_id(contract.task, config.seed);
    r.case_scope = config.workdir / std::string(to_string(config.kind)) /
                   "cases" / r.case_id;
    r.engine_error = true;
    r.detail = e.what();
    try {
      TraceWriter trace(r.case_scope / "engine_error.log", r.case_id);
      trace.append(EventKind::EngineError, "", {{"detail", e.what()}});
    } catch (...) {
    }
    return r;
  }
}

}  // namespace bcer
