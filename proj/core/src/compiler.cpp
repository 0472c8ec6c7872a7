#include "bcer/compiler.hpp"

#include <algorithm>
#include <queue>

namespace bcer {

std::string_view to_string(CompileErrorKind k) {
  switch (k) {
    case CompileErrorKind::UnknownTool: return "UnknownTool";
    case CompileErrorKind::DanglingReference: return "DanglingReference";
    case CompileErrorKind::CycleDetected: return "CycleDetected";
    case CompileErrorKind::AmbiguousLink: return "AmbiguousLink";
    case CompileErrorKind::UnfillableRequiredArg: return "UnfillableRequiredArg";
    case CompileErrorKind::ToolNotAllowed: return "ToolNotAllowed";
    case CompileErrorKind::ArgTypeMismatch: return "ArgTypeMismatch";
  }
  return "?";
}

std::set<std::string> WorkflowGraph::predecessors(const std::string& node) const {
  std::set<std::string> out;
  for (const auto& e : edges) {
    if (e.consumer == node) out.insert(e.producer);
  }
  return out;
}

std::set<std::string> WorkflowGraph::successors(const std::string& node) const {
  std::set<std::string> out;
  for (const auto& e : edges) {
    if (e.producer == node) out.insert(e.consumer);
  }
  return out;
}

InferResult infer_link(SemanticType wanted,
                       const std::vector<const WorkflowNode*>& prefix,
                       const ToolRegistry& registry) {
  InferResult r;
  std::string link_node, link_field;
  for (const WorkflowNode* node : prefix) {
    const ToolSpec* spec = registry.find(node->tool_name);
    if (!spec) continue;
    for (const auto& [field, type] : spec->outputs) {
      if (type != wanted) continue;
      r.candidates.push_back(node->node_id + "." + field);
      link_node = node->node_id;
      link_field = field;
    }
  }
  if (r.candidates.empty()) {
    r.status = InferResult::Status::NoProducer;
  } else if (r.candidates.size() > 1) {
    r.status = InferResult::Status::Ambiguous;
  } else {
    r.status = InferResult::Status::Linked;
    r.token.kind = TokenKind::Node;
    r.token.node_id = link_node;
    r.token.field_path = {link_field};
  }
  return r;
}

TopoResult toposort(const std::map<std::string, WorkflowNode>& nodes,
                    const std::set<Edge>& edges) {
  std::map<std::string, int> indegree;
  std::map<std::string, std::set<std::string>> succ;
  for (const auto& [id, _] : nodes) indegree[id] = 0;
  for (const auto& e : edges) {
    if (!nodes.count(e.producer) || !nodes.count(e.consumer)) continue;
    if (succ[e.producer].insert(e.consumer).second) indegree[e.consumer] += 1;
  }

  auto position = [&](const std::string& id) { return nodes.at(id).position; };
  auto cmp = [&](const std::string& a, const std::string& b) {
    return position(a) > position(b);  // min-heap by sketch position
  };
  std::priority_queue<std::string, std::vector<std::string>, decltype(cmp)>
      ready(cmp);
  for (const auto& [id, deg] : indegree) {
    if (deg == 0) ready.push(id);
  }

  TopoResult result;
  while (!ready.empty()) {
    std::string id = ready.top();
    ready.pop();
    result.order.push_back(id);
    for (const auto& next : succ[id]) {
      if (--indegree[next] == 0) ready.push(next);
    }
  }
  if (result.order.size() == nodes.size()) {
    result.ok = true;
    return result;
  }

  // Witness cycle: walk successors among the leftover nodes.
  std::set<std::string> leftover;
  for (const auto& [id, deg] : indegree) {
    if (deg > 0) leftover.insert(id);
  }
  TopoResult cycle;
  std::vector<std::string> path;
  std::set<std::string> on_path;
  std::string cur = *leftover.begin();
  while (!on_path.count(cur)) {
    path.push_back(cur);
    on_path.insert(cur);
    for (const auto& next : succ[cur]) {
      if (leftover.count(next)) {
        cur = next;
        break;
      }
    }
  }
  auto start = std::find(path.begin(), path.end(), cur);
  cycle.order.assign(start, path.end());
  return cycle;
}

CompileResult compile(const PlanSketch& sketch, const ToolRegistry& registry,
                      const TaskContract& contract) {
  std::vector<CompileError> errors;

  for (const auto& issue : validate_sketch(sketch, registry, contract)) {
    switch (issue.kind) {
      case SketchIssueKind::UnknownTool:
        errors.push_back({CompileErrorKind::UnknownTool, issue.step_id,
                          issue.arg, issue.detail});
        break;
      case SketchIssueKind::ToolNotAllowedByContract:
        errors.push_back({CompileErrorKind::ToolNotAllowed, issue.step_id,
                          issue.arg, issue.detail});
        break;
      case SketchIssueKind::DanglingReference:
        errors.push_back({CompileErrorKind::DanglingReference, issue.step_id,
                          issue.arg, issue.detail});
        break;
      case SketchIssueKind::ArgTypeMismatch:
        errors.push_back({CompileErrorKind::ArgTypeMismatch, issue.step_id,
                          issue.arg, issue.detail});
        break;
      case SketchIssueKind::ForwardReference:
        // Acyclic forward references are legal; toposort reorders them
        // and genuine cycles surface as CycleDetected below.
        break;
    }
  }

  WorkflowGraph graph;
  std::vector<const WorkflowNode*> prefix;

  for (std::size_t i = 0; i < sketch.steps.size(); ++i) {
    const SketchStep& step = sketch.steps[i];
    const ToolSpec* spec = registry.find(step.tool_name);
    if (!spec) continue;  // already reported

    WorkflowNode node;
    node.node_id = step.step_id;
    node.tool_name = step.tool_name;
    node.position = static_cast<int>(i);
    node.args = step.partial_args;

    for (const auto& [arg, aspec] : spec->args) {
      auto it = node.args.find(arg);
      const bool absent = it == node.args.end();
      const bool unfilled = !absent && is_unfilled(it->second);
      if (!absent && !unfilled) continue;

      if (!aspec.required) {
        if (!unfilled) continue;  // untouched absent optionals stay absent
        if (aspec.default_value) {
          node.args[arg] = *aspec.default_value;
        } else if (aspec.accepts_reference) {
          InferResult link = infer_link(aspec.type, prefix, registry);
          if (link.status == InferResult::Status::Linked) {
            node.args[arg] = render_token(link.token);
          } else if (link.status == InferResult::Status::Ambiguous) {
            errors.push_back({CompileErrorKind::AmbiguousLink, step.step_id,
                              arg, "candidates: " +
                                  std::to_string(link.candidates.size())});
          } else {
            node.args.erase(arg);
          }
        } else {
          node.args.erase(arg);
        }
        continue;
      }

      // Required and unspecified: only an unambiguous link can fill it.
      if (!aspec.accepts_reference) {
        errors.push_back({CompileErrorKind::UnfillableRequiredArg, step.step_id,
                          arg, "required literal argument unspecified"});
        continue;
      }
      InferResult link = infer_link(aspec.type, prefix, registry);
      switch (link.status) {
        case InferResult::Status::Linked:
          node.args[arg] = render_token(link.token);
          break;
        case InferResult::Status::Ambiguous:
          errors.push_back({CompileErrorKind::AmbiguousLink, step.step_id, arg,
                            "candidates: " +
                                std::to_string(link.candidates.size())});
          break;
        case InferResult::Status::NoProducer:
          errors.push_back({CompileErrorKind::UnfillableRequiredArg,
                            step.step_id, arg, "no producer of " +
                                std::string(to_string(aspec.type))});
          break;
      }
    }

    auto [inserted, _] = graph.nodes.emplace(node.node_id, std::move(node));
    prefix.push_back(&inserted->second);
  }

  // Dataflow edges from node-token references.
  for (const auto& [id, node] : graph.nodes) {
    for (const auto& [arg, value] : node.args) {
      if (!value.is_string()) continue;
      for (const auto& tok :
           scan_arguments(value.get_ref<const std::string&>()).tokens()) {
        if (tok.kind == TokenKind::Node && graph.nodes.count(tok.node_id)) {
          graph.edges.insert({tok.node_id, id, arg});
        }
      }
    }
  }

  TopoResult topo = toposort(graph.nodes, graph.edges);
  if (!topo.ok) {
    std::string witness;
    for (const auto& n : topo.order) {
      if (!witness.empty()) witness += " -> ";
      witness += n;
    }
    errors.push_back({CompileErrorKind::CycleDetected,
                      topo.order.empty() ? "" : topo.order.front(), "",
                      witness});
  } else {
    graph.execution_order = topo.order;
  }

  if (!errors.empty()) return errors;

  // Milestone producers, then reverse reachability, define `required`.
  std::set<std::string> targets;
  for (const auto& m : contract.milestones) {
    if (graph.nodes.count(m.milestone_id)) targets.insert(m.milestone_id);
  }
  if (targets.empty()) {
    for (const auto& m : contract.milestones) {
      if (!m.deliverable) continue;
      for (const auto& [id, node] : graph.nodes) {
        const ToolSpec* spec = registry.find(node.tool_name);
        for (const auto& [_, type] : spec->outputs) {
          if (type == m.expected_type) targets.insert(id);
        }
      }
    }
  }
  std::vector<std::string> work(targets.begin(), targets.end());
  while (!work.empty()) {
    std::string id = work.back();
    work.pop_back();
    graph.nodes.at(id).required = true;
    for (const auto& pred : graph.predecessors(id)) {
      if (!graph.nodes.at(pred).required && targets.insert(pred).second) {
        work.push_back(pred);
      }
    }
  }

  // Compiled nodes must be structurally dispatchable.
  for (const auto& [id, node] : graph.nodes) {
    for (const auto& issue :
         validate_call(*registry.find(node.tool_name), node.args)) {
      errors.push_back({CompileErrorKind::ArgTypeMismatch, id, issue.arg,
                        issue.detail});
    }
  }
  if (!errors.empty()) return errors;
  return graph;
}

nlohmann::json graph_to_json(const WorkflowGraph& g) {
  nlohmann::json j;
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& id : g.execution_order) {
    const WorkflowNode& n = g.nodes.at(id);
    nodes.push_back({{"node_id", n.node_id},
                     {"tool", n.tool_name},
                     {"args", n.args},
                     {"required", n.required},
                     {"position", n.position},
                     {"budget",
                      {{"deterministic", n.retry_budget.deterministic_attempts},
                       {"pluggable", n.retry_budget.pluggable_attempts}}}});
  }
  j["nodes"] = nodes;
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"producer", e.producer},
                     {"consumer", e.consumer},
                     {"arg", e.arg}});
  }
  j["edges"] = edges;
  j["execution_order"] = g.execution_order;
  return j;
}

WorkflowGraph graph_from_json(const nlohmann::json& j) {
  WorkflowGraph g;
  for (const auto& nj : j.at("nodes")) {
    WorkflowNode n;
    n.node_id = nj.at("node_id").get<std::string>();
    n.tool_name = nj.at("tool").get<std::string>();
    n.args = nj.at("args").get<std::map<std::string, Value>>();
    n.required = nj.value("required", false);
    n.position = nj.value("position", 0);
    if (nj.contains("budget")) {
      n.retry_budget.deterministic_attempts =
          nj["budget"].value("deterministic", 2);
      n.retry_budget.pluggable_attempts = nj["budget"].value("pluggable", 1);
    }
    g.nodes.emplace(n.node_id, std::move(n));
  }
  for (const auto& ej : j.at("edges")) {
    g.edges.insert({ej.at("producer").get<std::string>(),
                    ej.at("consumer").get<std::string>(),
                    ej.at("arg").get<std::string>()});
  }
  g.execution_order = j.at("execution_order").get<std::vector<std::string>>();
  return g;
}

PlanSketch replan_with_diagnostics(const TaskContract& contract,
                                   const PlanSketch& prev,
                                   const std::vector<CompileError>& errors) {
  Toolset toolset = build_task_toolset(contract.task);
  std::map<std::string, std::size_t> ref_index;
  std::map<std::string, const ChainStep*> ref_by_id;
  for (std::size_t i = 0; i < toolset.reference.size(); ++i) {
    ref_index[toolset.reference[i].step_id] = i;
    ref_by_id[toolset.reference[i].step_id] = &toolset.reference[i];
  }

  std::map<std::string, SketchStep> steps;
  for (const auto& s : prev.steps) steps[s.step_id] = s;

  // The re-prompted Brain fixes what the diagnostics point at: each
  // implicated argument or step reverts to the reference chain.
  for (const auto& err : errors) {
    auto ref = ref_by_id.find(err.step_id);
    if (ref == ref_by_id.end()) {
      steps.erase(err.step_id);  // a step the reference chain never had
      continue;
    }
    auto it = steps.find(err.step_id);
    if (it == steps.end()) continue;
    if (err.kind == CompileErrorKind::UnknownTool ||
        err.kind == CompileErrorKind::ToolNotAllowed ||
        err.kind == CompileErrorKind::CycleDetected || err.arg.empty()) {
      it->second.tool_name = ref->second->tool_name;
      it->second.partial_args = ref->second->args;
      continue;
    }
    auto ref_arg = ref->second->args.find(err.arg);
    if (ref_arg == ref->second->args.end()) {
      it->second.partial_args.erase(err.arg);  // drop the bad override
    } else {
      it->second.partial_args[err.arg] = ref_arg->second;
    }
  }

  // Reinsert omitted reference steps that surviving steps point at,
  // to closure (a reinserted step may itself reference another).
  bool changed = true;
  while (changed) {
    changed = false;
    std::set<std::string> needed;
    for (const auto& [_, s] : steps) {
      for (const auto& [__, value] : s.partial_args) {
        if (!value.is_string()) continue;
        for (const auto& tok :
             scan_arguments(value.get_ref<const std::string&>()).tokens()) {
          if (tok.kind == TokenKind::Node && !steps.count(tok.node_id) &&
              ref_by_id.count(tok.node_id)) {
            needed.insert(tok.node_id);
          }
        }
      }
    }
    for (const auto& id : needed) {
      const ChainStep* ref = ref_by_id.at(id);
      steps[id] = SketchStep{ref->step_id, ref->tool_name, ref->args, ""};
      changed = true;
    }
  }

  PlanSketch next;
  next.goal_text = prev.goal_text;
  next.declared_constraints = prev.declared_constraints;
  std::vector<std::pair<std::size_t, SketchStep>> ordered;
  for (auto& [id, s] : steps) {
    std::size_t pos = ref_index.count(id) ? ref_index[id] : steps.size() + 100;
    ordered.emplace_back(pos, std::move(s));
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [_, s] : ordered) next.steps.push_back(std::move(s));
  return next;
}

}  // namespace bcer
