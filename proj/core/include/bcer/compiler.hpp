#pragma once

#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "bcer/plan_sketch.hpp"
#include "bcer/tool_registry.hpp"

namespace bcer {

struct RetryBudget {
  int deterministic_attempts = 2;
  int pluggable_attempts = 1;
};

struct WorkflowNode {
  std::string node_id;
  std::string tool_name;
  std::map<std::string, Value> args;  // literals and token texts
  bool required = false;              // feeds a contract milestone
  RetryBudget retry_budget;
  int position = 0;  // sketch order, used for tie-breaks
};

struct Edge {
  std::string producer;
  std::string consumer;
  std::string arg;
  auto operator<=>(const Edge&) const = default;
};

struct WorkflowGraph {
  std::map<std::string, WorkflowNode> nodes;
  std::set<Edge> edges;
  std::vector<std::string> execution_order;

  std::set<std::string> predecessors(const std::string& node) const;
  std::set<std::string> successors(const std::string& node) const;
};

enum class CompileErrorKind {
  UnknownTool,
  DanglingReference,
  CycleDetected,
  AmbiguousLink,
  UnfillableRequiredArg,
  ToolNotAllowed,
  ArgTypeMismatch,
};

std::string_view to_string(CompileErrorKind k);

struct CompileError {
  CompileErrorKind kind = CompileErrorKind::UnknownTool;
  std::string step_id;
  std::string arg;
  std::string detail;
};

using CompileResult = std::variant<WorkflowGraph, std::vector<CompileError>>;

/// Compiles a sketch into a typed acyclic graph: validates steps,
/// fills defaults for unfilled optional arguments, infers only
/// unambiguous dataflow links for missing required references, derives
/// edges, and topologically orders the result. All-or-nothing: any
/// defect fails the whole compilation, one error per defect.
CompileResult compile(const PlanSketch& sketch, const ToolRegistry& registry,
                      const TaskContract& contract);

struct InferResult {
  enum class Status { Linked, Ambiguous, NoProducer };
  Status status = Status::NoProducer;
  SymbolicToken token;  // meaningful when Linked
  std::vector<std::string> candidates;
};

/// Unique-producer-by-semantic-type over the compiled prefix. Two or
/// more candidates is a refusal, never a guess.
InferResult infer_link(SemanticType wanted,
                       const std::vector<const WorkflowNode*>& prefix,
                       const ToolRegistry& registry);

struct TopoResult {
  bool ok = false;
  std::vector<std::string> order;  // a witness cycle when !ok
};

/// Deterministic topological sort; ties broken by node position.
TopoResult toposort(const std::map<std::string, WorkflowNode>& nodes,
                    const std::set<Edge>& edges);

nlohmann::json graph_to_json(const WorkflowGraph& g);
WorkflowGraph graph_from_json(const nlohmann::json& j);

/// Surrogate Brain re-invocation with compile diagnostics: the
/// reported defects are reverted to the reference chain's wiring
/// (omitted steps reinserted, corrupted arguments restored).
PlanSketch replan_with_diagnostics(const TaskContract& contract,
                                   const PlanSketch& prev,
                                   const std::vector<CompileError>& errors);

}  // namespace bcer
