#pragma once

#include <map>
#include <string>
#include <vector>

#include "bcer/compiler.hpp"
#include "bcer/contract.hpp"
#include "bcer/reflector.hpp"
#include "bcer/sim_tools.hpp"
#include "bcer/trace.hpp"

namespace bcer {

struct RunConstraints {
  FaultConfig faults;
  std::uint64_t seed = 0;
  RepairHook* hook = nullptr;  // optional second repair stage
  bool repairs_enabled = true;
};

struct CaseOutcome {
  bool all_required_succeeded = false;
  CaseScore score;
  std::map<std::string, NodeState> final_states;
  int total_dispatches = 0;
};

/// Runs a compiled workflow to quiescence: sequential dispatch in
/// execution order, per-node bounded repair, milestone validation, and
/// a CaseFinished event. The graph copy is mutated by applied patches.
CaseOutcome run_graph(WorkflowGraph graph, const ToolRegistry& registry,
                      const TaskContract& contract, CaseState& state,
                      TraceWriter& trace, const RunConstraints& rc);

/// Nodes whose predecessors have all Succeeded and which are still
/// Pending, in execution order.
std::vector<std::string> ready_nodes(const WorkflowGraph& graph,
                                     const CaseState& state);

}  // namespace bcer
