#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "bcer/contract.hpp"
#include "bcer/rng.hpp"
#include "bcer/sim_tools.hpp"
#include "bcer/tool_registry.hpp"

namespace bcer {

struct SketchStep {
  std::string step_id;
  std::string tool_name;  // possibly unknown: a compile error, not a
                          // representation error
  std::map<std::string, Value> partial_args;  // literal, token text, UNFILLED
  std::string rationale;
};

struct PlanSketch {
  std::string goal_text;
  std::vector<SketchStep> steps;
  std::set<std::string> declared_constraints;
};

struct PlannerPolicy {
  double omit_step_prob = 0.0;
  double wrong_arg_prob = 0.0;
  double dangling_ref_prob = 0.0;
  double hallucinated_path_prob = 0.0;

  nlohmann::json to_json() const;
  static PlannerPolicy from_json(const nlohmann::json& j);
  static PlannerPolicy from_file(const std::filesystem::path& file);
};

/// The default planner fault shape of the simulation study.
PlannerPolicy default_planner_policy();

enum class CorruptionKind { None, WrongArg, Dangling, Hallucinated };

/// Per-(step, arg) corruption decisions drawn once per (task, seed,
/// attempt). Reactive controllers and the surrogate Brain both consume
/// attempt 0 of this plan, which is what keeps fault streams matched
/// across controller arms.
struct CorruptionPlan {
  std::set<std::string> omitted_steps;
  struct ArgEditRecord {
    CorruptionKind kind = CorruptionKind::None;
    Value corrupted_value;
  };
  std::map<std::pair<std::string, std::string>, ArgEditRecord> arg_edits;

  CorruptionKind kind_for(const std::string& step, const std::string& arg) const;
  bool empty() const { return omitted_steps.empty() && arg_edits.empty(); }
};

CorruptionPlan draw_corruptions(TaskId task, const PlannerPolicy& policy,
                                const FaultStream& stream, int attempt);

/// Surrogate Brain: starts from the task's reference chain and applies
/// the policy's corruptions. With an all-zero policy the sketch is the
/// faithful reference chain with correct token wiring.
PlanSketch surrogate_brain(const TaskContract& contract,
                           const PlannerPolicy& policy,
                           const FaultStream& stream, int attempt = 0);

enum class SketchIssueKind {
  UnknownTool,
  ToolNotAllowedByContract,
  DanglingReference,
  ArgTypeMismatch,
  ForwardReference,
};

std::string_view to_string(SketchIssueKind k);

struct SketchIssue {
  SketchIssueKind kind = SketchIssueKind::UnknownTool;
  std::string step_id;
  std::string arg;
  std::string detail;
};

/// Checks the proposed steps against interface and dependency
/// constraints. An empty list means compilable pending default fill.
std::vector<SketchIssue> validate_sketch(const PlanSketch& sketch,
                                         const ToolRegistry& registry,
                                         const TaskContract& contract);

/// One header record plus one record per step, line-delimited.
void save_sketch(const PlanSketch& sketch, const std::filesystem::path& file);
PlanSketch load_sketch(const std::filesystem::path& file);
nlohmann::json sketch_to_json(const PlanSketch& sketch);
PlanSketch sketch_from_json(const nlohmann::json& j);

}  // namespace bcer
