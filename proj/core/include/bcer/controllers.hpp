#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "bcer/contract.hpp"
#include "bcer/executor.hpp"
#include "bcer/plan_sketch.hpp"

namespace bcer {

/// The ablation ladder. Every arm consumes the same planner sketch and
/// the same keyed fault stream for a given (contract, seed), so arms
/// differ only in the machinery wrapped around the plan.
enum class ControllerKind {
  React,         // direct stepwise execution, no binding, no repair
  ReactBind,     // + symbolic binding with unique-producer fallback
  ReactBindRef,  // + bounded local repair
  Bcer,          // full compile/execute/reflect engine
};

std::string_view to_string(ControllerKind k);
std::optional<ControllerKind> controller_kind_from(std::string_view s);

struct ControllerConfig {
  ControllerKind kind = ControllerKind::Bcer;
  std::uint64_t seed = 0;
  PlannerPolicy policy;  // sketch corruption rates
  FaultConfig faults;    // runtime fault injection
  std::filesystem::path workdir;
  RepairHook* hook = nullptr;   // extra repair stage (Bcer / Ref arms)
  int sketch_retries = 2;       // Bcer recompile budget
};

struct ControllerResult {
  std::string case_id;
  std::filesystem::path case_scope;
  CaseScore score;
  int total_dispatches = 0;
  bool engine_error = false;
  std::string detail;
};

std::string make_case_id(TaskId task, std::uint64_t seed);

/// Runs one case end to end under the given arm. Never throws: anything
/// unexpected is recorded as an EngineError event and a zero score.
ControllerResult run_controller(const TaskContract& contract,
                                const ControllerConfig& config);

}  // namespace bcer
