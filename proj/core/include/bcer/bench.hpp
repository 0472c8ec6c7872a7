#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bcer/controllers.hpp"

namespace bcer {

/// A benchmark run is the cross product contracts x controllers x
/// seeds, every cell with matched (sketch, fault stream) across arms.
struct BenchConfig {
  std::vector<TaskContract> contracts;
  std::vector<ControllerKind> kinds;
  std::uint64_t seed_base = 1;
  int seeds = 25;
  PlannerPolicy policy;
  FaultConfig faults;
  std::filesystem::path workdir;
  int jobs = 1;
  bool keep_cases = true;  // false removes case dirs once scored
};

struct BenchCell {
  TaskId task = TaskId::Denoise;
  ControllerKind kind = ControllerKind::Bcer;
  std::uint64_t seed = 0;
  CaseScore score;
  int dispatches = 0;
  bool engine_error = false;
  std::string detail;

  nlohmann::json to_json() const;
};

struct BenchAggregate {
  double sr_short = 0.0;  // mean success over 1-3 step tasks
  double sr_long = 0.0;   // mean success over 5-7 step tasks
  double sr_total = 0.0;
  double tcr_total = 0.0;
  int cells = 0;
};

struct BenchResult {
  std::vector<BenchCell> cells;
  std::map<ControllerKind, BenchAggregate> aggregates;
};

/// Runs every cell, archives one record per case to
/// workdir/scores.jsonl, and never aborts the sweep: a crashed cell
/// scores zero and is marked engine_error.
BenchResult run_benchmark(const BenchConfig& config);

BenchAggregate aggregate_for(const BenchResult& result, ControllerKind kind);

/// Aligned success-rate table, one row per controller arm.
std::string format_table(const BenchResult& result);

}  // namespace bcer
