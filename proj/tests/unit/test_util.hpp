#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>

#include "bcer/contract.hpp"
#include "bcer/sim_tools.hpp"

namespace bcer_test {

/// Fresh scratch directory, removed when the guard dies.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("bcer_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

/// In-memory contract covering the task's reference chain, with one
/// milestone per reference step and the last step as deliverable.
inline bcer::TaskContract make_contract(bcer::TaskId task,
                                        std::int64_t volume_seed = 500) {
  using namespace bcer;
  TaskContract c;
  c.task = task;
  c.goal_text = "test contract";
  c.case_input.volume_seed = volume_seed;
  Toolset toolset = build_task_toolset(task);
  for (const auto& spec : toolset.specs) c.allowed_tools.insert(spec.name);
  if (task == TaskId::CardiacRpt) {
    c.case_input.sequences["cine"]["kspace"] = 4242;
  }
  ToolRegistry reg = registry_from(toolset.specs);
  for (std::size_t i = 0; i < toolset.reference.size(); ++i) {
    const ChainStep& step = toolset.reference[i];
    const ToolSpec* spec = reg.find(step.tool_name);
    Milestone m;
    m.milestone_id = step.step_id;
    m.expected_type = spec->outputs.begin()->second;
    if (m.expected_type == SemanticType::Label) {
      m.predicate = MilestonePredicate::LabelInAllowedSet;
    } else if (m.expected_type == SemanticType::ReportDoc) {
      m.predicate = MilestonePredicate::ReportContainsEvidenceLinks;
    }
    m.deliverable = i + 1 == toolset.reference.size();
    c.milestones.push_back(m);
  }
  return c;
}

}  // namespace bcer_test
