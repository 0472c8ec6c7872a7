#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bcer/artifact_store.hpp"
#include "bcer/trace.hpp"
#include "bcer/types.hpp"

namespace bcer {

/// Synthetic stand-in for the case's imaging data and metadata.
struct CaseInput {
  std::int64_t volume_seed = 0;
  std::map<std::string, Value> metadata;
  /// Optional named sequences (multi-sequence cases), each a map of
  /// field -> descriptor seed.
  std::map<std::string, std::map<std::string, std::int64_t>> sequences;
};

enum class MilestonePredicate {
  ArtifactExists,
  DigestMatchesRecomputation,
  LabelInAllowedSet,
  ReportContainsEvidenceLinks,
};

std::string_view to_string(MilestonePredicate p);
std::optional<MilestonePredicate> milestone_predicate_from(std::string_view s);

/// A contract-required output. The milestone id names the reference
/// step expected to produce it; validation demands a produced artifact
/// with a substantiating trace event, never just a file in the scope.
struct Milestone {
  std::string milestone_id;
  SemanticType expected_type = SemanticType::VolumeRef;
  MilestonePredicate predicate = MilestonePredicate::ArtifactExists;
  bool deliverable = false;
};

struct TaskContract {
  TaskId task = TaskId::Denoise;
  CaseInput case_input;
  std::string goal_text;
  std::set<std::string> allowed_tools;
  std::vector<Milestone> milestones;
};

struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Loads and fully validates a contract file; unknown fields are
/// rejected and the allowed toolset must cover the reference chain.
TaskContract load_contract(const std::filesystem::path& file);
TaskContract contract_from_json(const nlohmann::json& j);
nlohmann::json contract_to_json(const TaskContract& c);

/// Materializes the contract's inputs into a fresh CaseState rooted at
/// case_scope (deterministic artifact ids and digests).
CaseState materialize_case(const TaskContract& contract,
                           const std::string& case_id,
                           const std::filesystem::path& case_scope);

struct MilestoneVerdict {
  bool validated = false;
  /// Artifact ids and trace seq_nos substantiating the validation.
  std::vector<std::string> evidence;
  std::string detail;
};

MilestoneVerdict validate_milestone(const Milestone& m, const CaseState& state,
                                    const std::vector<TraceEvent>& trace);

struct CaseScore {
  int sr = 0;           // binary
  double tcr = 0.0;     // validated / total milestones
  std::set<std::string> validated_milestones;
};

CaseScore score_case(const TaskContract& contract, const CaseState& state,
                     const std::vector<TraceEvent>& trace);

}  // namespace bcer
