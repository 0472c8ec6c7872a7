#include "bcer/contract.hpp"

#include <fstream>

#include "bcer/sim_tools.hpp"

namespace bcer {

std::string_view to_string(MilestonePredicate p) {
  switch (p) {
    case MilestonePredicate::ArtifactExists: return "ArtifactExists";
    case MilestonePredicate::DigestMatchesRecomputation:
      return "DigestMatchesRecomputation";
    case MilestonePredicate::LabelInAllowedSet: return "LabelInAllowedSet";
    case MilestonePredicate::ReportContainsEvidenceLinks:
      return "ReportContainsEvidenceLinks";
  }
  return "?";
}

std::optional<MilestonePredicate> milestone_predicate_from(std::string_view s) {
  for (auto p : {MilestonePredicate::ArtifactExists,
                 MilestonePredicate::DigestMatchesRecomputation,
                 MilestonePredicate::LabelInAllowedSet,
                 MilestonePredicate::ReportContainsEvidenceLinks}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

TaskContract contract_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known_top = {"task", "goal", "input",
                                                  "allowed_tools", "milestones"};
  for (const auto& [key, _] : j.items()) {
    if (!known_top.count(key)) {
      throw ContractError("unknown contract field: " + key);
    }
  }

  TaskContract c;
  auto task = task_from(j.at("task").get<std::string>());
  if (!task) throw ContractError("unknown task: " + j.at("task").dump());
  c.task = *task;
  c.goal_text = j.at("goal").get<std::string>();

  const auto& input = j.at("input");
  static const std::set<std::string> known_input = {"volume_seed", "metadata",
                                                    "sequences"};
  for (const auto& [key, _] : input.items()) {
    if (!known_input.count(key)) {
      throw ContractError("unknown input field: " + key);
    }
  }
  c.case_input.volume_seed = input.at("volume_seed").get<std::int64_t>();
  if (input.contains("metadata")) {
    c.case_input.metadata = input.at("metadata").get<std::map<std::string, Value>>();
  }
  if (input.contains("sequences")) {
    c.case_input.sequences =
        input.at("sequences")
            .get<std::map<std::string, std::map<std::string, std::int64_t>>>();
  }

  for (const auto& t : j.at("allowed_tools")) {
    c.allowed_tools.insert(t.get<std::string>());
  }

  for (const auto& mj : j.at("milestones")) {
    static const std::set<std::string> known_ms = {"id", "type", "predicate",
                                                   "deliverable"};
    for (const auto& [key, _] : mj.items()) {
      if (!known_ms.count(key)) {
        throw ContractError("unknown milestone field: " + key);
      }
    }
    Milestone m;
    m.milestone_id = mj.at("id").get<std::string>();
    auto type = semantic_type_from(mj.at("type").get<std::string>());
    if (!type) throw ContractError("unknown milestone type: " + mj.at("type").dump());
    m.expected_type = *type;
    auto pred = milestone_predicate_from(mj.at("predicate").get<std::string>());
    if (!pred) {
      throw ContractError("unknown milestone predicate: " +
                          mj.at("predicate").dump());
    }
    m.predicate = *pred;
    m.deliverable = mj.value("deliverable", false);
    c.milestones.push_back(std::move(m));
  }
  if (c.milestones.empty()) throw ContractError("milestones must be non-empty");

  bool any_deliverable = false;
  for (const auto& m : c.milestones) any_deliverable |= m.deliverable;
  if (!any_deliverable) {
    throw ContractError("at least one milestone must be a deliverable");
  }

  // The allowed toolset must cover the task's reference chain.
  Toolset toolset = build_task_toolset(c.task);
  for (const auto& tool : toolset.chain) {
    if (!c.allowed_tools.count(tool)) {
      throw ContractError("allowed_tools omits reference-chain tool: " + tool);
    }
  }
  return c;
}

nlohmann::json contract_to_json(const TaskContract& c) {
  nlohmann::json j;
  j["task"] = to_string(c.task);
  j["goal"] = c.goal_text;
  j["input"] = {{"volume_seed", c.case_input.volume_seed},
                {"metadata", c.case_input.metadata},
                {"sequences", c.case_input.sequences}};
  j["allowed_tools"] = c.allowed_tools;
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : c.milestones) {
    ms.push_back({{"id", m.milestone_id},
                  {"type", to_string(m.expected_type)},
                  {"predicate", to_string(m.predicate)},
                  {"deliverable", m.deliverable}});
  }
  j["milestones"] = ms;
  return j;
}

TaskContract load_contract(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ContractError("cannot open contract: " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ContractError("contract parse error in " + file.string() + ": " +
                        e.what());
  }
  return contract_from_json(j);
}

namespace {

SimArtifact make_input_artifact(const std::string& case_id,
                                const std::string& field, SemanticType type,
                                std::int64_t seed) {
  SimArtifact a;
  a.semantic_type = type;
  a.produced_by = "case-input";
  a.case_id = case_id;
  nlohmann::json content = {{"kind", "case-input"},
                            {"field", field},
                            {"seed", seed},
                            {"type", to_string(type)}};
  a.payload = content.dump();
  a.content_digest = digest_hex(a.payload);
  a.artifact_id = "case." + field + "." + a.content_digest.substr(0, 8);
  return a;
}

SemanticType case_field_type(const TaskContract& contract,
                             const std::string& field) {
  // The expected type comes from the argument slots that reference the
  // field in the task's reference chain.
  Toolset toolset = build_task_toolset(contract.task);
  ToolRegistry reg = registry_from(toolset.specs);
  for (const auto& s : toolset.reference) {
    const ToolSpec* spec = reg.find(s.tool_name);
    for (const auto& [arg, value] : s.args) {
      if (!value.is_string()) continue;
      TokenScan scan = scan_arguments(value.get_ref<const std::string&>());
      if (!scan.single_token()) continue;
      const auto& tok = std::get<SymbolicToken>(scan.parts[0]);
      if (tok.kind == TokenKind::Case && tok.field_path_joined() == field) {
        return spec->args.at(arg).type;
      }
    }
  }
  return SemanticType::VolumeRef;
}

}  // namespace

CaseState materialize_case(const TaskContract& contract,
                           const std::string& case_id,
                           const std::filesystem::path& case_scope) {
  CaseState state;
  state.case_id = case_id;
  state.case_scope = case_scope;
  init_case_dirs(state);

  // Primary input plus any other @case.* fields the reference chain uses.
  std::set<std::string> case_fields = {"input"};
  Toolset toolset = build_task_toolset(contract.task);
  for (const auto& s : toolset.reference) {
    for (const auto& [_, value] : s.args) {
      if (!value.is_string()) continue;
      for (const auto& tok :
           scan_arguments(value.get_ref<const std::string&>()).tokens()) {
        if (tok.kind == TokenKind::Case) case_fields.insert(tok.field_path_joined());
      }
    }
  }

  std::int64_t seed = contract.case_input.volume_seed;
  for (const auto& field : case_fields) {
    std::int64_t field_seed =
        seed + static_cast<std::int64_t>(fnv1a64(field) % 1000003);
    SimArtifact a = make_input_artifact(case_id, field,
                                        case_field_type(contract, field),
                                        field_seed);
    write_artifact(state, a);
    state.inputs[field] = a.artifact_id;
  }
  for (const auto& [k, v] : contract.case_input.metadata) {
    state.inputs["meta." + k] = v;
  }
  for (const auto& [name, fields] : contract.case_input.sequences) {
    for (const auto& [field, fseed] : fields) {
      SimArtifact a = make_input_artifact(case_id, name + "." + field,
                                          SemanticType::KSpaceRef, fseed);
      write_artifact(state, a);
      state.sequences[name][field] = a.artifact_id;
    }
  }
  state.runtime_values["case_id"] = case_id;
  return state;
}

MilestoneVerdict validate_milestone(const Milestone& m, const CaseState& state,
                                    const std::vector<TraceEvent>& trace) {
  MilestoneVerdict v;

  // The substantiating event: the last NodeSucceeded of the expected
  // producer that recorded an output of the expected type.
  const TraceEvent* producing_event = nullptr;
  std::string artifact_id;
  for (const auto& e : trace) {
    if (e.kind != EventKind::NodeSucceeded || e.node_id != m.milestone_id) {
      continue;
    }
    const nlohmann::json outputs =
        e.payload.value("outputs", nlohmann::json::object());
    for (const auto& [field, rec] : outputs.items()) {
      if (rec.value("type", "") == to_string(m.expected_type)) {
        producing_event = &e;
        artifact_id = rec.at("artifact_id").get<std::string>();
      }
    }
  }
  if (!producing_event) {
    v.detail = "no producing trace event";
    return v;
  }
  auto art = state.artifacts.find(artifact_id);
  if (art == state.artifacts.end() || !artifact_present(state, artifact_id)) {
    v.detail = "artifact absent from store";
    return v;
  }

  auto pass = [&](std::string detail = "") {
    v.validated = true;
    v.evidence.push_back(artifact_id);
    v.evidence.push_back("seq:" + std::to_string(producing_event->seq_no));
    v.detail = std::move(detail);
    return v;
  };

  switch (m.predicate) {
    case MilestonePredicate::ArtifactExists:
      return pass();
    case MilestonePredicate::DigestMatchesRecomputation: {
      auto payload = read_artifact_payload(state, artifact_id);
      if (!payload || digest_hex(*payload) != art->second.content_digest) {
        v.detail = "digest mismatch against stored bytes";
        return v;
      }
      const auto& rec = producing_event->payload.at("outputs");
      for (const auto& [field, out] : rec.items()) {
        if (out.at("artifact_id") == artifact_id &&
            out.at("digest") != art->second.content_digest) {
          v.detail = "digest mismatch against trace";
          return v;
        }
      }
      return pass();
    }
    case MilestonePredicate::LabelInAllowedSet: {
      nlohmann::json content;
      try {
        content = nlohmann::json::parse(art->second.payload);
      } catch (const nlohmann::json::exception&) {
        v.detail = "label artifact not parseable";
        return v;
      }
      std::string label = content.value("label", "");
      if (!allowed_labels().count(label)) {
        v.detail = "label outside allowed set: " + label;
        return v;
      }
      return pass(label);
    }
    case MilestonePredicate::ReportContainsEvidenceLinks: {
      nlohmann::json content;
      try {
        content = nlohmann::json::parse(art->second.payload);
      } catch (const nlohmann::json::exception&) {
        v.detail = "report not parseable";
        return v;
      }
      auto evidence = content.value("evidence", nlohmann::json::array());
      if (evidence.empty()) {
        v.detail = "report carries no evidence links";
        return v;
      }
      // Every cited artifact must appear in a NodeSucceeded event.
      std::set<std::string> produced;
      for (const auto& e : trace) {
        if (e.kind != EventKind::NodeSucceeded) continue;
        const nlohmann::json outputs =
            e.payload.value("outputs", nlohmann::json::object());
        for (const auto& [_, rec] : outputs.items()) {
          produced.insert(rec.at("artifact_id").get<std::string>());
        }
      }
      for (const auto& cited : evidence) {
        if (!produced.count(cited.get<std::string>())) {
          v.detail = "evidence link not in trace: " + cited.dump();
          return v;
        }
      }
      auto verdict = pass();
      for (const auto& cited : evidence) {
        verdict.evidence.push_back(cited.get<std::string>());
      }
      return verdict;
    }
  }
  return v;
}

CaseScore score_case(const TaskContract& contract, const CaseState& state,
                     const std::vector<TraceEvent>& trace) {
  CaseScore score;
  for (const auto& m : contract.milestones) {
    if (validate_milestone(m, state, trace).validated) {
      score.validated_milestones.insert(m.milestone_id);
    }
  }
  score.tcr = static_cast<double>(score.validated_milestones.size()) /
              static_cast<double>(contract.milestones.size());
  score.sr =
      score.validated_milestones.size() == contract.milestones.size() ? 1 : 0;
  return score;
}

}  // namespace bcer
