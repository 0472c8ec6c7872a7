#include "bcer/plan_sketch.hpp"

#include <fstream>

namespace bcer {

nlohmann::json PlannerPolicy::to_json() const {
  return {{"omit_step_prob", omit_step_prob},
          {"wrong_arg_prob", wrong_arg_prob},
          {"dangling_ref_prob", dangling_ref_prob},
          {"hallucinated_path_prob", hallucinated_path_prob}};
}

PlannerPolicy PlannerPolicy::from_json(const nlohmann::json& j) {
  PlannerPolicy p;
  p.omit_step_prob = j.value("omit_step_prob", 0.0);
  p.wrong_arg_prob = j.value("wrong_arg_prob", 0.0);
  p.dangling_ref_prob = j.value("dangling_ref_prob", 0.0);
  p.hallucinated_path_prob = j.value("hallucinated_path_prob", 0.0);
  for (double v : {p.omit_step_prob, p.wrong_arg_prob, p.dangling_ref_prob,
                   p.hallucinated_path_prob}) {
    if (v < 0.0 || v > 1.0) {
      throw std::runtime_error("planner policy probabilities must lie in [0,1]");
    }
  }
  return p;
}

PlannerPolicy PlannerPolicy::from_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open policy file: " + file.string());
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

PlannerPolicy default_planner_policy() {
  PlannerPolicy p;
  p.omit_step_prob = 0.08;
  p.wrong_arg_prob = 0.08;
  p.dangling_ref_prob = 0.05;
  p.hallucinated_path_prob = 0.10;
  return p;
}

CorruptionKind CorruptionPlan::kind_for(const std::string& step,
                                        const std::string& arg) const {
  auto it = arg_edits.find({step, arg});
  return it == arg_edits.end() ? CorruptionKind::None : it->second.kind;
}

CorruptionPlan draw_corruptions(TaskId task, const PlannerPolicy& policy,
                                const FaultStream& stream, int attempt) {
  CorruptionPlan plan;
  Toolset toolset = build_task_toolset(task);
  ToolRegistry registry = registry_from(toolset.specs);
  auto task_name = to_string(task);

  for (std::size_t i = 0; i < toolset.reference.size(); ++i) {
    const ChainStep& step = toolset.reference[i];
    const bool interior = i > 0 && i + 1 < toolset.reference.size();

    // Omissions never drop the input-loading or deliverable-producing step.
    if (interior && policy.omit_step_prob > 0.0 &&
        stream.uniform("omit", task_name, attempt, step.step_id) <
            policy.omit_step_prob) {
      plan.omitted_steps.insert(step.step_id);
      continue;
    }

    const ToolSpec* spec = registry.find(step.tool_name);

    // Reference-valued sites: hallucinated path wins over dangling ref.
    for (const auto& [arg, value] : step.args) {
      if (!value.is_string() ||
          !scan_arguments(value.get_ref<const std::string&>()).has_tokens()) {
        continue;
      }
      if (policy.hallucinated_path_prob > 0.0 &&
          stream.uniform("hallucinate", task_name, attempt, step.step_id, arg) <
              policy.hallucinated_path_prob) {
        plan.arg_edits[{step.step_id, arg}] = {
            CorruptionKind::Hallucinated,
            "/data/fabricated/" + std::string(task_name) + "_" + step.step_id +
                "_" + arg + ".nii"};
        continue;
      }
      if (policy.dangling_ref_prob > 0.0 &&
          stream.uniform("dangle", task_name, attempt, step.step_id, arg) <
              policy.dangling_ref_prob) {
        plan.arg_edits[{step.step_id, arg}] = {
            CorruptionKind::Dangling,
            "@node.ghost_" + step.step_id + "." + arg};
      }
    }

    // Wrong-argument faults: a type-mismatched override on a numeric
    // tuning knob the reference chain left at its default.
    if (spec && policy.wrong_arg_prob > 0.0) {
      for (const auto& [arg, aspec] : spec->args) {
        if (aspec.required || step.args.count(arg)) continue;
        if (aspec.type != SemanticType::Scalar &&
            aspec.type != SemanticType::FrameIndex) {
          continue;
        }
        if (stream.uniform("wrongarg", task_name, attempt, step.step_id, arg) <
            policy.wrong_arg_prob) {
          plan.arg_edits[{step.step_id, arg}] = {CorruptionKind::WrongArg,
                                                 "auto"};
        }
      }
    }
  }
  return plan;
}

PlanSketch surrogate_brain(const TaskContract& contract,
                           const PlannerPolicy& policy,
                           const FaultStream& stream, int attempt) {
  CorruptionPlan plan = draw_corruptions(contract.task, policy, stream, attempt);
  Toolset toolset = build_task_toolset(contract.task);

  PlanSketch sketch;
  sketch.goal_text = contract.goal_text;
  sketch.declared_constraints = {"stay-in-case-scope"};
  for (const auto& ref : toolset.reference) {
    if (plan.omitted_steps.count(ref.step_id)) continue;
    SketchStep step;
    step.step_id = ref.step_id;
    step.tool_name = ref.tool_name;
    step.partial_args = ref.args;
    for (const auto& [key, edit] : plan.arg_edits) {
      if (key.first != ref.step_id) continue;
      step.partial_args[key.second] = edit.corrupted_value;
    }
    sketch.steps.push_back(std::move(step));
  }
  return sketch;
}

std::string_view to_string(SketchIssueKind k) {
  switch (k) {
    case SketchIssueKind::UnknownTool: return "UnknownTool";
    case SketchIssueKind::ToolNotAllowedByContract:
      return "ToolNotAllowedByContract";
    case SketchIssueKind::DanglingReference: return "DanglingReference";
    case SketchIssueKind::ArgTypeMismatch: return "ArgTypeMismatch";
    case SketchIssueKind::ForwardReference: return "ForwardReference";
  }
  return "?";
}

std::vector<SketchIssue> validate_sketch(const PlanSketch& sketch,
                                         const ToolRegistry& registry,
                                         const TaskContract& contract) {
  std::vector<SketchIssue> issues;

  std::map<std::string, std::size_t> step_index;
  for (std::size_t i = 0; i < sketch.steps.size(); ++i) {
    step_index[sketch.steps[i].step_id] = i;
  }

  for (std::size_t i = 0; i < sketch.steps.size(); ++i) {
    const SketchStep& step = sketch.steps[i];
    const ToolSpec* spec = registry.find(step.tool_name);
    if (!spec) {
      issues.push_back({SketchIssueKind::UnknownTool, step.step_id, "",
                        step.tool_name});
      continue;
    }
    if (!contract.allowed_tools.count(step.tool_name)) {
      issues.push_back({SketchIssueKind::ToolNotAllowedByContract, step.step_id,
                        "", step.tool_name});
    }

    for (const auto& [arg, value] : step.partial_args) {
      auto aspec_it = spec->args.find(arg);
      if (aspec_it == spec->args.end()) {
        issues.push_back({SketchIssueKind::ArgTypeMismatch, step.step_id, arg,
                          "argument not declared by tool"});
        continue;
      }
      const ArgSpec& aspec = aspec_it->second;
      if (is_unfilled(value)) continue;

      if (value.is_string()) {
        TokenScan scan = scan_arguments(value.get_ref<const std::string&>());
        if (scan.has_tokens()) {
          if (!aspec.accepts_reference) {
            issues.push_back({SketchIssueKind::ArgTypeMismatch, step.step_id,
                              arg, "token where references are not accepted"});
          }
          for (const auto& tok : scan.tokens()) {
            if (tok.kind != TokenKind::Node) continue;
            auto target = step_index.find(tok.node_id);
            if (target == step_index.end()) {
              issues.push_back({SketchIssueKind::DanglingReference,
                                step.step_id, arg, tok.node_id});
            } else if (target->second >= i) {
              issues.push_back({SketchIssueKind::ForwardReference, step.step_id,
                                arg, tok.node_id});
            } else {
              const ToolSpec* producer =
                  registry.find(sketch.steps[target->second].tool_name);
              if (producer &&
                  !producer->outputs.count(tok.field_path_joined())) {
                issues.push_back({SketchIssueKind::DanglingReference,
                                  step.step_id, arg,
                                  tok.node_id + " has no output " +
                                      tok.field_path_joined()});
              }
            }
          }
          continue;
        }
      }
      if (!literal_matches(aspec.type, value)) {
        issues.push_back({SketchIssueKind::ArgTypeMismatch, step.step_id, arg,
                          "literal does not match " +
                              std::string(to_string(aspec.type))});
      }
    }
  }
  return issues;
}

nlohmann::json sketch_to_json(const PlanSketch& sketch) {
  nlohmann::json j;
  j["goal"] = sketch.goal_text;
  j["constraints"] = sketch.declared_constraints;
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : sketch.steps) {
    steps.push_back({{"step_id", s.step_id},
                     {"tool", s.tool_name},
                     {"args", s.partial_args},
                     {"rationale", s.rationale}});
  }
  j["steps"] = steps;
  return j;
}

PlanSketch sketch_from_json(const nlohmann::json& j) {
  PlanSketch sketch;
  sketch.goal_text = j.at("goal").get<std::string>();
  for (const auto& c : j.value("constraints", nlohmann::json::array())) {
    sketch.declared_constraints.insert(c.get<std::string>());
  }
  for (const auto& sj : j.at("steps")) {
    SketchStep s;
    s.step_id = sj.at("step_id").get<std::string>();
    s.tool_name = sj.at("tool").get<std::string>();
    s.partial_args = sj.at("args").get<std::map<std::string, Value>>();
    s.rationale = sj.value("rationale", "");
    sketch.steps.push_back(std::move(s));
  }
  return sketch;
}

void save_sketch(const PlanSketch& sketch, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  nlohmann::json header = {{"goal", sketch.goal_text},
                           {"constraints", sketch.declared_constraints}};
  out << header.dump() << '\n';
  for (const auto& s : sketch.steps) {
    nlohmann::json rec = {{"step_id", s.step_id},
                          {"tool", s.tool_name},
                          {"args", s.partial_args},
                          {"rationale", s.rationale}};
    out << rec.dump() << '\n';
  }
}

PlanSketch load_sketch(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open sketch: " + file.string());
  PlanSketch sketch;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    if (header) {
      sketch.goal_text = j.at("goal").get<std::string>();
      for (const auto& c : j.value("constraints", nlohmann::json::array())) {
        sketch.declared_constraints.insert(c.get<std::string>());
      }
      header = false;
      continue;
    }
    SketchStep s;
    s.step_id = j.at("step_id").get<std::string>();
    s.tool_name = j.at("tool").get<std::string>();
    s.partial_args = j.at("args").get<std::map<std::string, Value>>();
    s.rationale = j.value("rationale", "");
    sketch.steps.push_back(std::move(s));
  }
  return sketch;
}

}  // namespace bcer
