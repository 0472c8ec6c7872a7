#include "bcer/sim_tools.hpp"

#include <fstream>
#include <stdexcept>

namespace bcer {

namespace {

ArgSpec ref_arg(SemanticType t) {
  ArgSpec a;
  a.type = t;
  a.required = true;
  a.accepts_reference = true;
  return a;
}

ArgSpec opt_arg(SemanticType t, Value def) {
  ArgSpec a;
  a.type = t;
  a.required = false;
  a.default_value = std::move(def);
  return a;
}

ArgSpec opt_ref_arg(SemanticType t) {
  ArgSpec a;
  a.type = t;
  a.required = false;
  a.accepts_reference = true;  // fillable by compiler, no default
  return a;
}

const std::set<ErrorCode> kCommonErrors = {
    ErrorCode::SchemaMismatch,     ErrorCode::MissingInput,
    ErrorCode::ToolTransientFailure, ErrorCode::ToolHardFailure,
    ErrorCode::ScopeViolation,     ErrorCode::InvalidOverride,
};

ToolSpec make_tool(std::string name, std::map<std::string, ArgSpec> args,
                   std::map<std::string, SemanticType> outputs) {
  ToolSpec t;
  t.name = std::move(name);
  t.args = std::move(args);
  t.outputs = std::move(outputs);
  t.error_codes = kCommonErrors;
  return t;
}

std::vector<ToolSpec> all_tools() {
  return {
      make_tool("load_volume", {{"input", ref_arg(SemanticType::VolumeRef)}},
                {{"volume", SemanticType::VolumeRef}}),
      make_tool("load_kspace", {{"input", ref_arg(SemanticType::KSpaceRef)}},
                {{"kspace", SemanticType::KSpaceRef}}),
      make_tool("identify_sequence",
                {{"candidates", ref_arg(SemanticType::KSpaceRef)}},
                {{"kspace", SemanticType::KSpaceRef}}),
      make_tool("denoise_volume",
                {{"input", ref_arg(SemanticType::VolumeRef)},
                 {"strength", opt_arg(SemanticType::Scalar, 0.5)}},
                {{"volume", SemanticType::VolumeRef}}),
      make_tool("superres_volume",
                {{"input", ref_arg(SemanticType::VolumeRef)},
                 {"factor", opt_arg(SemanticType::Scalar, 2.0)}},
                {{"volume", SemanticType::VolumeRef}}),
      make_tool("resample_volume",
                {{"input", ref_arg(SemanticType::VolumeRef)},
                 {"spacing", opt_arg(SemanticType::Scalar, 1.0)}},
                {{"volume", SemanticType::VolumeRef}}),
      make_tool("recon_volume", {{"kspace", ref_arg(SemanticType::KSpaceRef)}},
                {{"volume", SemanticType::VolumeRef}}),
      make_tool("segment_volume", {{"volume", ref_arg(SemanticType::VolumeRef)}},
                {{"mask", SemanticType::MaskRef}}),
      make_tool("register_volume",
                {{"moving", ref_arg(SemanticType::VolumeRef)},
                 {"fixed", ref_arg(SemanticType::VolumeRef)}},
                {{"volume", SemanticType::VolumeRef}}),
      make_tool("extract_features",
                {{"mask", ref_arg(SemanticType::MaskRef)},
                 {"frame", opt_arg(SemanticType::FrameIndex, 0)}},
                {{"measurements", SemanticType::MeasurementTable}}),
      make_tool("classify_grade",
                {{"measurements", ref_arg(SemanticType::MeasurementTable)}},
                {{"label", SemanticType::Label}}),
      make_tool("classify_phenotype",
                {{"measurements", ref_arg(SemanticType::MeasurementTable)}},
                {{"label", SemanticType::Label}}),
      make_tool("synthesize_report",
                {{"measurements", ref_arg(SemanticType::MeasurementTable)},
                 {"label", opt_ref_arg(SemanticType::Label)},
                 {"template", opt_arg(SemanticType::Text, "standard")}},
                {{"report", SemanticType::ReportDoc}}),
      make_tool("frame_select", {{"input", ref_arg(SemanticType::VolumeRef)}},
                {{"frame", SemanticType::FrameIndex}}),
  };
}

const ToolSpec& tool_by_name(std::string_view name) {
  static const std::vector<ToolSpec> tools = all_tools();
  for (const auto& t : tools) {
    if (t.name == name) return t;
  }
  throw std::runtime_error("unknown tool: " + std::string(name));
}

ChainStep step(std::string id, std::string tool,
               std::map<std::string, Value> args) {
  return ChainStep{std::move(id), std::move(tool), std::move(args)};
}

std::vector<ChainStep> reference_chain(TaskId task) {
  switch (task) {
    case TaskId::Denoise:
      return {step("load", "load_volume", {{"input", "@case.input"}}),
              step("denoise", "denoise_volume",
                   {{"input", "@node.load.volume"}})};
    case TaskId::SuperRes:
      return {step("load", "load_volume", {{"input", "@case.input"}}),
              step("superres", "superres_volume",
                   {{"input", "@node.load.volume"}}),
              step("resample", "resample_volume",
                   {{"input", "@node.superres.volume"}})};
    case TaskId::Segment:
      return {step("load", "load_volume", {{"input", "@case.input"}}),
              step("segment", "segment_volume",
                   {{"volume", "@node.load.volume"}})};
    case TaskId::Recon:
      return {step("load", "load_kspace", {{"input", "@case.input"}}),
              step("recon", "recon_volume", {{"kspace", "@node.load.kspace"}})};
    case TaskId::Register:
      return {step("load", "load_volume", {{"input", "@case.input"}}),
              step("register", "register_volume",
                   {{"moving", "@node.load.volume"},
                    {"fixed", "@case.reference"}})};
    case TaskId::BrainGrade:
      return {step("load", "load_volume", {{"input", "@case.input"}}),
              step("denoise", "denoise_volume",
                   {{"input", "@node.load.volume"}}),
              step("segment", "segment_volume",
                   {{"volume", "@node.denoise.volume"}}),
              step("extract", "extract_features",
                   {{"mask", "@node.segment.mask"}}),
              step("classify", "classify_grade",
                   {{"measurements", "@node.extract.measurements"}})};
    case TaskId::ProstateRpt:
      return {step("load", "load_volume", {{"input", "@case.input"}}),
              step("register", "register_volume",
                   {{"moving", "@node.load.volume"},
                    {"fixed", "@case.reference"}}),
              step("segment", "segment_volume",
                   {{"volume", "@node.register.volume"}}),
              step("extract", "extract_features",
                   {{"mask", "@node.segment.mask"}}),
              step("classify", "classify_grade",
                   {{"measurements", "@node.extract.measurements"}}),
              step("report", "synthesize_report",
                   {{"measurements", "@node.extract.measurements"}})};
    case TaskId::CardiacRpt:
      return {step("identify", "identify_sequence",
                   {{"candidates", "@seq.cine.kspace"}}),
              step("recon", "recon_volume",
                   {{"kspace", "@node.identify.kspace"}}),
              step("segment", "segment_volume",
                   {{"volume", "@node.recon.volume"}}),
              step("extract", "extract_features",
                   {{"mask", "@node.segment.mask"}}),
              step("classify", "classify_phenotype",
                   {{"measurements", "@node.extract.measurements"}}),
              step("report", "synthesize_report",
                   {{"measurements", "@node.extract.measurements"}})};
  }
  throw std::runtime_error("UnknownTask");
}

Value scalar_from_digest(SemanticType t, const std::string& digest) {
  std::uint64_t bits = fnv1a64(digest);
  switch (t) {
    case SemanticType::FrameIndex:
      return static_cast<std::int64_t>(bits % 30);
    case SemanticType::Scalar:
      return static_cast<double>(bits % 1000) / 10.0;
    default:
      return digest.substr(0, 8);
  }
}

}  // namespace

nlohmann::json FaultConfig::to_json() const {
  nlohmann::json j;
  j["transient_failure_prob"] = transient_failure_prob;
  j["transient_error_code"] = to_string(transient_error_code);
  j["max_transient_per_node"] = max_transient_per_node;
  j["scope_escape_prob"] = scope_escape_prob;
  nlohmann::json hard = nlohmann::json::array();
  for (const auto& [task, pos] : hard_failure_nodes) {
    hard.push_back({{"task", task}, {"position", pos}});
  }
  j["hard_failure_nodes"] = hard;
  return j;
}

FaultConfig FaultConfig::from_json(const nlohmann::json& j) {
  FaultConfig f;
  f.transient_failure_prob = j.value("transient_failure_prob", 0.0);
  if (j.contains("transient_error_code")) {
    f.transient_error_code =
        error_code_from(j.at("transient_error_code").get<std::string>())
            .value_or(ErrorCode::ToolTransientFailure);
  }
  f.max_transient_per_node = j.value("max_transient_per_node", 1);
  f.scope_escape_prob = j.value("scope_escape_prob", 0.0);
  for (const auto& h : j.value("hard_failure_nodes", nlohmann::json::array())) {
    f.hard_failure_nodes.emplace(h.at("task").get<std::string>(),
                                 h.at("position").get<int>());
  }
  if (f.transient_failure_prob < 0 || f.transient_failure_prob > 1 ||
      f.scope_escape_prob < 0 || f.scope_escape_prob > 1) {
    throw std::runtime_error("fault probabilities must lie in [0,1]");
  }
  return f;
}

FaultConfig FaultConfig::from_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open fault config: " + file.string());
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

FaultConfig default_fault_config() {
  FaultConfig f;
  f.transient_failure_prob = 0.05;
  f.max_transient_per_node = 1;
  return f;
}

const std::set<std::string>& allowed_labels() {
  static const std::set<std::string> labels = {
      "low", "intermediate", "high",        // grading
      "normal", "hypertrophic", "dilated",  // cardiac phenotype
  };
  return labels;
}

std::variant<ToolResult, InvokeFailure> invoke(
    const ToolSpec& spec, const std::map<std::string, Value>& bound_args,
    CaseState& state, const FaultConfig& faults, const InvokeContext& ctx) {
  // Injected hard failures never succeed.
  if (faults.hard_failure_nodes.count(
          {std::string(to_string(ctx.task)), ctx.node_position})) {
    return InvokeFailure{ErrorCode::ToolHardFailure, "",
                         "injected hard failure"};
  }

  // Injected sandbox escape: the attempted write is rejected by the
  // scope check before any bytes land.
  if (faults.scope_escape_prob > 0.0 &&
      ctx.stream.uniform("escape", to_string(ctx.task), ctx.node_id,
                         ctx.attempt) < faults.scope_escape_prob) {
    std::filesystem::path attempted =
        state.case_scope / ".." / ("escape_" + ctx.node_id);
    if (auto violation = check_scope(attempted, state)) {
      return InvokeFailure{ErrorCode::ScopeViolation, "", violation->location};
    }
  }

  // Injected transient failures, at most max_transient_per_node each.
  if (faults.transient_failure_prob > 0.0 && ctx.transient_counts) {
    int& count = (*ctx.transient_counts)[ctx.node_id];
    if (count < faults.max_transient_per_node &&
        ctx.stream.uniform("transient", to_string(ctx.task), ctx.node_id,
                           count) < faults.transient_failure_prob) {
      ++count;
      return InvokeFailure{faults.transient_error_code, "",
                           "injected transient failure"};
    }
  }

  // Resolve arguments: apply defaults, verify artifact inputs exist.
  std::map<std::string, Value> resolved;
  std::map<std::string, std::string> input_digests;  // arg -> digest
  for (const auto& [name, aspec] : spec.args) {
    Value value;
    auto it = bound_args.find(name);
    if (it != bound_args.end() && !is_unfilled(it->second)) {
      value = it->second;
    } else if (aspec.default_value) {
      value = *aspec.default_value;
    } else if (aspec.required) {
      return InvokeFailure{ErrorCode::SchemaMismatch, name,
                           "required argument missing at dispatch"};
    } else {
      continue;
    }
    if (is_artifact_type(aspec.type)) {
      if (!value.is_string()) {
        return InvokeFailure{ErrorCode::SchemaMismatch, name,
                             "artifact argument is not a reference"};
      }
      const std::string& id = value.get_ref<const std::string&>();
      auto art = state.artifacts.find(id);
      if (art == state.artifacts.end() || !artifact_present(state, id)) {
        return InvokeFailure{ErrorCode::MissingInput, name,
                             "no such artifact: " + id};
      }
      input_digests[name] = art->second.content_digest;
    } else if (!literal_matches(aspec.type, value)) {
      return InvokeFailure{ErrorCode::InvalidOverride, name,
                           "override does not fit the declared type"};
    }
    resolved[name] = value;
  }

  // Out-of-range overrides on the declared tuning knobs.
  auto range_check = [&](const char* arg, double lo,
                         double hi) -> std::optional<InvokeFailure> {
    auto it = resolved.find(arg);
    if (it == resolved.end() || !it->second.is_number()) return std::nullopt;
    double v = it->second.get<double>();
    if (v < lo || v > hi) {
      return InvokeFailure{ErrorCode::InvalidOverride, arg,
                           "value out of range"};
    }
    return std::nullopt;
  };
  if (spec.name == "denoise_volume") {
    if (auto f = range_check("strength", 0.0, 1.0)) return *f;
  }
  if (spec.name == "superres_volume") {
    if (auto f = range_check("factor", 1.0, 8.0)) return *f;
  }
  if (spec.name == "resample_volume") {
    if (auto f = range_check("spacing", 0.1, 10.0)) return *f;
  }

  // Canonical content basis: tool, sorted args (artifacts as digests).
  nlohmann::json canon_args = nlohmann::json::object();
  for (const auto& [name, value] : resolved) {
    auto d = input_digests.find(name);
    canon_args[name] = d != input_digests.end() ? Value(d->second) : value;
  }

  ToolResult result;
  for (const auto& [field, out_type] : spec.outputs) {
    nlohmann::json content = {
        {"tool", spec.name}, {"field", field}, {"args", canon_args}};

    if (spec.name == "extract_features") {
      const std::string& basis = input_digests.at("mask");
      std::uint64_t bits = fnv1a64(basis);
      content["fields"] = {
          {"ef", 20.0 + static_cast<double>(bits % 500) / 10.0},
          {"mass_g", 60.0 + static_cast<double>((bits >> 16) % 1200) / 10.0},
          {"volume_ml", 40.0 + static_cast<double>((bits >> 32) % 1600) / 10.0},
      };
    } else if (spec.name == "classify_grade" ||
               spec.name == "classify_phenotype") {
      const std::string& meas_id =
          resolved.at("measurements").get_ref<const std::string&>();
      nlohmann::json meas =
          nlohmann::json::parse(state.artifacts.at(meas_id).payload);
      double ef = meas.at("fields").at("ef").get<double>();
      std::string label;
      if (spec.name == "classify_grade") {
        label = ef < 35.0 ? "high" : (ef < 50.0 ? "intermediate" : "low");
      } else {
        label = ef < 35.0 ? "dilated" : (ef > 62.0 ? "hypertrophic" : "normal");
      }
      content["label"] = label;
      content["basis"] = {{"artifact", meas_id},
                          {"digest", input_digests.at("measurements")}};
    } else if (spec.name == "synthesize_report") {
      const std::string& meas_id =
          resolved.at("measurements").get_ref<const std::string&>();
      nlohmann::json meas =
          nlohmann::json::parse(state.artifacts.at(meas_id).payload);
      nlohmann::json evidence = nlohmann::json::array();
      evidence.push_back(meas_id);
      std::string label = "unclassified";
      if (auto it = resolved.find("label"); it != resolved.end()) {
        const std::string& label_id = it->second.get_ref<const std::string&>();
        nlohmann::json lab =
            nlohmann::json::parse(state.artifacts.at(label_id).payload);
        label = lab.at("label").get<std::string>();
        evidence.push_back(label_id);
      }
      content["label"] = label;
      content["evidence"] = evidence;
      content["findings"] = meas.at("fields");
    }

    if (is_artifact_type(out_type)) {
      SimArtifact artifact;
      artifact.semantic_type = out_type;
      artifact.produced_by = ctx.node_id;
      artifact.case_id = state.case_id;
      artifact.payload = content.dump();
      artifact.content_digest = digest_hex(artifact.payload);
      artifact.artifact_id =
          ctx.node_id + "." + field + "." + artifact.content_digest.substr(0, 8);
      write_artifact(state, artifact);
      result.artifacts[field] = std::move(artifact);
    } else {
      Value v = scalar_from_digest(out_type, digest_hex(content.dump()));
      if (spec.name == "frame_select" && field == "frame") {
        result.runtime_exports["ed_frame"] = v;
      }
      result.scalars[field] = v;
    }
  }
  return result;
}

Toolset build_task_toolset(TaskId task) {
  Toolset out;
  out.reference = reference_chain(task);
  std::set<std::string> seen;
  for (const auto& s : out.reference) {
    out.chain.push_back(s.tool_name);
    if (seen.insert(s.tool_name).second) {
      out.specs.push_back(tool_by_name(s.tool_name));
    }
  }
  if (task == TaskId::CardiacRpt) {
    // Workflow utility available to the cardiac pipeline.
    out.specs.push_back(tool_by_name("frame_select"));
  }
  return out;
}

ToolRegistry build_full_registry() {
  ToolRegistry reg;
  for (auto& spec : all_tools()) reg.add(std::move(spec));
  return reg;
}

ToolRegistry registry_from(const std::vector<ToolSpec>& specs) {
  ToolRegistry reg;
  for (const auto& spec : specs) reg.add(spec);
  return reg;
}

}  // namespace bcer
