#include "bcer/artifact_store.hpp"

#include <fstream>
#include <stdexcept>

namespace bcer {

namespace fs = std::filesystem;

std::string_view to_string(NodeState s) {
  switch (s) {
    case NodeState::Pending: return "Pending";
    case NodeState::Ready: return "Ready";
    case NodeState::Running: return "Running";
    case NodeState::Succeeded: return "Succeeded";
    case NodeState::Failed: return "Failed";
    case NodeState::Repaired: return "Repaired";
    case NodeState::Abandoned: return "Abandoned";
  }
  return "?";
}

std::optional<NodeState> node_state_from(std::string_view s) {
  for (auto v : {NodeState::Pending, NodeState::Ready, NodeState::Running,
                 NodeState::Succeeded, NodeState::Failed, NodeState::Repaired,
                 NodeState::Abandoned}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::string_view to_string(BindError::Kind k) {
  switch (k) {
    case BindError::Kind::UnknownField: return "UnknownField";
    case BindError::Kind::ProducerNotSucceeded: return "ProducerNotSucceeded";
    case BindError::Kind::ArtifactMissing: return "ArtifactMissing";
  }
  return "?";
}

void init_case_dirs(const CaseState& state) {
  fs::create_directories(state.artifacts_dir());
}

void write_artifact(CaseState& state, const SimArtifact& artifact) {
  // Artifact ids are flat names; anything path-like is an escape attempt.
  if (artifact.artifact_id.empty() ||
      artifact.artifact_id.find('/') != std::string::npos ||
      artifact.artifact_id.find("..") != std::string::npos) {
    throw std::runtime_error("scope violation writing artifact: " +
                             artifact.artifact_id);
  }
  fs::path target = state.artifacts_dir() / artifact.artifact_id;
  if (auto violation = check_scope(target, state)) {
    throw std::runtime_error("scope violation writing artifact: " +
                             violation->location);
  }
  {
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    out << artifact.payload;
  }
  {
    std::ofstream meta(target.string() + ".meta.json", std::ios::trunc);
    meta << artifact_meta_to_json(artifact).dump();
  }
  state.artifacts[artifact.artifact_id] = artifact;
}

bool artifact_present(const CaseState& state, const std::string& artifact_id) {
  fs::path target = state.artifacts_dir() / artifact_id;
  std::error_code ec;
  return fs::is_regular_file(target, ec) &&
         fs::is_regular_file(target.string() + ".meta.json", ec);
}

std::optional<std::string> read_artifact_payload(const CaseState& state,
                                                 const std::string& artifact_id) {
  fs::path target = state.artifacts_dir() / artifact_id;
  std::ifstream in(target, std::ios::binary);
  if (!in) return std::nullopt;
  std::string payload((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return payload;
}

namespace {

BindResult check_artifact_value(const Value& v, const CaseState& state) {
  if (v.is_string()) {
    const std::string& s = v.get_ref<const std::string&>();
    if (state.artifacts.count(s) && !artifact_present(state, s)) {
      return BindError{BindError::Kind::ArtifactMissing, s};
    }
  }
  return v;
}

}  // namespace

BindResult bind(const SymbolicToken& token, const CaseState& state) {
  switch (token.kind) {
    case TokenKind::Case: {
      auto it = state.inputs.find(token.field_path_joined());
      if (it == state.inputs.end()) {
        return BindError{BindError::Kind::UnknownField,
                         "@case." + token.field_path_joined()};
      }
      return check_artifact_value(it->second, state);
    }
    case TokenKind::Seq: {
      if (token.field_path.size() < 2) {
        return BindError{BindError::Kind::UnknownField, render_token(token)};
      }
      auto seq = state.sequences.find(token.field_path[0]);
      if (seq == state.sequences.end()) {
        return BindError{BindError::Kind::UnknownField, render_token(token)};
      }
      std::string rest;
      for (std::size_t i = 1; i < token.field_path.size(); ++i) {
        if (i > 1) rest += '.';
        rest += token.field_path[i];
      }
      auto it = seq->second.find(rest);
      if (it == seq->second.end()) {
        return BindError{BindError::Kind::UnknownField, render_token(token)};
      }
      return check_artifact_value(it->second, state);
    }
    case TokenKind::Runtime: {
      auto it = state.runtime_values.find(token.field_path_joined());
      if (it == state.runtime_values.end()) {
        return BindError{BindError::Kind::UnknownField, render_token(token)};
      }
      return it->second;
    }
    case TokenKind::Node: {
      auto st = state.status.find(token.node_id);
      if (st == state.status.end()) {
        // No such node at all: a dangling reference, not a sequencing issue.
        return BindError{BindError::Kind::UnknownField, render_token(token)};
      }
      if (st->second.state != NodeState::Succeeded) {
        return BindError{BindError::Kind::ProducerNotSucceeded, token.node_id};
      }
      auto outs = state.node_outputs.find(token.node_id);
      if (outs == state.node_outputs.end()) {
        return BindError{BindError::Kind::UnknownField, render_token(token)};
      }
      auto it = outs->second.find(token.field_path_joined());
      if (it == outs->second.end()) {
        return BindError{BindError::Kind::UnknownField, render_token(token)};
      }
      // Ids of artifact-typed outputs carry the node.field prefix; those
      // must be verifiably present on storage before they are handed out.
      if (it->second.is_string()) {
        const std::string& sid = it->second.get_ref<const std::string&>();
        const std::string prefix =
            token.node_id + "." + token.field_path_joined() + ".";
        if (sid.rfind(prefix, 0) == 0 && !artifact_present(state, sid)) {
          return BindError{BindError::Kind::ArtifactMissing, sid};
        }
      }
      return check_artifact_value(it->second, state);
    }
  }
  return BindError{BindError::Kind::UnknownField, render_token(token)};
}

std::variant<std::map<std::string, Value>, BindFailure> bind_all(
    const std::map<std::string, Value>& args, const CaseState& state) {
  std::map<std::string, Value> bound;
  for (const auto& [name, value] : args) {
    if (!value.is_string()) {
      bound[name] = value;
      continue;
    }
    TokenScan scan = scan_arguments(value.get_ref<const std::string&>());
    if (!scan.has_tokens()) {
      bound[name] = value;
      continue;
    }
    if (scan.single_token()) {
      auto r = bind(std::get<SymbolicToken>(scan.parts[0]), state);
      if (std::holds_alternative<BindError>(r)) {
        return BindFailure{name, value.get<std::string>(),
                           std::get<BindError>(r)};
      }
      bound[name] = std::get<Value>(r);
      continue;
    }
    // Embedded tokens interpolate as text.
    std::string text;
    for (const auto& part : scan.parts) {
      if (std::holds_alternative<std::string>(part)) {
        text += std::get<std::string>(part);
        continue;
      }
      const auto& tok = std::get<SymbolicToken>(part);
      auto r = bind(tok, state);
      if (std::holds_alternative<BindError>(r)) {
        return BindFailure{name, render_token(tok), std::get<BindError>(r)};
      }
      const Value& v = std::get<Value>(r);
      text += v.is_string() ? v.get<std::string>() : v.dump();
    }
    bound[name] = text;
  }
  return bound;
}

std::optional<ScopeViolationInfo> check_scope(const fs::path& location,
                                              const CaseState& state) {
  fs::path scope = fs::absolute(state.case_scope).lexically_normal();
  fs::path target = location.is_absolute()
                        ? location.lexically_normal()
                        : fs::absolute(location).lexically_normal();
  auto sit = scope.begin();
  auto tit = target.begin();
  for (; sit != scope.end(); ++sit, ++tit) {
    if (sit->empty()) continue;  // trailing slash component
    if (tit == target.end() || *sit != *tit) {
      return ScopeViolationInfo{location.string()};
    }
  }
  return std::nullopt;
}

void save_state_record(const CaseState& state) {
  nlohmann::json j;
  j["case_id"] = state.case_id;
  j["inputs"] = state.inputs;
  j["sequences"] = state.sequences;
  j["runtime_values"] = state.runtime_values;
  nlohmann::json arts = nlohmann::json::array();
  for (const auto& [_, a] : state.artifacts) {
    arts.push_back(artifact_meta_to_json(a));
  }
  j["artifacts"] = arts;
  nlohmann::json outs = nlohmann::json::object();
  for (const auto& [node, fields] : state.node_outputs) outs[node] = fields;
  j["node_outputs"] = outs;
  nlohmann::json status = nlohmann::json::object();
  for (const auto& [node, st] : state.status) {
    status[node] = {{"state", to_string(st.state)},
                    {"error", to_string(st.error)},
                    {"dispatch_count", st.dispatch_count}};
  }
  j["status"] = status;
  std::ofstream out(state.state_record_path(), std::ios::trunc);
  out << j.dump(2);
}

CaseState load_state_record(const fs::path& case_scope) {
  std::ifstream in(case_scope / "state.record");
  if (!in) throw std::runtime_error("missing state.record in " + case_scope.string());
  nlohmann::json j;
  in >> j;

  CaseState state;
  state.case_id = j.at("case_id").get<std::string>();
  state.case_scope = case_scope;
  state.inputs = j.at("inputs").get<std::map<std::string, Value>>();
  state.sequences =
      j.at("sequences").get<std::map<std::string, std::map<std::string, Value>>>();
  state.runtime_values = j.at("runtime_values").get<std::map<std::string, Value>>();
  for (const auto& aj : j.at("artifacts")) {
    SimArtifact a = artifact_from_meta_json(aj);
    if (auto payload = read_artifact_payload(state, a.artifact_id)) {
      a.payload = *payload;
    }
    state.artifacts.emplace(a.artifact_id, std::move(a));
  }
  for (const auto& [node, fields] : j.at("node_outputs").items()) {
    state.node_outputs[node] = fields.get<std::map<std::string, Value>>();
  }
  for (const auto& [node, st] : j.at("status").items()) {
    NodeStatus ns;
    ns.state = node_state_from(st.at("state").get<std::string>())
                   .value_or(NodeState::Pending);
    ns.error = error_code_from(st.at("error").get<std::string>())
                   .value_or(ErrorCode::MissingInput);
    ns.dispatch_count = st.value("dispatch_count", 0);
    state.status[node] = ns;
  }
  return state;
}

}  // namespace bcer
