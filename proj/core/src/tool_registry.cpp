#include "bcer/tool_registry.hpp"

#include <stdexcept>

namespace bcer {

bool value_has_token(const Value& v) {
  if (!v.is_string()) return false;
  return scan_arguments(v.get_ref<const std::string&>()).has_tokens();
}

bool literal_matches(SemanticType t, const Value& v) {
  switch (t) {
    case SemanticType::Scalar:
      return v.is_number();
    case SemanticType::FrameIndex:
      return v.is_number_integer() && v.get<std::int64_t>() >= 0;
    case SemanticType::Text:
      return v.is_string();
    default:
      // Artifact references travel as non-empty id/path strings.
      return v.is_string() && !v.get_ref<const std::string&>().empty();
  }
}

std::vector<CallIssue> validate_call(const ToolSpec& spec,
                                     const std::map<std::string, Value>& args) {
  std::vector<CallIssue> issues;

  for (const auto& [name, aspec] : spec.args) {
    if (aspec.required && !args.count(name)) {
      issues.push_back({ErrorCode::SchemaMismatch, name,
                        "required argument missing"});
    }
  }

  for (const auto& [name, value] : args) {
    auto it = spec.args.find(name);
    if (it == spec.args.end()) {
      issues.push_back({ErrorCode::SchemaMismatch, name,
                        "argument not declared by tool"});
      continue;
    }
    const ArgSpec& aspec = it->second;
    if (is_unfilled(value)) {
      if (aspec.required && !aspec.accepts_reference) {
        issues.push_back({ErrorCode::SchemaMismatch, name,
                          "required argument unfilled"});
      }
      continue;
    }
    if (value_has_token(value)) {
      if (!aspec.accepts_reference) {
        issues.push_back({ErrorCode::SchemaMismatch, name,
                          "token supplied where references are not accepted"});
      }
      continue;
    }
    if (!literal_matches(aspec.type, value)) {
      issues.push_back({ErrorCode::SchemaMismatch, name,
                        "literal does not match " +
                            std::string(to_string(aspec.type))});
    }
  }
  return issues;
}

std::optional<RegistryError> ToolRegistry::add(ToolSpec spec) {
  if (specs_.count(spec.name)) {
    return RegistryError{"DuplicateName: " + spec.name};
  }
  for (const auto& [name, aspec] : spec.args) {
    if (aspec.required && aspec.default_value) {
      return RegistryError{"required argument with default: " + spec.name +
                           "." + name};
    }
  }
  specs_.emplace(spec.name, std::move(spec));
  return std::nullopt;
}

const ToolSpec* ToolRegistry::find(std::string_view name) const {
  auto it = specs_.find(name);
  return it == specs_.end() ? nullptr : &it->second;
}

std::vector<std::string> ToolRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(specs_.size());
  for (const auto& [name, _] : specs_) out.push_back(name);
  return out;
}

nlohmann::json tool_spec_to_json(const ToolSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;
  j["side_effect"] =
      spec.side_effect == ToolSpec::SideEffect::Pure ? "Pure" : "WritesArtifact";
  nlohmann::json args = nlohmann::json::object();
  for (const auto& [name, a] : spec.args) {
    nlohmann::json aj;
    aj["type"] = to_string(a.type);
    aj["required"] = a.required;
    aj["accepts_reference"] = a.accepts_reference;
    if (a.default_value) aj["default"] = *a.default_value;
    args[name] = aj;
  }
  j["args"] = args;
  nlohmann::json outs = nlohmann::json::object();
  for (const auto& [name, t] : spec.outputs) outs[name] = to_string(t);
  j["outputs"] = outs;
  nlohmann::json errs = nlohmann::json::array();
  for (auto e : spec.error_codes) errs.push_back(std::string(to_string(e)));
  j["error_codes"] = errs;
  return j;
}

ToolSpec tool_spec_from_json(const nlohmann::json& j) {
  ToolSpec spec;
  spec.name = j.at("name").get<std::string>();
  if (j.value("side_effect", "WritesArtifact") == std::string("Pure")) {
    spec.side_effect = ToolSpec::SideEffect::Pure;
  }
  for (const auto& [name, aj] : j.at("args").items()) {
    ArgSpec a;
    auto t = semantic_type_from(aj.at("type").get<std::string>());
    if (!t) throw std::runtime_error("unknown semantic type in tool spec");
    a.type = *t;
    a.required = aj.value("required", true);
    a.accepts_reference = aj.value("accepts_reference", false);
    if (aj.contains("default")) a.default_value = aj.at("default");
    spec.args.emplace(name, std::move(a));
  }
  for (const auto& [name, tj] : j.at("outputs").items()) {
    auto t = semantic_type_from(tj.get<std::string>());
    if (!t) throw std::runtime_error("unknown semantic type in tool spec");
    spec.outputs.emplace(name, *t);
  }
  for (const auto& ej : j.value("error_codes", nlohmann::json::array())) {
    if (auto e = error_code_from(ej.get<std::string>())) {
      spec.error_codes.insert(*e);
    }
  }
  return spec;
}

nlohmann::json ToolRegistry::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [_, spec] : specs_) arr.push_back(tool_spec_to_json(spec));
  return arr;
}

ToolRegistry ToolRegistry::from_json(const nlohmann::json& j) {
  ToolRegistry reg;
  for (const auto& sj : j) {
    if (auto err = reg.add(tool_spec_from_json(sj))) {
      throw std::runtime_error(err->detail);
    }
  }
  return reg;
}

}  // namespace bcer
