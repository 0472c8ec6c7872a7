#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bcer/token.hpp"
#include "bcer/types.hpp"
#include "json.hpp"

namespace bcer {

/// Argument and output values are carried as JSON: numbers for scalars,
/// strings for text, artifact ids, and token texts.
using Value = nlohmann::json;

/// Sentinel for a sketch argument the planner deliberately left open.
inline const std::string kUnfilled = "__UNFILLED__";

inline bool is_unfilled(const Value& v) {
  return v.is_string() && v.get_ref<const std::string&>() == kUnfilled;
}

struct ArgSpec {
  SemanticType type = SemanticType::Text;
  bool required = true;
  std::optional<Value> default_value;  // absent when required
  bool accepts_reference = false;      // may a SymbolicToken supply this arg
};

struct ToolSpec {
  enum class SideEffect { Pure, WritesArtifact };

  std::string name;
  std::map<std::string, ArgSpec> args;
  std::map<std::string, SemanticType> outputs;
  std::set<ErrorCode> error_codes;
  SideEffect side_effect = SideEffect::WritesArtifact;
};

/// One validation defect; validation reports issues, it never throws
/// and never dispatches the tool.
struct CallIssue {
  ErrorCode code = ErrorCode::SchemaMismatch;
  std::string arg;
  std::string detail;
};

/// True when the string value carries at least one symbolic token.
bool value_has_token(const Value& v);

/// True when the literal (non-token) value matches the semantic type.
/// Artifact-typed slots accept any non-empty string: whether the string
/// names a real artifact is a binding/dispatch question, not a schema one.
bool literal_matches(SemanticType t, const Value& v);

/// Checks an argument map against a spec: required args present, no
/// undeclared names, literal types match, tokens only where allowed.
std::vector<CallIssue> validate_call(const ToolSpec& spec,
                                     const std::map<std::string, Value>& args);

struct RegistryError {
  std::string detail;
};

class ToolRegistry {
 public:
  /// Fails with DuplicateName when the tool is already registered.
  std::optional<RegistryError> add(ToolSpec spec);

  const ToolSpec* find(std::string_view name) const;
  std::vector<std::string> names() const;
  std::size_t size() const { return specs_.size(); }

  nlohmann::json to_json() const;
  static ToolRegistry from_json(const nlohmann::json& j);

 private:
  std::map<std::string, ToolSpec, std::less<>> specs_;
};

nlohmann::json tool_spec_to_json(const ToolSpec& spec);
ToolSpec tool_spec_from_json(const nlohmann::json& j);

}  // namespace bcer
