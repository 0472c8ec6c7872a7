#include "bcer/sim_tools.hpp"
#include "bcer/tool_registry.hpp"
#include "doctest.h"

using namespace bcer;

namespace {

ToolSpec demo_tool() {
  ToolSpec t;
  t.name = "demo";
  ArgSpec input;
  input.type = SemanticType::VolumeRef;
  input.required = true;
  input.accepts_reference = true;
  t.args["input"] = input;
  ArgSpec strength;
  strength.type = SemanticType::Scalar;
  strength.required = false;
  strength.default_value = 0.5;
  t.args["strength"] = strength;
  t.outputs["volume"] = SemanticType::VolumeRef;
  return t;
}

bool has_issue(const std::vector<CallIssue>& issues, ErrorCode code) {
  for (const auto& i : issues) {
    if (i.code == code) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("well-formed calls validate cleanly") {
  ToolSpec t = demo_tool();
  CHECK(validate_call(t, {{"input", "@node.load.volume"}}).empty());
  CHECK(validate_call(t, {{"input", "vol.abc123"}, {"strength", 0.7}}).empty());
}

TEST_CASE("missing required argument is reported") {
  auto issues = validate_call(demo_tool(), {{"strength", 0.7}});
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].code == ErrorCode::SchemaMismatch);
  CHECK(issues[0].arg == "input");
}

TEST_CASE("undeclared argument is reported") {
  auto issues = validate_call(demo_tool(),
                              {{"input", "x"}, {"mystery", 1}});
  CHECK(has_issue(issues, ErrorCode::SchemaMismatch));
}

TEST_CASE("token where references are not accepted") {
  auto issues = validate_call(
      demo_tool(), {{"input", "x"}, {"strength", "@node.load.volume"}});
  REQUIRE_FALSE(issues.empty());
  CHECK(issues[0].arg == "strength");
}

TEST_CASE("literal type mismatches") {
  ToolSpec t = demo_tool();
  CHECK_FALSE(validate_call(t, {{"input", 42}}).empty());
  CHECK_FALSE(
      validate_call(t, {{"input", "x"}, {"strength", "fast"}}).empty());
  CHECK_FALSE(validate_call(t, {{"input", ""}}).empty());
}

TEST_CASE("unfilled optional is tolerated, unfilled required non-ref is not") {
  ToolSpec t = demo_tool();
  CHECK(validate_call(t, {{"input", "x"}, {"strength", kUnfilled}}).empty());
  t.args["input"].accepts_reference = false;
  CHECK_FALSE(validate_call(t, {{"input", kUnfilled}}).empty());
}

TEST_CASE("literal_matches semantics") {
  CHECK(literal_matches(SemanticType::VolumeRef, "anything.nonempty"));
  CHECK_FALSE(literal_matches(SemanticType::VolumeRef, ""));
  CHECK(literal_matches(SemanticType::Scalar, 1.25));
  CHECK_FALSE(literal_matches(SemanticType::Scalar, "1.25"));
  CHECK(literal_matches(SemanticType::FrameIndex, 7));
  CHECK(literal_matches(SemanticType::Text, "standard"));
}

TEST_CASE("registry rejects duplicates and bad specs") {
  ToolRegistry reg;
  CHECK_FALSE(reg.add(demo_tool()).has_value());
  auto dup = reg.add(demo_tool());
  REQUIRE(dup.has_value());
  CHECK(dup->detail.find("demo") != std::string::npos);

  ToolSpec bad = demo_tool();
  bad.name = "bad";
  bad.args["strength"].required = true;  // required with a default
  CHECK(reg.add(bad).has_value());
}

TEST_CASE("registry lookup and listing") {
  ToolRegistry reg = build_full_registry();
  CHECK(reg.find("segment_volume") != nullptr);
  CHECK(reg.find("no_such_tool") == nullptr);
  CHECK(reg.size() == 14);
  CHECK(reg.names().size() == 14);
}

TEST_CASE("registry and specs round-trip through json") {
  ToolRegistry reg = build_full_registry();
  ToolRegistry back = ToolRegistry::from_json(reg.to_json());
  REQUIRE(back.size() == reg.size());
  for (const auto& name : reg.names()) {
    const ToolSpec* a = reg.find(name);
    const ToolSpec* b = back.find(name);
    REQUIRE(b != nullptr);
    CHECK(a->args.size() == b->args.size());
    CHECK(a->outputs == b->outputs);
    CHECK(a->error_codes == b->error_codes);
    for (const auto& [arg, spec] : a->args) {
      REQUIRE(b->args.count(arg));
      CHECK(spec.type == b->args.at(arg).type);
      CHECK(spec.required == b->args.at(arg).required);
      CHECK(spec.default_value == b->args.at(arg).default_value);
      CHECK(spec.accepts_reference == b->args.at(arg).accepts_reference);
    }
  }
}
