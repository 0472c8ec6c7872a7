#include <cmath>

#include "bcer/contract.hpp"
#include "bcer/sim_tools.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bcer;
using bcer_test::TempDir;
using bcer_test::make_contract;

namespace {

struct Rig {
  TempDir dir;
  TaskContract contract;
  CaseState state;
  ToolRegistry registry;
  std::map<std::string, int> transient_counts;

  explicit Rig(TaskId task, const std::string& tag)
      : dir(tag),
        contract(make_contract(task)),
        state(materialize_case(contract, "t_s1", dir.path / "case")),
        registry(registry_from(build_task_toolset(task).specs)) {
    init_case_dirs(state);
  }

  InvokeContext ctx(const std::string& node, int position, std::uint64_t seed,
                    int attempt = 0) {
    InvokeContext c;
    c.task = contract.task;
    c.node_id = node;
    c.node_position = position;
    c.attempt = attempt;
    c.stream = FaultStream(seed);
    c.transient_counts = &transient_counts;
    return c;
  }
};

ToolResult ok(std::variant<ToolResult, InvokeFailure> r) {
  REQUIRE(std::holds_alternative<ToolResult>(r));
  return std::get<ToolResult>(r);
}

InvokeFailure fail(std::variant<ToolResult, InvokeFailure> r) {
  REQUIRE(std::holds_alternative<InvokeFailure>(r));
  return std::get<InvokeFailure>(r);
}

}  // namespace

TEST_CASE("invoke is deterministic and digest-chained") {
  Rig rig(TaskId::Denoise, "det");
  FaultConfig no_faults;

  Value input = rig.state.inputs.at("input");
  auto first = ok(invoke(*rig.registry.find("load_volume"), {{"input", input}},
                         rig.state, no_faults, rig.ctx("load", 0, 1)));
  auto second = ok(invoke(*rig.registry.find("load_volume"), {{"input", input}},
                          rig.state, no_faults, rig.ctx("load", 0, 1)));
  REQUIRE(first.artifacts.count("volume"));
  CHECK(first.artifacts.at("volume").content_digest ==
        second.artifacts.at("volume").content_digest);

  auto dn = ok(invoke(*rig.registry.find("denoise_volume"),
                      {{"input", first.artifacts.at("volume").artifact_id}},
                      rig.state, no_faults, rig.ctx("denoise", 1, 1)));
  // the downstream digest depends on the upstream digest, not the id text
  CHECK(dn.artifacts.at("volume").content_digest !=
        first.artifacts.at("volume").content_digest);
  nlohmann::json payload =
      nlohmann::json::parse(dn.artifacts.at("volume").payload);
  CHECK(payload.at("args").at("input") ==
        first.artifacts.at("volume").content_digest);
  CHECK(payload.at("args").at("strength") == 0.5);  // default applied
}

TEST_CASE("missing artifact input fails with MissingInput") {
  Rig rig(TaskId::Denoise, "missing");
  auto f = fail(invoke(*rig.registry.find("denoise_volume"),
                       {{"input", "/data/fabricated/vol.nii"}}, rig.state,
                       FaultConfig{}, rig.ctx("denoise", 1, 1)));
  CHECK(f.code == ErrorCode::MissingInput);
  CHECK(f.arg == "input");
}

TEST_CASE("out-of-range overrides fail with InvalidOverride") {
  Rig rig(TaskId::Denoise, "range");
  Value input = rig.state.inputs.at("input");
  auto loaded = ok(invoke(*rig.registry.find("load_volume"), {{"input", input}},
                          rig.state, FaultConfig{}, rig.ctx("load", 0, 1)));
  auto f = fail(invoke(
      *rig.registry.find("denoise_volume"),
      {{"input", loaded.artifacts.at("volume").artifact_id}, {"strength", 7.0}},
      rig.state, FaultConfig{}, rig.ctx("denoise", 1, 1)));
  CHECK(f.code == ErrorCode::InvalidOverride);
  CHECK(f.arg == "strength");
}

TEST_CASE("hard failures always fail, transients respect the per-node cap") {
  Rig rig(TaskId::Denoise, "faults");
  Value input = rig.state.inputs.at("input");

  FaultConfig hard;
  hard.hard_failure_nodes.insert({"Denoise", 0});
  auto f = fail(invoke(*rig.registry.find("load_volume"), {{"input", input}},
                       rig.state, hard, rig.ctx("load", 0, 1)));
  CHECK(f.code == ErrorCode::ToolHardFailure);

  FaultConfig transient;
  transient.transient_failure_prob = 1.0;
  auto t = fail(invoke(*rig.registry.find("load_volume"), {{"input", input}},
                       rig.state, transient, rig.ctx("load", 0, 1)));
  CHECK(t.code == ErrorCode::ToolTransientFailure);
  // cap reached: the retry goes through
  ok(invoke(*rig.registry.find("load_volume"), {{"input", input}}, rig.state,
            transient, rig.ctx("load", 0, 1, 1)));
}

TEST_CASE("transient rate matches the configured probability") {
  // Monte-Carlo against the keyed stream: one Bernoulli draw per seed.
  Rig rig(TaskId::Denoise, "rate");
  Value input = rig.state.inputs.at("input");
  FaultConfig faults;
  faults.transient_failure_prob = 0.3;
  const int n = 4000;
  int failures = 0;
  for (int seed = 1; seed <= n; ++seed) {
    rig.transient_counts.clear();
    auto r = invoke(*rig.registry.find("load_volume"), {{"input", input}},
                    rig.state, faults, rig.ctx("load", 0, seed));
    if (std::holds_alternative<InvokeFailure>(r)) ++failures;
  }
  double rate = static_cast<double>(failures) / n;
  double se = std::sqrt(0.3 * 0.7 / n);
  CHECK(std::abs(rate - 0.3) < 3 * se);
}

TEST_CASE("scope escapes are rejected and nothing is written") {
  Rig rig(TaskId::Denoise, "escape");
  Value input = rig.state.inputs.at("input");
  FaultConfig faults;
  faults.scope_escape_prob = 1.0;
  auto artifacts_before = rig.state.artifacts.size();
  auto f = fail(invoke(*rig.registry.find("load_volume"), {{"input", input}},
                       rig.state, faults, rig.ctx("load", 0, 1)));
  CHECK(f.code == ErrorCode::ScopeViolation);
  CHECK(rig.state.artifacts.size() == artifacts_before);
}

TEST_CASE("classification follows the measurement features") {
  Rig rig(TaskId::BrainGrade, "classify");
  FaultConfig no_faults;
  Value input = rig.state.inputs.at("input");
  auto loaded = ok(invoke(*rig.registry.find("load_volume"), {{"input", input}},
                          rig.state, no_faults, rig.ctx("load", 0, 1)));
  auto seg = ok(invoke(*rig.registry.find("segment_volume"),
                       {{"volume", loaded.artifacts.at("volume").artifact_id}},
                       rig.state, no_faults, rig.ctx("segment", 2, 1)));
  auto meas = ok(invoke(*rig.registry.find("extract_features"),
                        {{"mask", seg.artifacts.at("mask").artifact_id}},
                        rig.state, no_faults, rig.ctx("extract", 3, 1)));
  const auto& table = meas.artifacts.at("measurements");
  double ef = nlohmann::json::parse(table.payload).at("fields").at("ef");
  auto cls = ok(invoke(*rig.registry.find("classify_grade"),
                       {{"measurements", table.artifact_id}}, rig.state,
                       no_faults, rig.ctx("classify", 4, 1)));
  std::string label = nlohmann::json::parse(
                          cls.artifacts.at("label").payload)["label"];
  CHECK(allowed_labels().count(label));
  if (ef < 35.0) {
    CHECK(label == "high");
  } else if (ef < 50.0) {
    CHECK(label == "intermediate");
  } else {
    CHECK(label == "low");
  }
}

TEST_CASE("task toolsets cover their reference chains") {
  for (TaskId task : kAllTasks) {
    Toolset ts = build_task_toolset(task);
    std::set<std::string> names;
    for (const auto& spec : ts.specs) names.insert(spec.name);
    for (const auto& step : ts.reference) {
      CAPTURE(to_string(task));
      CHECK(names.count(step.tool_name));
    }
    bool long_chain = is_long_chain(task);
    CHECK(ts.reference.size() >= (long_chain ? 5u : 1u));
    CHECK(ts.reference.size() <= (long_chain ? 7u : 3u));
  }
  CHECK(build_task_toolset(TaskId::CardiacRpt).reference.size() == 6);
}

TEST_CASE("fault config round-trips through json") {
  FaultConfig f;
  f.transient_failure_prob = 0.07;
  f.scope_escape_prob = 0.01;
  f.max_transient_per_node = 2;
  f.hard_failure_nodes.insert({"SuperRes", 1});
  FaultConfig back = FaultConfig::from_json(f.to_json());
  CHECK(back.transient_failure_prob == f.transient_failure_prob);
  CHECK(back.scope_escape_prob == f.scope_escape_prob);
  CHECK(back.max_transient_per_node == f.max_transient_per_node);
  CHECK(back.hard_failure_nodes == f.hard_failure_nodes);
  CHECK_THROWS(FaultConfig::from_json({{"transient_failure_prob", 1.5}}));
}
