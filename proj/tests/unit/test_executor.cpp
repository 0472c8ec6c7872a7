#include "bcer/executor.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bcer;
using bcer_test::TempDir;
using bcer_test::make_contract;

namespace {

struct Run {
  TempDir dir;
  TaskContract contract;
  ToolRegistry registry;
  WorkflowGraph graph;
  CaseState state;
  TraceWriter trace;
  CaseOutcome outcome;

  Run(TaskId task, const std::string& tag, RunConstraints rc = {},
      PlanSketch (*mutate)(PlanSketch) = nullptr)
      : dir(tag),
        contract(make_contract(task)),
        registry(registry_from(build_task_toolset(task).specs)),
        graph([&] {
          PlanSketch sketch =
              surrogate_brain(contract, PlannerPolicy{}, FaultStream(1), 0);
          if (mutate) sketch = mutate(std::move(sketch));
          auto r = compile(sketch, registry, contract);
          REQUIRE(std::holds_alternative<WorkflowGraph>(r));
          return std::get<WorkflowGraph>(r);
        }()),
        state(materialize_case(contract, "x_s1", dir.path / "case")),
        trace((init_case_dirs(state), state.trace_path()), "x_s1") {
    outcome = run_graph(graph, registry, contract, state, trace, rc);
  }
};

int count_events(const std::vector<TraceEvent>& events, EventKind kind) {
  int n = 0;
  for (const auto& e : events) n += e.kind == kind;
  return n;
}

}  // namespace

TEST_CASE("zero-fault run succeeds end to end") {
  Run run(TaskId::CardiacRpt, "zf");
  CHECK(run.outcome.all_required_succeeded);
  CHECK(run.outcome.score.sr == 1);
  CHECK(run.outcome.score.tcr == doctest::Approx(1.0));
  CHECK(run.outcome.total_dispatches == 6);
  const auto& events = run.trace.events();
  CHECK(count_events(events, EventKind::NodeSucceeded) == 6);
  CHECK(count_events(events, EventKind::CaseFinished) == 1);
  for (const auto& [id, st] : run.outcome.final_states) {
    CHECK(st == NodeState::Succeeded);
  }
}

TEST_CASE("transient failures are retried as-is and succeed") {
  RunConstraints rc;
  rc.faults.transient_failure_prob = 1.0;  // capped at one per node
  Run run(TaskId::Denoise, "transient", rc);
  CHECK(run.outcome.all_required_succeeded);
  const auto& events = run.trace.events();
  CHECK(count_events(events, EventKind::NodeFailed) == 2);
  CHECK(count_events(events, EventKind::RepairApplied) == 2);
  CHECK(count_events(events, EventKind::NodeSucceeded) == 2);
  // each node: dispatch, fail, repair, redispatch
  CHECK(run.outcome.total_dispatches == 4);
}

TEST_CASE("hard failures abandon the node and block dependents") {
  RunConstraints rc;
  rc.faults.hard_failure_nodes.insert({"BrainGrade", 2});  // "segment"
  Run run(TaskId::BrainGrade, "hard", rc);
  CHECK_FALSE(run.outcome.all_required_succeeded);
  CHECK(run.outcome.score.sr == 0);
  CHECK(run.outcome.final_states.at("load") == NodeState::Succeeded);
  CHECK(run.outcome.final_states.at("denoise") == NodeState::Succeeded);
  CHECK(run.outcome.final_states.at("segment") == NodeState::Abandoned);
  CHECK(run.outcome.final_states.at("extract") == NodeState::Abandoned);
  CHECK(run.outcome.final_states.at("classify") == NodeState::Abandoned);
  // partial credit only for the validated prefix
  CHECK(run.outcome.score.tcr == doctest::Approx(2.0 / 5.0));
}

TEST_CASE("dispatches per node never exceed one plus the repair budgets") {
  RunConstraints rc;
  rc.faults.hard_failure_nodes.insert({"Denoise", 1});
  Run run(TaskId::Denoise, "budget", rc);
  CHECK_FALSE(run.outcome.all_required_succeeded);
  for (const auto& [id, status] : run.state.status) {
    CHECK(status.dispatch_count <= 1 + 2 + 1);
  }
  // hard failures have no deterministic rule: give up without retrying
  CHECK(run.state.status.at("denoise").dispatch_count == 1);
  CHECK(count_events(run.trace.events(), EventKind::NodeAbandoned) == 1);
}

TEST_CASE("invalid override is repaired by dropping the override") {
  RunConstraints rc;
  Run run(TaskId::Denoise, "override", rc, +[](PlanSketch s) {
    s.steps[1].partial_args["strength"] = 99.0;  // out of range at dispatch
    return s;
  });
  CHECK(run.outcome.all_required_succeeded);
  const auto& events = run.trace.events();
  bool removed = false;
  for (const auto& e : events) {
    if (e.kind == EventKind::RepairApplied &&
        e.payload["edits"][0]["action"] == "RemoveOverride") {
      removed = true;
    }
  }
  CHECK(removed);
  bool unrepaired_denoise =
      run.graph.nodes.count("denoise") != 0 &&
      run.state.status.at("denoise").deterministic_repairs_used == 0;
  CHECK_FALSE(unrepaired_denoise);
}

TEST_CASE("missing stored artifact re-executes its producer only") {
  TempDir dir("rebuild");
  TaskContract contract = make_contract(TaskId::BrainGrade);
  ToolRegistry registry = registry_from(build_task_toolset(contract.task).specs);
  PlanSketch sketch =
      surrogate_brain(contract, PlannerPolicy{}, FaultStream(1), 0);
  auto r = compile(sketch, registry, contract);
  WorkflowGraph graph = std::get<WorkflowGraph>(r);

  CaseState state = materialize_case(contract, "x_s1", dir.path / "case");
  init_case_dirs(state);
  TraceWriter trace(state.trace_path(), "x_s1");

  // run the prefix by hand: load, denoise, segment succeed
  RunConstraints rc;
  CaseOutcome full = run_graph(graph, registry, contract, state, trace, rc);
  REQUIRE(full.all_required_succeeded);

  // now corrupt storage: delete segment's mask payload and re-run the
  // suffix through a fresh executor pass
  std::map<std::string, std::string> digests_before;
  for (const auto& [id, art] : state.artifacts) {
    digests_before[id] = art.content_digest;
  }
  std::string mask_id = state.node_outputs.at("segment").at("mask");
  std::filesystem::remove(state.artifacts_dir() / mask_id);

  CaseState resumed = load_state_record(state.case_scope);
  resumed.status.at("extract") = NodeStatus{};
  resumed.status.at("classify") = NodeStatus{};
  resumed.node_outputs.erase("extract");
  resumed.node_outputs.erase("classify");
  TraceWriter trace2(state.case_scope / "trace_resume.log", "x_s1");
  CaseOutcome again = run_graph(graph, registry, contract, resumed, trace2, rc);

  CHECK(again.final_states.at("extract") == NodeState::Succeeded);
  CHECK(again.final_states.at("classify") == NodeState::Succeeded);
  // the producer was re-run...
  CHECK(resumed.status.at("segment").dispatch_count >
        state.status.at("segment").dispatch_count - 1);
  // ...and every artifact digest is unchanged: repair stayed local
  for (const auto& [id, art] : resumed.artifacts) {
    if (digests_before.count(id)) {
      CHECK(art.content_digest == digests_before.at(id));
    }
  }
}

TEST_CASE("trace replays to the recorded final statuses") {
  RunConstraints rc;
  rc.faults.transient_failure_prob = 0.5;
  for (int seed = 1; seed <= 10; ++seed) {
    RunConstraints seeded = rc;
    seeded.seed = seed;
    Run run(TaskId::ProstateRpt, "replay" + std::to_string(seed), seeded);
    ReplaySummary replay =
        replay_trace(read_trace(run.state.trace_path()));
    CHECK(replay.finished);
    for (const auto& [id, st] : run.outcome.final_states) {
      CHECK(replay.final_states.at(id) == st);
    }
    for (const auto& [node, outs] : run.state.node_outputs) {
      for (const auto& [field, value] : outs) {
        if (!value.is_string()) continue;
        auto art = run.state.artifacts.find(value.get<std::string>());
        if (art == run.state.artifacts.end()) continue;
        CHECK(replay.digests.at(node).at(field) == art->second.content_digest);
      }
    }
  }
}

TEST_CASE("reflector rule table decisions") {
  TempDir dir("rules");
  TaskContract contract = make_contract(TaskId::ProstateRpt);
  ToolRegistry registry = registry_from(build_task_toolset(contract.task).specs);
  PlanSketch sketch =
      surrogate_brain(contract, PlannerPolicy{}, FaultStream(1), 0);
  WorkflowGraph graph =
      std::get<WorkflowGraph>(compile(sketch, registry, contract));
  CaseState state = materialize_case(contract, "x_s1", dir.path / "case");
  init_case_dirs(state);

  const WorkflowNode& segment = graph.nodes.at("segment");

  SUBCASE("transient: retry as-is") {
    FailureInfo f{"segment", ErrorCode::ToolTransientFailure, "", "", {}};
    auto d = propose_deterministic_repair(f, segment, graph, state, registry);
    auto& patch = std::get<RepairPatch>(d);
    CHECK(patch.edits[0].action == RepairAction::RetryAsIs);
  }

  SUBCASE("bad reference with one producer: relink") {
    state.status["register"].state = NodeState::Succeeded;
    FailureInfo f{"segment", ErrorCode::BadReference, "volume", "",
                  BindError::Kind::UnknownField};
    auto d = propose_deterministic_repair(f, segment, graph, state, registry);
    auto& patch = std::get<RepairPatch>(d);
    CHECK(patch.edits[0].action == RepairAction::ReplaceToken);
    CHECK(patch.edits[0].new_value == "@node.register.volume");
  }

  SUBCASE("bad reference with several producers: give up") {
    state.status["load"].state = NodeState::Succeeded;
    state.status["register"].state = NodeState::Succeeded;
    FailureInfo f{"segment", ErrorCode::BadReference, "volume", "",
                  BindError::Kind::UnknownField};
    auto d = propose_deterministic_repair(f, segment, graph, state, registry);
    CHECK(std::holds_alternative<GiveUp>(d));
  }

  SUBCASE("invalid override: remove it") {
    WorkflowNode denoiseish = segment;
    FailureInfo f{"segment", ErrorCode::InvalidOverride, "volume", "", {}};
    auto d =
        propose_deterministic_repair(f, denoiseish, graph, state, registry);
    auto& patch = std::get<RepairPatch>(d);
    CHECK(patch.edits[0].action == RepairAction::RemoveOverride);
  }

  SUBCASE("hallucinated literal on a reference arg: relink") {
    state.status["register"].state = NodeState::Succeeded;
    WorkflowNode bad = segment;
    bad.args["volume"] = "/data/fabricated/x.nii";
    FailureInfo f{"segment", ErrorCode::MissingInput, "volume", "", {}};
    auto d = propose_deterministic_repair(f, bad, graph, state, registry);
    auto& patch = std::get<RepairPatch>(d);
    CHECK(patch.edits[0].action == RepairAction::ReplaceToken);
  }

  SUBCASE("hard failure: no rule") {
    FailureInfo f{"segment", ErrorCode::ToolHardFailure, "", "", {}};
    auto d = propose_deterministic_repair(f, segment, graph, state, registry);
    CHECK(std::holds_alternative<GiveUp>(d));
  }

  SUBCASE("case-input fallback when no node produces the type") {
    // nothing succeeded yet: the case input volume is the unique source
    ProducerLookup lookup =
        unique_producer(SemanticType::VolumeRef, state, graph, registry);
    REQUIRE(lookup.status == ProducerLookup::Status::Ambiguous);
    // Register-style cases carry two VolumeRef inputs; Denoise has one
    TempDir dir2("rules2");
    TaskContract dc = make_contract(TaskId::Denoise);
    CaseState ds = materialize_case(dc, "d_s1", dir2.path / "case");
    init_case_dirs(ds);
    WorkflowGraph dg;
    ProducerLookup unique = unique_producer(
        SemanticType::VolumeRef, ds, dg,
        registry_from(build_task_toolset(TaskId::Denoise).specs));
    REQUIRE(unique.status == ProducerLookup::Status::Unique);
    CHECK(render_token(unique.token) == "@case.input");
  }
}

TEST_CASE("pluggable hook is consulted after the table declines") {
  struct CountingHook : RepairHook {
    int calls = 0;
    std::optional<RepairPatch> propose(const FailureInfo& f,
                                       const WorkflowNode& node,
                                       const WorkflowGraph&, const CaseState&,
                                       const ToolRegistry&) override {
      ++calls;
      return std::nullopt;  // decline too
    }
  };
  CountingHook hook;
  RunConstraints rc;
  rc.faults.hard_failure_nodes.insert({"Denoise", 1});
  rc.hook = &hook;
  Run run(TaskId::Denoise, "hook", rc);
  CHECK_FALSE(run.outcome.all_required_succeeded);
  CHECK(hook.calls == 1);
}
