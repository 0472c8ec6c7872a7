#include <fstream>

#include "bcer/artifact_store.hpp"
#include "bcer/contract.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bcer;
using bcer_test::TempDir;

namespace {

SymbolicToken tok(const std::string& text) {
  return std::get<SymbolicToken>(parse_token(text));
}

CaseState demo_state(const std::filesystem::path& scope) {
  CaseState s;
  s.case_id = "demo_s1";
  s.case_scope = scope;
  init_case_dirs(s);

  SimArtifact vol;
  vol.semantic_type = SemanticType::VolumeRef;
  vol.produced_by = "case";
  vol.case_id = s.case_id;
  vol.payload = R"({"kind":"volume","seed":500})";
  vol.content_digest = digest_hex(vol.payload);
  vol.artifact_id = "case.input." + vol.content_digest.substr(0, 8);
  write_artifact(s, vol);
  s.inputs["input"] = vol.artifact_id;
  s.inputs["meta.body_part"] = "brain";

  s.sequences["cine"]["kspace"] = "case.seq.cine.kspace.deadbeef";
  s.runtime_values["ed_frame"] = 7;
  return s;
}

}  // namespace

TEST_CASE("bind resolves every token family") {
  TempDir dir("bind");
  CaseState s = demo_state(dir.path);
  s.status["load"].state = NodeState::Succeeded;
  s.node_outputs["load"]["volume"] = "load.volume.12345678";

  SimArtifact lv;
  lv.semantic_type = SemanticType::VolumeRef;
  lv.produced_by = "load";
  lv.case_id = s.case_id;
  lv.payload = "loaded";
  lv.content_digest = digest_hex(lv.payload);
  lv.artifact_id = "load.volume.12345678";
  write_artifact(s, lv);

  CHECK(std::get<Value>(bind(tok("@case.input"), s)) == s.inputs["input"]);
  CHECK(std::get<Value>(bind(tok("@case.meta.body_part"), s)) == "brain");
  CHECK(std::get<Value>(bind(tok("@seq.cine.kspace"), s)) ==
        "case.seq.cine.kspace.deadbeef");
  CHECK(std::get<Value>(bind(tok("@runtime.ed_frame"), s)) == 7);
  CHECK(std::get<Value>(bind(tok("@node.load.volume"), s)) ==
        "load.volume.12345678");
}

TEST_CASE("bind failures carry their kind") {
  TempDir dir("bindfail");
  CaseState s = demo_state(dir.path);

  auto unknown = bind(tok("@case.nonexistent"), s);
  CHECK(std::get<BindError>(unknown).kind == BindError::Kind::UnknownField);

  auto ghost = bind(tok("@node.ghost.volume"), s);
  CHECK(std::get<BindError>(ghost).kind == BindError::Kind::UnknownField);

  s.status["seg"].state = NodeState::Failed;
  s.node_outputs["seg"]["mask"] = "seg.mask.aaaa";
  auto not_done = bind(tok("@node.seg.mask"), s);
  CHECK(std::get<BindError>(not_done).kind ==
        BindError::Kind::ProducerNotSucceeded);

  s.status["seg"].state = NodeState::Succeeded;
  auto missing = bind(tok("@node.seg.mask"), s);  // never written to disk
  CHECK(std::get<BindError>(missing).kind == BindError::Kind::ArtifactMissing);
}

TEST_CASE("bind_all substitutes whole and embedded tokens") {
  TempDir dir("bindall");
  CaseState s = demo_state(dir.path);
  auto bound = bind_all({{"input", "@case.input"},
                         {"note", "part=@case.meta.body_part frame=@runtime.ed_frame"},
                         {"plain", 3.5}},
                        s);
  auto& args = std::get<std::map<std::string, Value>>(bound);
  CHECK(args.at("input") == s.inputs["input"]);
  CHECK(args.at("note") == "part=brain frame=7");
  CHECK(args.at("plain") == 3.5);

  auto failed = bind_all({{"input", "@node.ghost.volume"}}, s);
  auto& failure = std::get<BindFailure>(failed);
  CHECK(failure.arg == "input");
  CHECK(failure.token_text == "@node.ghost.volume");
}

TEST_CASE("scope checks reject writes outside the case") {
  TempDir dir("scope");
  CaseState s = demo_state(dir.path);
  CHECK_FALSE(check_scope(s.artifacts_dir() / "x", s).has_value());
  CHECK(check_scope(s.case_scope / ".." / "escape", s).has_value());
  CHECK(check_scope("/tmp/outside", s).has_value());
  CHECK(check_scope(s.case_scope / "a" / ".." / ".." / "b", s).has_value());

  SimArtifact bad;
  bad.semantic_type = SemanticType::VolumeRef;
  bad.case_id = s.case_id;
  bad.payload = "x";
  bad.content_digest = digest_hex(bad.payload);
  bad.artifact_id = "../escapee";
  CHECK_THROWS(write_artifact(s, bad));
}

TEST_CASE("artifacts persist payload plus sidecar") {
  TempDir dir("persist");
  CaseState s = demo_state(dir.path);
  const std::string id = s.inputs["input"].get<std::string>();
  CHECK(artifact_present(s, id));
  auto payload = read_artifact_payload(s, id);
  REQUIRE(payload.has_value());
  CHECK(digest_hex(*payload) == s.artifacts.at(id).content_digest);
  CHECK_FALSE(artifact_present(s, "nope"));
}

TEST_CASE("state record round-trips") {
  TempDir dir("state");
  CaseState s = demo_state(dir.path);
  s.status["load"].state = NodeState::Succeeded;
  s.status["load"].dispatch_count = 2;
  s.node_outputs["load"]["volume"] = "load.volume.12345678";
  save_state_record(s);

  CaseState back = load_state_record(s.case_scope);
  CHECK(back.case_id == s.case_id);
  CHECK(back.inputs == s.inputs);
  CHECK(back.sequences == s.sequences);
  CHECK(back.runtime_values == s.runtime_values);
  CHECK(back.node_outputs == s.node_outputs);
  CHECK(back.status.at("load").state == NodeState::Succeeded);
  CHECK(back.status.at("load").dispatch_count == 2);
  CHECK(back.artifacts.size() == s.artifacts.size());
}

TEST_CASE("cases are isolated from each other") {
  TempDir dir("iso");
  CaseState a = demo_state(dir.path / "a");
  CaseState b = demo_state(dir.path / "b");
  // same content, disjoint storage
  CHECK(a.artifacts.begin()->first == b.artifacts.begin()->first);
  CHECK(a.artifacts_dir() != b.artifacts_dir());
  CHECK(check_scope(b.artifacts_dir() / "x", a).has_value());
}
