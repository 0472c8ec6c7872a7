#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bcer/artifact_store.hpp"
#include "bcer/types.hpp"
#include "json.hpp"

namespace bcer {

enum class EventKind {
  CaseStarted,
  SketchProduced,
  Compiled,
  CompileFailed,
  NodeDispatched,
  BindFailed,
  NodeSucceeded,
  NodeFailed,
  RepairProposed,
  RepairApplied,
  NodeAbandoned,
  MilestoneValidated,
  CaseFinished,
  EngineError,
};

std::string_view to_string(EventKind k);
std::optional<EventKind> event_kind_from(std::string_view s);

struct TraceEvent {
  std::uint64_t seq_no = 0;
  std::string timestamp;  // informational only; excluded from determinism
  std::string case_id;
  std::string node_id;  // optional
  EventKind kind = EventKind::CaseStarted;
  nlohmann::json payload;

  nlohmann::json to_json() const;
  static TraceEvent from_json(const nlohmann::json& j);
};

/// Append-only per-case trace: one JSON record per line, durably
/// flushed on every append. seq_no is a strictly increasing counter.
class TraceWriter {
 public:
  TraceWriter(std::filesystem::path file, std::string case_id);

  void append(EventKind kind, const std::string& node_id,
              nlohmann::json payload);

  const std::vector<TraceEvent>& events() const { return events_; }
  const std::filesystem::path& file() const { return file_; }

 private:
  std::filesystem::path file_;
  std::string case_id_;
  std::ofstream out_;
  std::uint64_t next_seq_ = 0;
  std::vector<TraceEvent> events_;
};

struct TraceFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reads a trace file, enforcing well-formedness (strictly increasing
/// seq_no, parseable records). Throws TraceFormatError otherwise.
std::vector<TraceEvent> read_trace(const std::filesystem::path& file);

/// Final statuses reconstructed purely from the event stream.
struct ReplaySummary {
  std::map<std::string, NodeState> final_states;
  /// node -> output field -> digest, as recorded by NodeSucceeded events.
  std::map<std::string, std::map<std::string, std::string>> digests;
  std::map<std::string, int> dispatch_counts;
  bool finished = false;
  std::string result;
};

ReplaySummary replay_trace(const std::vector<TraceEvent>& events);

}  // namespace bcer
