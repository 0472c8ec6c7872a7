#include "bcer/trace.hpp"

#include <chrono>

namespace bcer {

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::CaseStarted: return "CaseStarted";
    case EventKind::SketchProduced: return "SketchProduced";
    case EventKind::Compiled: return "Compiled";
    case EventKind::CompileFailed: return "CompileFailed";
    case EventKind::NodeDispatched: return "NodeDispatched";
    case EventKind::BindFailed: return "BindFailed";
    case EventKind::NodeSucceeded: return "NodeSucceeded";
    case EventKind::NodeFailed: return "NodeFailed";
    case EventKind::RepairProposed: return "RepairProposed";
    case EventKind::RepairApplied: return "RepairApplied";
    case EventKind::NodeAbandoned: return "NodeAbandoned";
    case EventKind::MilestoneValidated: return "MilestoneValidated";
    case EventKind::CaseFinished: return "CaseFinished";
    case EventKind::EngineError: return "EngineError";
  }
  return "?";
}

std::optional<EventKind> event_kind_from(std::string_view s) {
  for (auto k : {EventKind::CaseStarted, EventKind::SketchProduced,
                 EventKind::Compiled, EventKind::CompileFailed,
                 EventKind::NodeDispatched, EventKind::BindFailed,
                 EventKind::NodeSucceeded, EventKind::NodeFailed,
                 EventKind::RepairProposed, EventKind::RepairApplied,
                 EventKind::NodeAbandoned, EventKind::MilestoneValidated,
                 EventKind::CaseFinished, EventKind::EngineError}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

nlohmann::json TraceEvent::to_json() const {
  nlohmann::json j;
  j["seq_no"] = seq_no;
  j["timestamp"] = timestamp;
  j["case_id"] = case_id;
  if (!node_id.empty()) j["node_id"] = node_id;
  j["kind"] = to_string(kind);
  j["payload"] = payload;
  return j;
}

TraceEvent TraceEvent::from_json(const nlohmann::json& j) {
  TraceEvent e;
  e.seq_no = j.at("seq_no").get<std::uint64_t>();
  e.timestamp = j.value("timestamp", "");
  e.case_id = j.at("case_id").get<std::string>();
  e.node_id = j.value("node_id", "");
  auto kind = event_kind_from(j.at("kind").get<std::string>());
  if (!kind) throw TraceFormatError("unknown event kind");
  e.kind = *kind;
  e.payload = j.value("payload", nlohmann::json::object());
  return e;
}

namespace {

std::string now_timestamp() {
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count();
  return std::to_string(ms);
}

}  // namespace

TraceWriter::TraceWriter(std::filesystem::path file, std::string case_id)
    : file_(std::move(file)), case_id_(std::move(case_id)) {
  out_.open(file_, std::ios::trunc);
  if (!out_) {
    throw std::runtime_error("cannot open trace file: " + file_.string());
  }
}

void TraceWriter::append(EventKind kind, const std::string& node_id,
                         nlohmann::json payload) {
  TraceEvent e;
  e.seq_no = next_seq_++;
  e.timestamp = now_timestamp();
  e.case_id = case_id_;
  e.node_id = node_id;
  e.kind = kind;
  e.payload = std::move(payload);
  out_ << e.to_json().dump() << '\n';
  out_.flush();
  if (!out_) {
    throw std::runtime_error("trace-integrity error: append failed for " +
                             file_.string());
  }
  events_.push_back(std::move(e));
}

std::vector<TraceEvent> read_trace(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw TraceFormatError("cannot open trace: " + file.string());
  std::vector<TraceEvent> events;
  std::string line;
  std::uint64_t expect = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw TraceFormatError("malformed trace record at seq " +
                             std::to_string(expect));
    }
    TraceEvent e = TraceEvent::from_json(j);
    if (e.seq_no != expect) {
      throw TraceFormatError("non-monotone seq_no in " + file.string());
    }
    ++expect;
    events.push_back(std::move(e));
  }
  if (events.empty()) throw TraceFormatError("empty trace: " + file.string());
  return events;
}

ReplaySummary replay_trace(const std::vector<TraceEvent>& events) {
  ReplaySummary s;
  for (const auto& e : events) {
    switch (e.kind) {
      case EventKind::NodeDispatched:
        s.final_states[e.node_id] = NodeState::Running;
        s.dispatch_counts[e.node_id] += 1;
        break;
      case EventKind::NodeSucceeded: {
        s.final_states[e.node_id] = NodeState::Succeeded;
        auto& d = s.digests[e.node_id];
        d.clear();
        const nlohmann::json outputs =
            e.payload.value("outputs", nlohmann::json::object());
        for (const auto& [field, rec] : outputs.items()) {
          d[field] = rec.at("digest").get<std::string>();
        }
        break;
      }
      case EventKind::NodeFailed:
      case EventKind::BindFailed:
        s.final_states[e.node_id] = NodeState::Failed;
        break;
      case EventKind::RepairApplied:
        s.final_states[e.node_id] = NodeState::Repaired;
        break;
      case EventKind::NodeAbandoned:
        s.final_states[e.node_id] = NodeState::Abandoned;
        break;
      case EventKind::CaseFinished:
        s.finished = true;
        s.result = e.payload.value("result", "");
        break;
      default:
        break;
    }
  }
  return s;
}

}  // namespace bcer
