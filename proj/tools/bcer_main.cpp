// bcer: run single cases, benchmark controller arms, inspect and
// replay traces, validate contracts, and list tools.
//
// Exit codes: 0 success, 1 task failure (engine healthy), 2 usage or
// config error, 3 engine error.

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "bcer/bench.hpp"
#include "bcer/controllers.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kTaskFailure = 1;
constexpr int kUsageError = 2;
constexpr int kEngineError = 3;

std::filesystem::path default_workdir() {
  if (const char* env = std::getenv("BCER_WORKDIR")) return env;
  return std::filesystem::current_path() / "bcer_work";
}

struct CommonOpts {
  std::string faults_file;
  std::string policy_file;
  std::string workdir = default_workdir().string();
  std::string format = "text";
};

bool load_run_inputs(const CommonOpts& opts, bcer::FaultConfig& faults,
                     bcer::PlannerPolicy& policy, std::string& error) {
  try {
    if (!opts.faults_file.empty())
      faults = bcer::FaultConfig::from_file(opts.faults_file);
    if (!opts.policy_file.empty())
      policy = bcer::PlannerPolicy::from_file(opts.policy_file);
  } catch (const std::exception& e) {
    error = e.what();
    return false;
  }
  return true;
}

int cmd_run(const std::string& contract_file, const std::string& controller,
            std::uint64_t seed, const CommonOpts& opts) {
  auto kind = bcer::controller_kind_from(controller);
  if (!kind) {
    std::cerr << "unknown controller: " << controller << "\n";
    return kUsageError;
  }
  bcer::TaskContract contract;
  try {
    contract = bcer::load_contract(contract_file);
  } catch (const std::exception& e) {
    std::cerr << "bad contract: " << e.what() << "\n";
    return kUsageError;
  }
  bcer::ControllerConfig config;
  config.kind = *kind;
  config.seed = seed;
  std::string err;
  if (!load_run_inputs(opts, config.faults, config.policy, err)) {
    std::cerr << "bad config: " << err << "\n";
    return kUsageError;
  }
  config.workdir = opts.workdir;

  bcer::ControllerResult r = bcer::run_controller(contract, config);
  if (opts.format == "records") {
    nlohmann::json rec = {{"case_id", r.case_id},
                          {"sr", r.score.sr},
                          {"tcr", r.score.tcr},
                          {"dispatches", r.total_dispatches},
                          {"engine_error", r.engine_error},
                          {"trace", (r.case_scope / "trace.log").string()}};
    std::cout << rec.dump() << "\n";
  } else {
    std::printf("case=%s sr=%d tcr=%.2f dispatches=%d\n", r.case_id.c_str(),
                r.score.sr, r.score.tcr, r.total_dispatches);
    std::printf("trace: %s\n", (r.case_scope / "trace.log").string().c_str());
  }
  if (r.engine_error) {
    std::cerr << "engine error: " << r.detail << "\n";
    return kEngineError;
  }
  return r.score.sr == 1 ? kOk : kTaskFailure;
}

int cmd_bench(const std::string& suite_dir, const std::string& controllers,
              int seeds, std::uint64_t seed_base, int jobs,
              const CommonOpts& opts) {
  bcer::BenchConfig config;
  for (const auto& entry : std::filesystem::directory_iterator(suite_dir)) {
    if (entry.path().extension() != ".json") continue;
    try {
      config.contracts.push_back(bcer::load_contract(entry.path()));
    } catch (const std::exception& e) {
      std::cerr << "bad contract " << entry.path() << ": " << e.what() << "\n";
      return kUsageError;
    }
  }
  if (config.contracts.empty()) {
    std::cerr << "no contracts in " << suite_dir << "\n";
    return kUsageError;
  }
  std::stringstream list(controllers);
  std::string name;
  while (std::getline(list, name, ',')) {
    auto kind = bcer::controller_kind_from(name);
    if (!kind) {
      std::cerr << "unknown controller: " << name << "\n";
      return kUsageError;
    }
    config.kinds.push_back(*kind);
  }
  if (config.kinds.empty()) {
    std::cerr << "no controllers given\n";
    return kUsageError;
  }
  config.seeds = seeds;
  config.seed_base = seed_base;
  config.jobs = jobs;
  std::string err;
  if (!load_run_inputs(opts, config.faults, config.policy, err)) {
    std::cerr << "bad config: " << err << "\n";
    return kUsageError;
  }
  config.workdir = opts.workdir;

  bcer::BenchResult result = bcer::run_benchmark(config);
  if (opts.format == "records") {
    for (const auto& cell : result.cells) std::cout << cell.to_json() << "\n";
  } else {
    std::cout << bcer::format_table(result);
    std::cout << "archive: " << (config.workdir / "scores.jsonl").string()
              << "\n";
  }
  for (const auto& cell : result.cells) {
    if (cell.engine_error) return kEngineError;
  }
  return kOk;
}

int cmd_trace_inspect(const std::string& trace_file, const std::string& node,
                      const CommonOpts& opts) {
  std::vector<bcer::TraceEvent> events;
  try {
    events = bcer::read_trace(trace_file);
  } catch (const std::exception& e) {
    std::cerr << "malformed trace: " << e.what() << "\n";
    return kEngineError;
  }
  for (const auto& ev : events) {
    if (!node.empty() && ev.node_id != node) continue;
    if (opts.format == "records") {
      std::cout << ev.to_json().dump() << "\n";
    } else {
      std::printf("%5llu %-18s %-12s %s\n",
                  static_cast<unsigned long long>(ev.seq_no),
                  std::string(to_string(ev.kind)).c_str(), ev.node_id.c_str(),
                  ev.payload.dump().c_str());
    }
  }
  return kOk;
}

int cmd_trace_replay(const std::string& trace_file, const CommonOpts& opts) {
  std::vector<bcer::TraceEvent> events;
  try {
    events = bcer::read_trace(trace_file);
  } catch (const std::exception& e) {
    std::cerr << "malformed trace: " << e.what() << "\n";
    return kEngineError;
  }
  bcer::ReplaySummary replay = bcer::replay_trace(events);

  bcer::CaseState archived;
  try {
    archived = bcer::load_state_record(
        std::filesystem::path(trace_file).parent_path());
  } catch (const std::exception& e) {
    std::cerr << "no archived outcome next to trace: " << e.what() << "\n";
    return kEngineError;
  }

  for (const auto& [node_id, state] : replay.final_states) {
    auto it = archived.status.find(node_id);
    if (it == archived.status.end() || it->second.state != state) {
      std::printf("mismatch at node %s: replay=%s archived=%s\n",
                  node_id.c_str(), std::string(to_string(state)).c_str(),
                  it == archived.status.end()
                      ? "<absent>"
                      : std::string(to_string(it->second.state)).c_str());
      return kTaskFailure;
    }
  }
  if (opts.format == "records") {
    nlohmann::json rec = {{"verdict", "match"},
                          {"nodes", replay.final_states.size()},
                          {"finished", replay.finished}};
    std::cout << rec.dump() << "\n";
  } else {
    std::printf("replay match: %zu nodes, finished=%s\n",
                replay.final_states.size(), replay.finished ? "yes" : "no");
  }
  return kOk;
}

int cmd_validate(const std::string& contract_file, const CommonOpts& opts) {
  try {
    bcer::TaskContract c = bcer::load_contract(contract_file);
    if (opts.format == "records") {
      std::cout << nlohmann::json{{"valid", true},
                                  {"task", std::string(to_string(c.task))},
                                  {"milestones", c.milestones.size()}}
                       .dump()
                << "\n";
    } else {
      std::printf("valid: task=%s milestones=%zu tools=%zu\n",
                  std::string(to_string(c.task)).c_str(), c.milestones.size(),
                  c.allowed_tools.size());
    }
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "invalid contract: " << e.what() << "\n";
    return kUsageError;
  }
}

int cmd_tools(const std::string& task_name, const CommonOpts& opts) {
  std::vector<bcer::ToolSpec> specs;
  if (task_name.empty()) {
    bcer::ToolRegistry reg = bcer::build_full_registry();
    for (const auto& name : reg.names()) specs.push_back(*reg.find(name));
  } else {
    auto task = bcer::task_from(task_name);
    if (!task) {
      std::cerr << "unknown task: " << task_name << "\n";
      return kUsageError;
    }
    specs = bcer::build_task_toolset(*task).specs;
  }
  for (const auto& spec : specs) {
    if (opts.format == "records") {
      std::cout << bcer::tool_spec_to_json(spec).dump() << "\n";
    } else {
      std::printf("%-20s args=%zu outputs=%zu side_effect=%s\n",
                  spec.name.c_str(), spec.args.size(), spec.outputs.size(),
                  spec.side_effect == bcer::ToolSpec::SideEffect::WritesArtifact
                      ? "writes"
                      : "pure");
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BCER workflow-controller engine"};
  app.require_subcommand(1);
  CommonOpts opts;

  std::string contract_file, controller = "bcer", suite_dir;
  std::string controllers = "react,react_bind,react_bind_ref,bcer";
  std::string trace_file, node_filter, task_name;
  std::uint64_t seed = 1, seed_base = 1;
  int seeds = 25, jobs = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--faults", opts.faults_file, "fault config file");
    cmd->add_option("--policy", opts.policy_file, "planner policy file");
    cmd->add_option("--workdir", opts.workdir, "work directory");
    cmd->add_option("--format", opts.format, "text|records")
        ->check(CLI::IsMember({"text", "records"}));
  };

  CLI::App* run = app.add_subcommand("run", "run one case");
  run->add_option("--contract", contract_file, "contract file")->required();
  run->add_option("--controller", controller, "controller arm");
  run->add_option("--seed", seed, "case seed");
  add_common(run);

  CLI::App* bench = app.add_subcommand("bench", "run a benchmark suite");
  bench->add_option("--suite", suite_dir, "directory of contracts")
      ->required();
  bench->add_option("--controllers", controllers, "comma-separated arms");
  bench->add_option("--seeds", seeds, "seeds per cell");
  bench->add_option("--seed-base", seed_base, "first seed");
  bench->add_option("--jobs", jobs, "parallel workers");
  add_common(bench);

  CLI::App* trace = app.add_subcommand("trace", "inspect or replay traces");
  trace->require_subcommand(1);
  CLI::App* inspect = trace->add_subcommand("inspect", "list events");
  inspect->add_option("--trace", trace_file, "trace file")->required();
  inspect->add_option("--node", node_filter, "filter by node id");
  add_common(inspect);
  CLI::App* replay = trace->add_subcommand("replay", "replay and compare");
  replay->add_option("--trace", trace_file, "trace file")->required();
  add_common(replay);

  CLI::App* validate = app.add_subcommand("validate", "validate a contract");
  validate->add_option("--contract", contract_file, "contract file")
      ->required();
  add_common(validate);

  CLI::App* tools = app.add_subcommand("tools", "list tool specs");
  tools->add_option("--task", task_name, "restrict to one task's toolset");
  add_common(tools);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (run->parsed()) return cmd_run(contract_file, controller, seed, opts);
    if (bench->parsed())
      return cmd_bench(suite_dir, controllers, seeds, seed_base, jobs, opts);
    if (inspect->parsed())
      return cmd_trace_inspect(trace_file, node_filter, opts);
    if (replay->parsed()) return cmd_trace_replay(trace_file, opts);
    if (validate->parsed()) return cmd_validate(contract_file, opts);
    if (tools->parsed()) return cmd_tools(task_name, opts);
  } catch (const std::exception& e) {
    std::cerr << "engine error: " << e.what() << "\n";
    return kEngineError;
  }
  return kUsageError;
}
