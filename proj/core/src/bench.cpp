#include "bcer/bench.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

namespace bcer {

nlohmann::json BenchCell::to_json() const {
  return {{"task", std::string(to_string(task))},
          {"controller", std::string(to_string(kind))},
          {"seed", seed},
          {"sr", score.sr},
          {"tcr", score.tcr},
          {"dispatches", dispatches},
          {"engine_error", engine_error},
          {"detail", detail}};
}

BenchResult run_benchmark(const BenchConfig& config) {
  std::filesystem::create_directories(config.workdir);

  struct CellSpec {
    const TaskContract* contract;
    ControllerKind kind;
    std::uint64_t seed;
  };
  std::vector<CellSpec> specs;
  for (const auto& contract : config.contracts) {
    for (auto kind : config.kinds) {
      for (int s = 0; s < config.seeds; ++s) {
        specs.push_back({&contract, kind, config.seed_base + s});
      }
    }
  }

  BenchResult result;
  result.cells.resize(specs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) break;
      const CellSpec& spec = specs[i];
      BenchCell& cell = result.cells[i];
      cell.task = spec.contract->task;
      cell.kind = spec.kind;
      cell.seed = spec.seed;
      try {
        ControllerConfig cc;
        cc.kind = spec.kind;
        cc.seed = spec.seed;
        cc.policy = config.policy;
        cc.faults = config.faults;
        cc.workdir = config.workdir;
        ControllerResult r = run_controller(*spec.contract, cc);
        cell.score = r.score;
        cell.dispatches = r.total_dispatches;
        cell.engine_error = r.engine_error;
        cell.detail = r.detail;
        if (!config.keep_cases) {
          std::error_code ec;
          std::filesystem::remove_all(r.case_scope, ec);
        }
      } catch (const std::exception& e) {
        cell.engine_error = true;
        cell.detail = e.what();
      }
    }
  };

  int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  std::ofstream scores(config.workdir / "scores.jsonl", std::ios::app);
  for (const auto& cell : result.cells) {
    scores << cell.to_json().dump() << "\n";
  }

  for (auto kind : config.kinds) {
    result.aggregates[kind] = aggregate_for(result, kind);
  }
  return result;
}

BenchAggregate aggregate_for(const BenchResult& result, ControllerKind kind) {
  BenchAggregate agg;
  int n_short = 0, n_long = 0;
  double sr_sum = 0, tcr_sum = 0, short_sum = 0, long_sum = 0;
  for (const auto& cell : result.cells) {
    if (cell.kind != kind) continue;
    agg.cells += 1;
    sr_sum += cell.score.sr;
    tcr_sum += cell.score.tcr;
    if (is_long_chain(cell.task)) {
      n_long += 1;
      long_sum += cell.score.sr;
    } else {
      n_short += 1;
      short_sum += cell.score.sr;
    }
  }
  if (agg.cells > 0) {
    agg.sr_total = sr_sum / agg.cells;
    agg.tcr_total = tcr_sum / agg.cells;
  }
  if (n_short > 0) agg.sr_short = short_sum / n_short;
  if (n_long > 0) agg.sr_long = long_sum / n_long;
  return agg;
}

std::string format_table(const BenchResult& result) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %9s %9s %9s %9s %7s\n",
                "controller", "SR-short", "SR-long", "SR-all", "TCR-all",
                "cases");
  out += line;
  out += std::string(64, '-') + "\n";
  for (const auto& [kind, agg] : result.aggregates) {
    std::snprintf(line, sizeof(line), "%-16s %9.3f %9.3f %9.3f %9.3f %7d\n",
                  std::string(to_string(kind)).c_str(), agg.sr_short,
                  agg.sr_long, agg.sr_total, agg.tcr_total, agg.cells);
    out += line;
  }
  return out;
}

}  // namespace bcer
