#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coplan/dynamics.hpp"
#include "coplan/scenario.hpp"

namespace coplan {

struct SearchBudget {
  std::size_t max_nodes = 2'000'000;  // expansions
  double max_seconds = 0.0;           // 0 disables the wall-clock limit
};

enum class SolveStatus { Optimal, BudgetExhausted };

const char* to_string(SolveStatus s);

struct SolveResult {
  JointPlan plan;  // empty only when the budget ran out before any completion
  SolveStatus status = SolveStatus::Optimal;
  Metrics metrics;
  std::size_t expanded = 0;
};

/// Admissible bound on the makespan still to come from `state`, in seconds.
/// Combines the latest single-task reach time with a spanning-tree bound on
/// the remaining flight distance shared by the UAVs.
double lower_bound(const Scenario& s, const WorldState& state);

/// Best-first branch and bound over valid_actions. Minimizes makespan, then
/// UAV energy; siblings are expanded in token order. Throws NoFeasiblePlan
/// when the search space holds no completing sequence.
SolveResult solve_exact(const Scenario& s, const SearchBudget& budget = {});

/// Whether some sequence of valid actions from `state` visits every task.
/// Depth-first in token order with a memo of dead states; answers true once
/// `max_nodes` states have been expanded without a verdict.
bool completable(const Scenario& s, const WorldState& state, std::size_t max_nodes = 200'000);

struct Demonstration {
  std::string scenario_id;
  JointPlan plan;
  double makespan = 0.0;
  std::vector<int> tokens;
};

struct DatasetConfig {
  GenConfig gen;
  int n_instances = 1000;
  double train_fraction = 0.8;
  SearchBudget budget;
  std::uint64_t base_seed = 0;
  int max_attempts = 50;
  int jobs = 1;
};

struct DatasetEntry {
  int index = 0;
  std::string id;
  std::string split;  // "train" or "test"
  std::uint64_t seed = 0;
  std::string status;
  Metrics metrics;
  std::size_t expanded = 0;
  std::vector<std::string> substitutions;
};

/// Generates `n_instances` scenarios with optimal demonstrations under
/// `out_dir`: train/ and test/ hold <id>.scenario.json + <id>.tokens.txt,
/// manifest.csv lists every instance, substitutions.log records every seed
/// that was replaced (budget exhausted or infeasible). The first
/// round(n * train_fraction) indices are train. Throws Error when more than
/// 20% of instances exhaust the budget.
std::vector<DatasetEntry> generate_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir);

struct DatasetItem {
  std::string id;
  Scenario scenario;
  JointPlan plan;
};

/// Loads one split ("train" or "test") of a dataset in manifest order.
std::vector<DatasetItem> load_dataset(const std::filesystem::path& dir, const std::string& split);

}  // namespace coplan
