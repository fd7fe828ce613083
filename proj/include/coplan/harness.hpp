#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "coplan/dynamics.hpp"
#include "coplan/metaheuristics.hpp"
#include "coplan/neural.hpp"
#include "coplan/oracle.hpp"

namespace coplan {

struct MethodParams {
  SearchBudget oracle;
  GlsParams gls;
  TsParams ts;
  SaParams sa;
  DecodeMode decode = DecodeMode::EncodeOnce;
  std::filesystem::path copcs_checkpoint;
  std::filesystem::path mlp_checkpoint;
};

struct BenchmarkConfig {
  std::filesystem::path dataset;
  std::string split = "test";
  std::vector<std::string> methods;  // subset of oracle, gls, ts, sa, mlp, copcs
  MethodParams params;
  std::filesystem::path out_dir;     // empty: nothing written
  int jobs = 1;
};

/// One (instance, method) outcome. Metrics are only meaningful when
/// status == "ok" or "budget_exhausted", i.e. the plan replayed cleanly.
struct InstanceRecord {
  int index = 0;
  std::string id;
  std::string config;
  std::string method;
  std::string status;
  Metrics metrics;
  double wall_ms = 0.0;
  std::string detail;

  bool feasible() const { return status == "ok" || status == "budget_exhausted"; }
};

struct ResultRow {
  std::string config;
  std::string method;
  int n = 0;
  int n_feasible = 0;
  double feasibility_rate = 0.0;
  double mean_makespan = 0.0, std_makespan = 0.0;
  double mean_uav_kj = 0.0, std_uav_kj = 0.0;
  double mean_ugv_kj = 0.0, std_ugv_kj = 0.0;
  double mean_wall_ms = 0.0;
};

struct ResultsTable {
  std::vector<ResultRow> rows;
  std::vector<InstanceRecord> records;
};

/// Mission config part of a scenario id ("T6-P3-A1G1-s4" -> "T6-P3-A1G1").
std::string mission_config(const std::string& scenario_id);

bool known_method(const std::string& method);

/// Models needed by the neural methods, loaded once up front.
struct LoadedModels {
  std::vector<std::pair<std::string, Model>> models;
  const Model* find(const std::string& method) const;
};

/// Throws ConfigError for an unknown method or a missing checkpoint.
LoadedModels load_models(const std::vector<std::string>& methods, const MethodParams& params);

/// Runs one method on one scenario and validates the plan by replay.
/// Never throws for solver-side failures; they become the record's status.
InstanceRecord run_method(const Scenario& s, const std::string& method, const MethodParams& params,
                          const LoadedModels& models, JointPlan* plan_out = nullptr);

/// Mean and population standard deviation over feasible records per
/// (config, method), in first-appearance order.
ResultsTable summarize(std::vector<InstanceRecord> records);

/// Every method on every instance of the split; instances fan out over
/// `jobs` threads and records are merged in (instance, method) order. Writes
/// per_instance.csv, timings.csv and summary.csv when out_dir is set.
ResultsTable run_benchmark(const BenchmarkConfig& config);

/// index,id,config,method,status,makespan_s,uav_energy_kJ,ugv_energy_kJ
std::string per_instance_csv(const std::vector<InstanceRecord>& records);
/// index,id,method,wall_ms (hardware dependent)
std::string timings_csv(const std::vector<InstanceRecord>& records);
/// One row per (config, method); mean_wall_ms is the last column.
std::string summary_csv(const ResultsTable& table);

/// Map plus trajectories: area bounds, tasks, road nodes and edges, one
/// colored polyline per UAV leg, black UGV drives, recharge markers.
std::string trace_svg(const Scenario& s, const ExecutionTrace& trace);
void export_trace_svg(const Scenario& s, const ExecutionTrace& trace, const std::filesystem::path& path);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Command line entry point; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace coplan
