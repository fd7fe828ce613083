#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "coplan/dynamics.hpp"
#include "coplan/geometry.hpp"
#include "coplan/scenario.hpp"

namespace coplan {

/// Fixed patrol for one UGV: a nearest-neighbour tour (by road distance) over
/// its share of road nodes, started from the share node closest to the depot.
/// `walk` is the node-by-node drive: depot, lead-in to tour[0], then one lap
/// of the tour; `cycle_start` is the index in `walk` where laps repeat.
struct UgvPatrol {
  std::vector<int> tour;
  double tour_length = 0.0;  // meters, closed tour
  std::vector<int> walk;
  std::size_t cycle_start = 0;

  /// Node at walk position `k`, repeating the lap indefinitely.
  int at(std::size_t k) const;
  bool stationary() const { return walk.size() <= 1 || walk.size() - cycle_start <= 1; }
};

/// Road node n goes to UGV n % n_ugv.
std::vector<UgvPatrol> fixed_ugv_route(const Scenario& s);

struct RechargeStop {
  int uav = 0;
  int position = 0;  // index in the UAV's route of the task that follows
  int ugv = 0;
  int node = 0;

  friend bool operator==(const RechargeStop&, const RechargeStop&) = default;
};

struct RouteSolution {
  std::vector<std::vector<int>> routes;  // per-UAV task order
  std::vector<RechargeStop> recharges;
  JointPlan plan;
  double makespan = std::numeric_limits<double>::infinity();
};

/// Rebuilds the joint plan for `routes`: UAVs are dispatched in order of
/// their ready time; before any visit that the executor would refuse, a
/// recharge is inserted at the patrol stop (any UGV, any reachable position
/// ahead on its walk) that lets the visit finish earliest. When that greedy
/// choice dead-ends, other stops, earlier recharges and other dispatch orders
/// are tried depth-first within `budget` search nodes. Throws NoFeasiblePlan
/// when nothing works.
RouteSolution repair_recharges(const Scenario& s, const std::vector<UgvPatrol>& patrols,
                               std::vector<std::vector<int>> routes, long budget = 2000);

/// Round-robin nearest-task assignment, then repair.
RouteSolution initial_solution(const Scenario& s, const std::vector<UgvPatrol>& patrols);
RouteSolution initial_solution(const Scenario& s);

enum class MoveKind { TwoOpt, Relocate, Swap };

/// TwoOpt reverses route a positions i..j. Relocate moves route a position i
/// to route b position j (position in b after removal when a == b). Swap
/// exchanges route a position i with route b position j (a < b).
struct Move {
  MoveKind kind = MoveKind::TwoOpt;
  int a = 0, i = 0, b = 0, j = 0;
};

std::vector<Move> neighborhood(const std::vector<std::vector<int>>& routes);
std::vector<std::vector<int>> apply_move(std::vector<std::vector<int>> routes, const Move& m);
/// Tasks a move touches (its tabu attribute).
std::vector<int> moved_tasks(const std::vector<std::vector<int>>& routes, const Move& m);

struct IterationRecord {
  int iteration = 0;
  double incumbent = 0.0;
};

struct BaselineResult {
  RouteSolution best;
  std::vector<IterationRecord> log;  // incumbent makespan after each iteration
  int evaluations = 0;
};

struct GlsParams {
  double lambda = 0.0;  // <= 0: 0.1 x mean leg time of the initial solution
  int max_iters = 2000;
  std::uint64_t seed = 0;
};

struct TsParams {
  int tenure = 10;
  int max_iters = 2000;
  std::uint64_t seed = 0;
};

struct SaParams {
  double t0 = 0.0;  // <= 0: 0.2 x initial makespan
  double alpha = 0.95;
  int iters = 2000;
  int iters_per_temp = 20;
  std::uint64_t seed = 0;
};

/// GLS feature: UAV `uav` flies from `from` (-1 = its start) directly to `to`.
struct GlsFeature {
  int uav = 0, from = -1, to = 0;
  friend auto operator<=>(const GlsFeature&, const GlsFeature&) = default;
};
std::vector<GlsFeature> route_features(const std::vector<std::vector<int>>& routes);

struct GlsPenalties {
  double lambda = 0.0;
  std::map<GlsFeature, int> counts;

  /// cost + lambda * sum of penalties over the features `routes` uses.
  double augmented(const std::vector<std::vector<int>>& routes, double cost) const;
  /// Increments every used feature of maximal utility leg_time / (1 + penalty).
  void penalize(const Scenario& s, const std::vector<std::vector<int>>& routes);
};

BaselineResult gls_solve(const Scenario& s, const GlsParams& params = {});
BaselineResult ts_solve(const Scenario& s, const TsParams& params = {});
BaselineResult sa_solve(const Scenario& s, const SaParams& params = {});

/// Metropolis rule: always accept delta <= 0, else with probability
/// exp(-delta / temperature).
bool metropolis_accept(double delta, double temperature, Rng& rng);

std::string iteration_log_csv(const std::vector<IterationRecord>& log);

}  // namespace coplan
