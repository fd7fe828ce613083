#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coplan/geometry.hpp"
#include "coplan/scenario.hpp"

namespace coplan {

enum class ActionKind : std::uint8_t { UavVisit = 0, UgvMove = 1, Recharge = 2 };

/// One planning token.
///   UavVisit(robot = uav, target = task)
///   UgvMove(robot = ugv, target = adjacent road node)
///   Recharge(robot = uav, target = ugv)
/// Ordering is lexicographic on (kind, robot, target), which coincides with
/// token-id ordering.
struct Action {
  ActionKind kind = ActionKind::UavVisit;
  int robot = 0;
  int target = 0;

  static Action visit(int uav, int task) { return {ActionKind::UavVisit, uav, task}; }
  static Action move(int ugv, int node) { return {ActionKind::UgvMove, ugv, node}; }
  static Action recharge(int uav, int ugv) { return {ActionKind::Recharge, uav, ugv}; }

  friend auto operator<=>(const Action&, const Action&) = default;
};

std::string to_string(const Action& a);

struct JointPlan {
  std::vector<Action> actions;

  friend bool operator==(const JointPlan&, const JointPlan&) = default;
};

enum class UavStatus : std::uint8_t { Idle, Airborne, Docked };

struct UavState {
  Vec2 position;
  double energy = 0.0;  // J remaining
  UavStatus status = UavStatus::Idle;
  int carrier = -1;     // UGV index while docked
  double ready = 0.0;   // time its previous action finishes
  bool last_was_recharge = false;
  double consumed = 0.0;  // J spent so far
};

struct UgvState {
  int node = 0;
  Vec2 position;
  double energy = 0.0;
  double ready = 0.0;
  /// Road nodes visited since the last rendezvous (bit per node).
  std::uint64_t streak = 0;
  double consumed = 0.0;
};

/// Dynamic snapshot after a plan prefix. Each robot has its own timeline;
/// `clock` is the latest finish time over all robots.
struct WorldState {
  double clock = 0.0;
  std::vector<UavState> uavs;
  std::vector<UgvState> ugvs;
  std::vector<char> visited;
  int n_visited = 0;

  bool complete() const { return n_visited == static_cast<int>(visited.size()); }
};

WorldState initial_state(const Scenario& s);

enum class RobotKind : std::uint8_t { Uav, Ugv };
enum class EventKind : std::uint8_t { Fly, Drive, Wait, Recharge, Visit };

const char* to_string(EventKind k);

struct TraceEvent {
  double t_start = 0.0;
  double t_end = 0.0;
  RobotKind robot_kind = RobotKind::Uav;
  int robot = 0;
  EventKind kind = EventKind::Wait;
  Vec2 from;
  Vec2 to;
  /// Energy taken from the robot's battery in J; negative for a recharge.
  double energy = 0.0;
  /// Index of the plan action that produced the event; -1 for end padding.
  int step = -1;
};

struct ExecutionTrace {
  std::vector<TraceEvent> events;
  WorldState final_state;
};

struct Metrics {
  double makespan = 0.0;    // s
  double uav_energy = 0.0;  // kJ
  double ugv_energy = 0.0;  // kJ
};

/// Energy spent flying/driving one straight leg or road edge.
double flight_seconds(const Scenario& s, Vec2 a, Vec2 b);
double flight_energy(const Scenario& s, double seconds);

/// Applies `a` to `state` in place when legal and returns std::nullopt;
/// otherwise leaves `state` untouched and returns the reason. Events are
/// appended to `events` when non-null.
///
/// Legality: indices in range; no action after mission completion; visits only
/// to unvisited tasks; moves only along road edges without revisiting a node
/// since the UGV's last rendezvous; recharge only for a UAV that is not full
/// and did not just recharge; no battery may go negative (including hover
/// while waiting for the UGV); and unless the action completes the mission,
/// every UAV must afterwards still be able to reach some UGV's current node.
std::optional<std::string> step(const Scenario& s, WorldState& state, const Action& a,
                                std::vector<TraceEvent>* events = nullptr, int step_index = -1);

/// True when UAV `u` can fly to UGV `g` and hover until it is there.
bool can_rendezvous(const Scenario& s, const WorldState& state, int u, int g);

/// Which robots may be assigned a next action; empty vectors mean "all".
struct PendingRobots {
  std::vector<bool> uavs;
  std::vector<bool> ugvs;
};

/// Every action that `step` would accept, in token order.
std::vector<Action> valid_actions(const Scenario& s, const WorldState& state,
                                  const PendingRobots& pending = {});

/// Runs every per-robot subsequence concurrently and synchronizes recharges.
/// Throws InfeasiblePlan at the first rejected step, or at step = plan size
/// when tasks remain unvisited.
ExecutionTrace execute_plan(const Scenario& s, const JointPlan& plan);

Metrics metrics(const ExecutionTrace& trace);

/// Pads every robot's timeline with wait events up to the makespan; UGVs idle
/// at ugv_power(0), parked UAVs draw nothing.
void finalize_trace(const Scenario& s, ExecutionTrace& trace);

std::string trace_to_log(const ExecutionTrace& trace);

}  // namespace coplan
