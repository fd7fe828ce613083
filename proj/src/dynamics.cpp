#include "coplan/dynamics.hpp"

#include <algorithm>
#include <cstdio>

#include "coplan/error.hpp"

namespace coplan {

namespace {

std::uint64_t bit(int node) { return std::uint64_t{1} << node; }

double hover_power(const Scenario& s) { return uav_power(s.energy, 0.0); }
double idle_power(const Scenario& s) { return ugv_power(s.energy, 0.0); }
double drive_power(const Scenario& s) { return ugv_power(s.energy, s.fleet.ugv_speed); }

void push(std::vector<TraceEvent>* events, TraceEvent e) {
  if (events) events->push_back(e);
}

void refresh_clock(WorldState& st) {
  for (const auto& u : st.uavs) st.clock = std::max(st.clock, u.ready);
  for (const auto& g : st.ugvs) st.clock = std::max(st.clock, g.ready);
}

}  // namespace

std::string to_string(const Action& a) {
  switch (a.kind) {
    case ActionKind::UavVisit:
      return "uav_visit " + std::to_string(a.robot) + " " + std::to_string(a.target);
    case ActionKind::UgvMove:
      return "ugv_move " + std::to_string(a.robot) + " " + std::to_string(a.target);
    case ActionKind::Recharge:
      return "recharge " + std::to_string(a.robot) + " " + std::to_string(a.target);
  }
  return "?";
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Fly: return "fly";
    case EventKind::Drive: return "drive";
    case EventKind::Wait: return "wait";
    case EventKind::Recharge: return "recharge";
    case EventKind::Visit: return "visit";
  }
  return "?";
}

WorldState initial_state(const Scenario& s) {
  WorldState st;
  st.uavs.resize(s.fleet.n_uav);
  for (auto& u : st.uavs) {
    u.position = s.depot;
    u.energy = s.fleet.uav_capacity;
  }
  st.ugvs.resize(s.fleet.n_ugv);
  for (auto& g : st.ugvs) {
    g.node = s.depot_node;
    g.position = s.road.node(s.depot_node);
    g.energy = s.fleet.ugv_capacity;
    g.streak = bit(s.depot_node);
  }
  st.visited.assign(s.tasks.size(), 0);
  for (std::size_t i = 0; i < s.tasks.size(); ++i)
    if (s.tasks[i].visited) {
      st.visited[i] = 1;
      ++st.n_visited;
    }
  return st;
}

double flight_seconds(const Scenario& s, Vec2 a, Vec2 b) { return distance(a, b) / s.fleet.uav_speed; }

double flight_energy(const Scenario& s, double seconds) {
  return uav_power(s.energy, s.fleet.uav_speed) * seconds;
}

bool can_rendezvous(const Scenario& s, const WorldState& st, int u, int g) {
  const UavState& uav = st.uavs[u];
  const UgvState& ugv = st.ugvs[g];
  const double fly = flight_seconds(s, uav.position, ugv.position);
  const double arrival = uav.ready + fly;
  const double hover = std::max(0.0, ugv.ready - arrival);
  return flight_energy(s, fly) + hover_power(s) * hover <= uav.energy;
}

namespace {

std::optional<std::string> supported(const Scenario& s, const WorldState& st) {
  for (int u = 0; u < static_cast<int>(st.uavs.size()); ++u) {
    bool ok = false;
    for (int g = 0; g < static_cast<int>(st.ugvs.size()) && !ok; ++g) ok = can_rendezvous(s, st, u, g);
    if (!ok) return "UAV " + std::to_string(u) + " could no longer reach any UGV";
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> step(const Scenario& s, WorldState& state, const Action& a,
                                std::vector<TraceEvent>* events, int step_index) {
  const int n_uav = static_cast<int>(state.uavs.size());
  const int n_ugv = static_cast<int>(state.ugvs.size());
  if (state.complete()) return "action after mission completion";

  WorldState next = state;
  std::vector<TraceEvent> local;
  auto* ev = events ? &local : nullptr;

  switch (a.kind) {
    case ActionKind::UavVisit: {
      if (a.robot < 0 || a.robot >= n_uav) return "UAV index out of range";
      if (a.target < 0 || a.target >= s.n_tasks()) return "task index out of range";
      if (next.visited[a.target]) return "task " + std::to_string(a.target) + " visited twice";
      UavState& u = next.uavs[a.robot];
      const Vec2 dest = s.tasks[a.target].position;
      const double dt = flight_seconds(s, u.position, dest);
      const double e = flight_energy(s, dt);
      if (e > u.energy) return "UAV " + std::to_string(a.robot) + " energy would go negative";
      push(ev, {u.ready, u.ready + dt, RobotKind::Uav, a.robot, EventKind::Fly, u.position, dest, e, step_index});
      u.ready += dt;
      u.energy -= e;
      u.consumed += e;
      u.position = dest;
      u.status = UavStatus::Airborne;
      u.carrier = -1;
      u.last_was_recharge = false;
      push(ev, {u.ready, u.ready, RobotKind::Uav, a.robot, EventKind::Visit, dest, dest, 0.0, step_index});
      next.visited[a.target] = 1;
      ++next.n_visited;
      break;
    }
    case ActionKind::UgvMove: {
      if (a.robot < 0 || a.robot >= n_ugv) return "UGV index out of range";
      if (a.target < 0 || a.target >= s.n_paths()) return "road node index out of range";
      UgvState& g = next.ugvs[a.robot];
      if (!s.road.adjacent(g.node, a.target))
        return "road node " + std::to_string(a.target) + " is not adjacent to UGV " + std::to_string(a.robot) +
               "'s node " + std::to_string(g.node);
      if (g.streak & bit(a.target))
        return "UGV " + std::to_string(a.robot) + " revisits node " + std::to_string(a.target) +
               " before a rendezvous";
      const double dt = s.road.edge_length(g.node, a.target) / s.fleet.ugv_speed;
      const double e = drive_power(s) * dt;
      if (e > g.energy) return "UGV " + std::to_string(a.robot) + " energy would go negative";
      const Vec2 dest = s.road.node(a.target);
      push(ev, {g.ready, g.ready + dt, RobotKind::Ugv, a.robot, EventKind::Drive, g.position, dest, e, step_index});
      g.ready += dt;
      g.energy -= e;
      g.consumed += e;
      g.position = dest;
      g.node = a.target;
      g.streak |= bit(a.target);
      for (auto& u : next.uavs)
        if (u.status == UavStatus::Docked && u.carrier == a.robot) {
          u.status = UavStatus::Idle;
          u.carrier = -1;
        }
      break;
    }
    case ActionKind::Recharge: {
      if (a.robot < 0 || a.robot >= n_uav) return "UAV index out of range";
      if (a.target < 0 || a.target >= n_ugv) return "UGV index out of range";
      UavState& u = next.uavs[a.robot];
      UgvState& g = next.ugvs[a.target];
      if (u.last_was_recharge) return "UAV " + std::to_string(a.robot) + " recharges twice in a row";
      if (!(u.energy < s.fleet.uav_capacity)) return "UAV " + std::to_string(a.robot) + " is already full";
      const double dt = flight_seconds(s, u.position, g.position);
      const double e_fly = flight_energy(s, dt);
      const double arrival = u.ready + dt;
      const double start = std::max(arrival, g.ready);
      const double e_hover = hover_power(s) * (start - arrival);
      if (e_fly + e_hover > u.energy)
        return "UAV " + std::to_string(a.robot) + " cannot reach UGV " + std::to_string(a.target);
      const double ugv_wait = start - g.ready;
      const double rs = s.fleet.recharge_seconds;
      const double e_ugv = idle_power(s) * (ugv_wait + rs);
      if (e_ugv > g.energy) return "UGV " + std::to_string(a.target) + " energy would go negative";

      if (dt > 0.0)
        push(ev, {u.ready, arrival, RobotKind::Uav, a.robot, EventKind::Fly, u.position, g.position, e_fly, step_index});
      if (start > arrival)
        push(ev, {arrival, start, RobotKind::Uav, a.robot, EventKind::Wait, g.position, g.position, e_hover, step_index});
      const double remaining = u.energy - e_fly - e_hover;
      push(ev, {start, start + rs, RobotKind::Uav, a.robot, EventKind::Recharge, g.position, g.position,
                -(s.fleet.uav_capacity - remaining), step_index});
      if (ugv_wait > 0.0)
        push(ev, {g.ready, start, RobotKind::Ugv, a.target, EventKind::Wait, g.position, g.position,
                  idle_power(s) * ugv_wait, step_index});
      push(ev, {start, start + rs, RobotKind::Ugv, a.target, EventKind::Recharge, g.position, g.position,
                idle_power(s) * rs, step_index});

      u.consumed += e_fly + e_hover;
      u.energy = s.fleet.uav_capacity;
      u.position = g.position;
      u.ready = start + rs;
      u.status = UavStatus::Docked;
      u.carrier = a.target;
      u.last_was_recharge = true;
      g.energy -= e_ugv;
      g.consumed += e_ugv;
      g.ready = start + rs;
      g.streak = bit(g.node);
      break;
    }
  }

  refresh_clock(next);
  if (!next.complete())
    if (auto why = supported(s, next)) return why;

  state = std::move(next);
  if (events) events->insert(events->end(), local.begin(), local.end());
  return std::nullopt;
}

std::vector<Action> valid_actions(const Scenario& s, const WorldState& state, const PendingRobots& pending) {
  std::vector<Action> out;
  if (state.complete()) return out;
  const int n_uav = static_cast<int>(state.uavs.size());
  const int n_ugv = static_cast<int>(state.ugvs.size());
  auto uav_free = [&](int i) { return pending.uavs.empty() || pending.uavs[i]; };
  auto ugv_free = [&](int i) { return pending.ugvs.empty() || pending.ugvs[i]; };
  auto consider = [&](Action a) {
    WorldState tmp = state;
    if (!step(s, tmp, a)) out.push_back(a);
  };
  for (int i = 0; i < n_uav; ++i)
    if (uav_free(i))
      for (int j = 0; j < s.n_tasks(); ++j)
        if (!state.visited[j]) consider(Action::visit(i, j));
  for (int i = 0; i < n_ugv; ++i)
    if (ugv_free(i))
      for (const auto& e : s.road.neighbors(state.ugvs[i].node)) consider(Action::move(i, e.to));
  for (int i = 0; i < n_uav; ++i)
    if (uav_free(i))
      for (int j = 0; j < n_ugv; ++j)
        if (ugv_free(j)) consider(Action::recharge(i, j));
  return out;
}

void finalize_trace(const Scenario& s, ExecutionTrace& trace) {
  WorldState& st = trace.final_state;
  const double end = st.clock;
  for (int i = 0; i < static_cast<int>(st.uavs.size()); ++i) {
    auto& u = st.uavs[i];
    if (u.ready < end) {
      trace.events.push_back({u.ready, end, RobotKind::Uav, i, EventKind::Wait, u.position, u.position, 0.0, -1});
      u.ready = end;
    }
  }
  for (int i = 0; i < static_cast<int>(st.ugvs.size()); ++i) {
    auto& g = st.ugvs[i];
    if (g.ready < end) {
      const double e = idle_power(s) * (end - g.ready);
      trace.events.push_back({g.ready, end, RobotKind::Ugv, i, EventKind::Wait, g.position, g.position, e, -1});
      g.energy -= e;
      g.consumed += e;
      g.ready = end;
    }
  }
}

ExecutionTrace execute_plan(const Scenario& s, const JointPlan& plan) {
  ExecutionTrace trace;
  trace.final_state = initial_state(s);
  for (std::size_t k = 0; k < plan.actions.size(); ++k) {
    if (auto why = step(s, trace.final_state, plan.actions[k], &trace.events, static_cast<int>(k)))
      throw InfeasiblePlan(k, *why);
  }
  if (!trace.final_state.complete())
    throw InfeasiblePlan(plan.actions.size(), "plan leaves tasks unvisited");
  finalize_trace(s, trace);
  return trace;
}

Metrics metrics(const ExecutionTrace& trace) {
  Metrics m;
  for (const auto& e : trace.events) {
    m.makespan = std::max(m.makespan, e.t_end);
    if (e.energy <= 0.0) continue;
    (e.robot_kind == RobotKind::Uav ? m.uav_energy : m.ugv_energy) += e.energy;
  }
  m.uav_energy /= 1000.0;
  m.ugv_energy /= 1000.0;
  return m;
}

std::string trace_to_log(const ExecutionTrace& trace) {
  std::string out = "# t_start_s,t_end_s,robot,kind,x0_m,y0_m,x1_m,y1_m,energy_J\n";
  char buf[256];
  for (const auto& e : trace.events) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%s%d,%s,%.3f,%.3f,%.3f,%.3f,%.6f\n", e.t_start, e.t_end,
                  e.robot_kind == RobotKind::Uav ? "uav" : "ugv", e.robot, to_string(e.kind), e.from.x, e.from.y,
                  e.to.x, e.to.y, e.energy);
    out += buf;
  }
  return out;
}

}  // namespace coplan
