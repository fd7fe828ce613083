#include "coplan/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <limits>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include "coplan/error.hpp"

namespace coplan {

const char* to_string(SolveStatus s) {
  return s == SolveStatus::Optimal ? "optimal" : "budget_exhausted";
}

double lower_bound(const Scenario& s, const WorldState& st) {
  if (st.complete()) return 0.0;
  const double q = s.fleet.uav_speed;
  double bound = st.clock;

  std::vector<int> open;
  for (int j = 0; j < s.n_tasks(); ++j)
    if (!st.visited[j]) open.push_back(j);

  // Prim's tree over {all UAVs merged into one root} + unvisited tasks.
  std::vector<double> link(open.size(), std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < open.size(); ++k) {
    const Vec2 p = s.tasks[open[k]].position;
    double reach = std::numeric_limits<double>::infinity();
    for (const auto& u : st.uavs) {
      const double d = distance(u.position, p);
      link[k] = std::min(link[k], d);
      reach = std::min(reach, u.ready + d / q);
    }
    bound = std::max(bound, reach);
  }
  double tree = 0.0;
  std::vector<char> in_tree(open.size(), 0);
  for (std::size_t added = 0; added < open.size(); ++added) {
    std::size_t best = open.size();
    for (std::size_t k = 0; k < open.size(); ++k)
      if (!in_tree[k] && (best == open.size() || link[k] < link[best])) best = k;
    in_tree[best] = 1;
    tree += link[best];
    const Vec2 p = s.tasks[open[best]].position;
    for (std::size_t k = 0; k < open.size(); ++k)
      if (!in_tree[k]) link[k] = std::min(link[k], distance(p, s.tasks[open[k]].position));
  }
  double ready_sum = 0.0;
  for (const auto& u : st.uavs) ready_sum += u.ready;
  bound = std::max(bound, (ready_sum + tree / q) / static_cast<double>(st.uavs.size()));
  return std::max(0.0, bound - st.clock);
}

namespace {

std::string state_key(const WorldState& st) {
  std::string key;
  key.reserve(st.uavs.size() * 41 + st.ugvs.size() * 28 + st.visited.size());
  auto put = [&](const auto& v) { key.append(reinterpret_cast<const char*>(&v), sizeof v); };
  for (const auto& u : st.uavs) {
    put(u.position.x);
    put(u.position.y);
    put(u.energy);
    put(u.ready);
    put(u.last_was_recharge);
  }
  for (const auto& g : st.ugvs) {
    put(g.node);
    put(g.energy);
    put(g.ready);
    put(g.streak);
  }
  key.append(st.visited.begin(), st.visited.end());
  return key;
}

double uav_consumed(const WorldState& st) {
  double e = 0.0;
  for (const auto& u : st.uavs) e += u.consumed;
  return e;
}

struct SearchNode {
  int parent = -1;
  Action action;
  double f = 0.0;       // clock + lower bound
  double energy = 0.0;  // UAV energy consumed so far
  std::size_t order = 0;
};

struct Frontier {
  const std::vector<SearchNode>* nodes;
  bool operator()(int a, int b) const {
    const auto& x = (*nodes)[a];
    const auto& y = (*nodes)[b];
    if (x.f != y.f) return x.f > y.f;
    if (x.energy != y.energy) return x.energy > y.energy;
    return x.order > y.order;
  }
};

JointPlan reconstruct(const std::vector<SearchNode>& nodes, int id) {
  JointPlan plan;
  for (; id > 0; id = nodes[id].parent) plan.actions.push_back(nodes[id].action);
  std::reverse(plan.actions.begin(), plan.actions.end());
  return plan;
}

bool better(double makespan, double energy, double best_makespan, double best_energy) {
  return makespan < best_makespan || (makespan == best_makespan && energy < best_energy);
}

}  // namespace

SolveResult solve_exact(const Scenario& s, const SearchBudget& budget) {
  const auto t0 = std::chrono::steady_clock::now();
  const WorldState root = initial_state(s);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  JointPlan incumbent;
  double best_makespan = kInf, best_energy = kInf;

  // Greedy dive for an initial incumbent.
  {
    WorldState st = root;
    JointPlan plan;
    while (!st.complete()) {
      const auto acts = valid_actions(s, st);
      if (acts.empty()) break;
      double best_f = kInf;
      WorldState chosen;
      Action choice;
      for (const auto& a : acts) {
        WorldState next = st;
        step(s, next, a);
        const double f = next.clock + lower_bound(s, next);
        if (f < best_f) {
          best_f = f;
          chosen = std::move(next);
          choice = a;
        }
      }
      st = std::move(chosen);
      plan.actions.push_back(choice);
    }
    if (st.complete()) {
      incumbent = std::move(plan);
      best_makespan = st.clock;
      best_energy = uav_consumed(st);
    }
  }

  std::vector<SearchNode> nodes;
  std::vector<WorldState> states;
  std::unordered_map<std::string, double> seen;
  nodes.push_back({-1, {}, root.clock + lower_bound(s, root), 0.0, 0});
  states.push_back(root);
  seen.emplace(state_key(root), 0.0);
  std::priority_queue<int, std::vector<int>, Frontier> frontier(Frontier{&nodes});
  frontier.push(0);

  const double slack = 1e-12;
  std::size_t expanded = 0;
  bool exhausted = false;
  while (!frontier.empty()) {
    const int id = frontier.top();
    frontier.pop();
    const SearchNode node = nodes[id];
    if (node.f > best_makespan * (1.0 + slack)) break;  // nothing better remains
    WorldState st = std::move(states[id]);
    if (st.complete()) {
      if (better(st.clock, node.energy, best_makespan, best_energy)) {
        best_makespan = st.clock;
        best_energy = node.energy;
        incumbent = reconstruct(nodes, id);
      }
      continue;
    }
    if (expanded >= budget.max_nodes ||
        (budget.max_seconds > 0.0 &&
         std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > budget.max_seconds)) {
      exhausted = true;
      break;
    }
    ++expanded;
    for (const auto& a : valid_actions(s, st)) {
      WorldState next = st;
      step(s, next, a);
      const double f = next.clock + lower_bound(s, next);
      if (f > best_makespan * (1.0 + slack)) continue;
      const double energy = uav_consumed(next);
      auto [it, inserted] = seen.try_emplace(state_key(next), energy);
      if (!inserted) {
        if (it->second <= energy) continue;
        it->second = energy;
      }
      nodes.push_back({id, a, f, energy, nodes.size()});
      states.push_back(std::move(next));
      frontier.push(static_cast<int>(nodes.size()) - 1);
    }
  }

  SolveResult result;
  result.expanded = expanded;
  result.status = exhausted ? SolveStatus::BudgetExhausted : SolveStatus::Optimal;
  if (incumbent.actions.empty() && !s.tasks.empty()) {
    if (!exhausted) throw NoFeasiblePlan("no feasible plan for scenario " + s.id);
    return result;
  }
  result.plan = std::move(incumbent);
  result.metrics = metrics(execute_plan(s, result.plan));
  return result;
}

namespace {

bool completes(const Scenario& s, const WorldState& st, std::unordered_set<std::string>& dead,
               std::size_t& budget) {
  if (st.complete()) return true;
  if (budget == 0) return true;
  --budget;
  std::string key = state_key(st);
  if (dead.count(key)) return false;
  for (const Action& a : valid_actions(s, st)) {
    WorldState next = st;
    step(s, next, a);
    if (completes(s, next, dead, budget)) return true;
  }
  dead.insert(std::move(key));
  return false;
}

}  // namespace

bool completable(const Scenario& s, const WorldState& state, std::size_t max_nodes) {
  std::unordered_set<std::string> dead;
  std::size_t budget = max_nodes;
  return completes(s, state, dead, budget);
}

}  // namespace coplan
