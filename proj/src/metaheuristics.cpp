#include "coplan/metaheuristics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "coplan/error.hpp"

namespace coplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTol = 1e-9;

using Routes = std::vector<std::vector<int>>;

}  // namespace

int UgvPatrol::at(std::size_t k) const {
  if (k < walk.size()) return walk[k];
  const std::size_t lap = walk.size() - cycle_start;
  return walk[cycle_start + (k - cycle_start) % lap];
}

std::vector<UgvPatrol> fixed_ugv_route(const Scenario& s) {
  const RoadNetwork& road = s.road;
  const int n_nodes = static_cast<int>(road.size());
  const int n_ugv = s.fleet.n_ugv;
  std::vector<UgvPatrol> out(n_ugv);
  for (int j = 0; j < n_ugv; ++j) {
    std::vector<int> share;
    for (int n = j; n < n_nodes; n += n_ugv) share.push_back(n);
    UgvPatrol& p = out[j];
    if (share.empty()) {
      p.walk = {s.depot_node};
      continue;
    }
    int start = share.front();
    for (int n : share)
      if (road.shortest_distance(s.depot_node, n) < road.shortest_distance(s.depot_node, start))
        start = n;
    std::vector<char> used(n_nodes, 0);
    p.tour.push_back(start);
    used[start] = 1;
    while (p.tour.size() < share.size()) {
      const int cur = p.tour.back();
      int best = -1;
      for (int n : share) {
        if (used[n]) continue;
        if (best < 0 || road.shortest_distance(cur, n) < road.shortest_distance(cur, best)) best = n;
      }
      p.tour.push_back(best);
      used[best] = 1;
    }
    const std::size_t m = p.tour.size();
    if (m > 1)
      for (std::size_t k = 0; k < m; ++k)
        p.tour_length += road.shortest_distance(p.tour[k], p.tour[(k + 1) % m]);

    p.walk = road.shortest_path(s.depot_node, start);
    p.cycle_start = p.walk.size() - 1;
    if (m > 1) {
      for (std::size_t k = 0; k < m; ++k) {
        const auto leg = road.shortest_path(p.tour[k], p.tour[(k + 1) % m]);
        p.walk.insert(p.walk.end(), leg.begin() + 1, leg.end());
      }
      p.walk.pop_back();  // back at tour[0]; the lap repeats
    }
  }
  return out;
}

namespace {

// Depth-first construction. The first branch at every decision is the
// greedy one (fly on if possible, else the recharge stop with the earliest
// arrival), so backtracking only kicks in when greed dead-ends.
class RepairSearch {
 public:
  RepairSearch(const Scenario& s, const std::vector<UgvPatrol>& patrols, const Routes& routes,
               long budget, bool partial = false)
      : s_(s), patrols_(patrols), routes_(routes), budget_(budget), partial_(partial),
        ptr_(patrols.size(), 0), next_(routes.size(), 0), blocked_(routes.size(), 0) {}

  bool run(const WorldState& st) { return dfs(st); }

  std::vector<Action> plan;
  std::vector<RechargeStop> stops;
  double makespan = kInf;
  int stuck_uav = -1;

 private:
  struct Stop {
    double arrival;
    int ugv;
    std::size_t moves;
  };

  std::vector<Stop> stops_for(const WorldState& st, int i, const Action& visit) const {
    std::vector<Stop> out;
    for (int j = 0; j < static_cast<int>(patrols_.size()); ++j) {
      const UgvPatrol& p = patrols_[j];
      WorldState trial = st;
      const std::size_t limit = p.stationary() ? 0 : p.walk.size();
      for (std::size_t m = 0;; ++m) {
        WorldState probe = trial;
        if (!step(s_, probe, Action::recharge(i, j)) && !step(s_, probe, visit))
          out.push_back({probe.uavs[i].ready, j, m});
        if (m >= limit) break;
        if (step(s_, trial, Action::move(j, p.at(ptr_[j] + m + 1)))) break;
      }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Stop& a, const Stop& b) { return a.arrival < b.arrival - kTol; });
    return out;
  }

  bool dfs(const WorldState& st) {
    if (budget_-- <= 0) return false;
    const int n_uav = static_cast<int>(routes_.size());
    int i = -1;
    int first_pending = -1;
    int unblocked = 0;
    for (int u = 0; u < n_uav; ++u) {
      if (next_[u] >= routes_[u].size()) continue;
      if (first_pending < 0) first_pending = u;
      if (blocked_[u]) continue;
      ++unblocked;
      if (i < 0 || st.uavs[u].ready < st.uavs[i].ready) i = u;
    }
    if (first_pending < 0) {
      if (!partial_ && !st.complete()) throw Error("repair_recharges: routes do not cover every task");
      makespan = st.clock;
      return true;
    }
    if (i < 0) {
      if (stuck_uav < 0) stuck_uav = first_pending;
      return false;
    }
    const Action visit = Action::visit(i, routes_[i][next_[i]]);
    const auto saved_blocked = blocked_;

    WorldState direct = st;
    if (!step(s_, direct, visit)) {
      plan.push_back(visit);
      ++next_[i];
      std::fill(blocked_.begin(), blocked_.end(), 0);
      if (dfs(direct)) return true;
      --next_[i];
      plan.pop_back();
      blocked_ = saved_blocked;
    }

    for (const Stop& c : stops_for(st, i, visit)) {
      if (budget_ <= 0) return false;
      WorldState t = st;
      const std::size_t mark = plan.size();
      for (std::size_t m = 1; m <= c.moves; ++m) {
        const Action mv = Action::move(c.ugv, patrols_[c.ugv].at(ptr_[c.ugv] + m));
        step(s_, t, mv);
        plan.push_back(mv);
      }
      const Action rc = Action::recharge(i, c.ugv);
      step(s_, t, rc);
      plan.push_back(rc);
      ptr_[c.ugv] += c.moves;
      stops.push_back({i, static_cast<int>(next_[i]), c.ugv, t.ugvs[c.ugv].node});
      std::fill(blocked_.begin(), blocked_.end(), 0);
      if (dfs(t)) return true;
      stops.pop_back();
      ptr_[c.ugv] -= c.moves;
      plan.resize(mark);
      blocked_ = saved_blocked;
    }

    if (unblocked > 1) {
      // Let the other UAVs act first.
      blocked_[i] = 1;
      if (dfs(st)) return true;
      blocked_ = saved_blocked;
    }
    if (stuck_uav < 0) stuck_uav = i;
    return false;
  }

  const Scenario& s_;
  const std::vector<UgvPatrol>& patrols_;
  const Routes& routes_;
  long budget_;
  bool partial_;
  std::vector<std::size_t> ptr_;
  std::vector<std::size_t> next_;
  std::vector<char> blocked_;
};

}  // namespace

RouteSolution repair_recharges(const Scenario& s, const std::vector<UgvPatrol>& patrols,
                               Routes routes, long budget) {
  if (static_cast<int>(routes.size()) != s.fleet.n_uav)
    throw Error("repair_recharges: one route per UAV expected");
  RepairSearch search(s, patrols, routes, budget);
  if (!search.run(initial_state(s))) {
    const int u = std::max(search.stuck_uav, 0);
    std::string msg = "no recharge schedule lets UAV " + std::to_string(u) + " fly its route";
    throw NoFeasiblePlan(msg);
  }
  RouteSolution sol;
  sol.routes = std::move(routes);
  sol.recharges = std::move(search.stops);
  sol.plan.actions = std::move(search.plan);
  sol.makespan = search.makespan;
  return sol;
}

namespace {

bool repairable(const Scenario& s, const std::vector<UgvPatrol>& patrols, const Routes& routes,
                bool partial) {
  RepairSearch probe(s, patrols, routes, 2000, partial);
  return probe.run(initial_state(s));
}

// Round robin; each UAV takes its nearest unassigned task. With `checked`,
// only tasks that keep the partial routes repairable qualify and a UAV with
// none sits the round out.
std::optional<Routes> round_robin(const Scenario& s, const std::vector<UgvPatrol>& patrols,
                                  bool checked) {
  const int n_uav = s.fleet.n_uav;
  const int n_task = static_cast<int>(s.tasks.size());
  Routes routes(n_uav);
  std::vector<Vec2> at(n_uav, s.depot);
  std::vector<char> taken(n_task, 0);
  int assigned = 0;
  for (int u = 0, idle = 0; assigned < n_task; u = (u + 1) % n_uav) {
    std::vector<int> order;
    for (int t = 0; t < n_task; ++t)
      if (!taken[t]) order.push_back(t);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return distance(at[u], s.tasks[a].position) < distance(at[u], s.tasks[b].position);
    });
    bool placed = false;
    for (int t : order) {
      routes[u].push_back(t);
      if (!checked || repairable(s, patrols, routes, assigned + 1 < n_task)) {
        taken[t] = 1;
        at[u] = s.tasks[t].position;
        ++assigned;
        placed = true;
        break;
      }
      routes[u].pop_back();
    }
    if (placed)
      idle = 0;
    else if (++idle >= n_uav)
      return std::nullopt;
  }
  return routes;
}

// Tasks in order of distance from the depot, each inserted at the
// (UAV, position) with the smallest repaired makespan.
std::optional<Routes> best_insertion(const Scenario& s, const std::vector<UgvPatrol>& patrols) {
  const int n_task = static_cast<int>(s.tasks.size());
  std::vector<int> order(n_task);
  for (int t = 0; t < n_task; ++t) order[t] = t;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return distance(s.depot, s.tasks[a].position) < distance(s.depot, s.tasks[b].position);
  });
  Routes routes(s.fleet.n_uav);
  for (int k = 0; k < n_task; ++k) {
    double best = kInf;
    Routes chosen;
    for (std::size_t u = 0; u < routes.size(); ++u)
      for (std::size_t pos = 0; pos <= routes[u].size(); ++pos) {
        Routes r = routes;
        r[u].insert(r[u].begin() + pos, order[k]);
        RepairSearch probe(s, patrols, r, 2000, k + 1 < n_task);
        if (probe.run(initial_state(s)) && probe.makespan < best) {
          best = probe.makespan;
          chosen = std::move(r);
        }
      }
    if (best == kInf) return std::nullopt;
    routes = std::move(chosen);
  }
  return routes;
}

// Depth-first over (UAV, next task) appends with repairability pruning,
// nearest tasks first; gives up after `budget` probes.
bool route_search(const Scenario& s, const std::vector<UgvPatrol>& patrols, Routes& routes,
                  std::vector<char>& taken, int left, long& budget) {
  if (left == 0) return true;
  for (std::size_t u = 0; u < routes.size(); ++u) {
    const Vec2 at = routes[u].empty() ? s.depot : s.tasks[routes[u].back()].position;
    std::vector<int> order;
    for (int t = 0; t < static_cast<int>(taken.size()); ++t)
      if (!taken[t]) order.push_back(t);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return distance(at, s.tasks[a].position) < distance(at, s.tasks[b].position);
    });
    for (int t : order) {
      if (--budget < 0) return false;
      routes[u].push_back(t);
      taken[t] = 1;
      if (repairable(s, patrols, routes, left > 1) &&
          route_search(s, patrols, routes, taken, left - 1, budget))
        return true;
      taken[t] = 0;
      routes[u].pop_back();
    }
  }
  return false;
}

}  // namespace

RouteSolution initial_solution(const Scenario& s, const std::vector<UgvPatrol>& patrols) {
  if (auto r = round_robin(s, patrols, false); r && repairable(s, patrols, *r, false))
    return repair_recharges(s, patrols, std::move(*r));
  // Fallbacks when the plain greedy routes cannot be recharged feasibly.
  if (auto r = round_robin(s, patrols, true)) return repair_recharges(s, patrols, std::move(*r));
  if (auto r = best_insertion(s, patrols)) return repair_recharges(s, patrols, std::move(*r));
  Routes routes(s.fleet.n_uav);
  std::vector<char> taken(s.tasks.size(), 0);
  long budget = 20000;
  if (route_search(s, patrols, routes, taken, static_cast<int>(s.tasks.size()), budget))
    return repair_recharges(s, patrols, std::move(routes));
  throw NoFeasiblePlan("no feasible initial routes on the fixed UGV patrol");
}

RouteSolution initial_solution(const Scenario& s) {
  return initial_solution(s, fixed_ugv_route(s));
}

std::vector<Move> neighborhood(const Routes& routes) {
  std::vector<Move> out;
  const int n = static_cast<int>(routes.size());
  for (int a = 0; a < n; ++a) {
    const int len = static_cast<int>(routes[a].size());
    for (int i = 0; i < len; ++i)
      for (int j = i + 1; j < len; ++j) out.push_back({MoveKind::TwoOpt, a, i, a, j});
  }
  for (int a = 0; a < n; ++a) {
    const int len = static_cast<int>(routes[a].size());
    for (int i = 0; i < len; ++i)
      for (int b = 0; b < n; ++b) {
        if (b == a) {
          for (int j = 0; j < len; ++j)
            if (j != i) out.push_back({MoveKind::Relocate, a, i, a, j});
        } else {
          const int blen = static_cast<int>(routes[b].size());
          for (int j = 0; j <= blen; ++j) out.push_back({MoveKind::Relocate, a, i, b, j});
        }
      }
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int i = 0; i < static_cast<int>(routes[a].size()); ++i)
        for (int j = 0; j < static_cast<int>(routes[b].size()); ++j)
          out.push_back({MoveKind::Swap, a, i, b, j});
  return out;
}

Routes apply_move(Routes routes, const Move& m) {
  switch (m.kind) {
    case MoveKind::TwoOpt:
      std::reverse(routes[m.a].begin() + m.i, routes[m.a].begin() + m.j + 1);
      break;
    case MoveKind::Relocate: {
      const int task = routes[m.a][m.i];
      routes[m.a].erase(routes[m.a].begin() + m.i);
      routes[m.b].insert(routes[m.b].begin() + m.j, task);
      break;
    }
    case MoveKind::Swap:
      std::swap(routes[m.a][m.i], routes[m.b][m.j]);
      break;
  }
  return routes;
}

std::vector<int> moved_tasks(const Routes& routes, const Move& m) {
  switch (m.kind) {
    case MoveKind::TwoOpt:
      return {routes[m.a][m.i], routes[m.a][m.j]};
    case MoveKind::Relocate:
      return {routes[m.a][m.i]};
    case MoveKind::Swap:
      return {routes[m.a][m.i], routes[m.b][m.j]};
  }
  return {};
}

std::vector<GlsFeature> route_features(const Routes& routes) {
  std::vector<GlsFeature> out;
  for (int u = 0; u < static_cast<int>(routes.size()); ++u) {
    int prev = -1;
    for (int t : routes[u]) {
      out.push_back({u, prev, t});
      prev = t;
    }
  }
  return out;
}

bool metropolis_accept(double delta, double temperature, Rng& rng) {
  if (delta <= 0.0) return true;
  if (!(temperature > 0.0)) return false;
  return rng.uniform() < std::exp(-delta / temperature);
}

std::string iteration_log_csv(const std::vector<IterationRecord>& log) {
  std::ostringstream os;
  os.precision(17);
  os << "iteration,incumbent_makespan_s\n";
  for (const auto& r : log) os << r.iteration << ',' << r.incumbent << '\n';
  return os.str();
}

namespace {

// Memoized costing: every distinct route set is repaired and executed once.
class Evaluator {
 public:
  explicit Evaluator(const Scenario& s) : s_(s), patrols_(fixed_ugv_route(s)) {}

  double cost(const Routes& r) {
    auto it = cache_.find(r);
    if (it != cache_.end()) return it->second;
    ++evaluations_;
    double c = kInf;
    try {
      c = repair_recharges(s_, patrols_, r).makespan;
    } catch (const NoFeasiblePlan&) {
    }
    cache_.emplace(r, c);
    return c;
  }

  RouteSolution solution(const Routes& r) const { return repair_recharges(s_, patrols_, r); }
  RouteSolution initial() const { return initial_solution(s_, patrols_); }
  int evaluations() const { return evaluations_; }

 private:
  const Scenario& s_;
  std::vector<UgvPatrol> patrols_;
  std::map<Routes, double> cache_;
  int evaluations_ = 0;
};

double leg_seconds(const Scenario& s, const GlsFeature& f) {
  const Vec2 a = f.from < 0 ? s.depot : s.tasks[f.from].position;
  return distance(a, s.tasks[f.to].position) / s.fleet.uav_speed;
}

}  // namespace

double GlsPenalties::augmented(const Routes& routes, double cost) const {
  double p = 0.0;
  for (const auto& f : route_features(routes)) {
    auto it = counts.find(f);
    if (it != counts.end()) p += it->second;
  }
  return cost + lambda * p;
}

void GlsPenalties::penalize(const Scenario& s, const Routes& routes) {
  const auto feats = route_features(routes);
  auto utility = [&](const GlsFeature& f) {
    auto it = counts.find(f);
    return leg_seconds(s, f) / (1.0 + (it == counts.end() ? 0 : it->second));
  };
  double max_util = -1.0;
  for (const auto& f : feats) max_util = std::max(max_util, utility(f));
  std::vector<GlsFeature> hit;
  for (const auto& f : feats)
    if (utility(f) >= max_util - kTol) hit.push_back(f);
  for (const auto& f : hit) ++counts[f];
}

BaselineResult gls_solve(const Scenario& s, const GlsParams& params) {
  Evaluator ev(s);
  BaselineResult res;
  RouteSolution init = ev.initial();
  Routes current = init.routes;
  Routes best = current;
  double best_cost = init.makespan;

  GlsPenalties pen;
  pen.lambda = params.lambda;
  if (!(pen.lambda > 0.0)) {
    const auto feats = route_features(current);
    double sum = 0.0;
    for (const auto& f : feats) sum += leg_seconds(s, f);
    pen.lambda = feats.empty() ? 0.0 : 0.1 * sum / static_cast<double>(feats.size());
  }

  for (int iter = 1; iter <= params.max_iters; ++iter) {
    const double cur_aug = pen.augmented(current, ev.cost(current));
    double best_aug = kInf;
    Routes chosen;
    for (const Move& m : neighborhood(current)) {
      Routes r = apply_move(current, m);
      const double c = ev.cost(r);
      if (c == kInf) continue;
      if (c < best_cost - kTol) {
        best_cost = c;
        best = r;
      }
      const double a = pen.augmented(r, c);
      if (a < best_aug) {
        best_aug = a;
        chosen = std::move(r);
      }
    }
    if (best_aug < cur_aug - kTol) {
      current = std::move(chosen);
    } else {
      pen.penalize(s, current);
    }
    res.log.push_back({iter, best_cost});
  }
  res.best = ev.solution(best);
  res.evaluations = ev.evaluations();
  return res;
}

BaselineResult ts_solve(const Scenario& s, const TsParams& params) {
  Evaluator ev(s);
  BaselineResult res;
  RouteSolution init = ev.initial();
  Routes current = init.routes;
  Routes best = current;
  double best_cost = init.makespan;
  std::deque<std::vector<int>> memory;

  auto is_tabu = [&](const std::vector<int>& tasks) {
    for (const auto& entry : memory)
      for (int t : entry)
        if (std::find(tasks.begin(), tasks.end(), t) != tasks.end()) return true;
    return false;
  };

  for (int iter = 1; iter <= params.max_iters; ++iter) {
    double chosen_cost = kInf;
    Routes chosen;
    std::vector<int> chosen_tasks;
    for (const Move& m : neighborhood(current)) {
      Routes r = apply_move(current, m);
      const double c = ev.cost(r);
      if (c == kInf) continue;
      const bool aspiration = c < best_cost - kTol;
      const auto tasks = moved_tasks(current, m);
      if (!aspiration && is_tabu(tasks)) continue;
      if (c < chosen_cost) {
        chosen_cost = c;
        chosen = std::move(r);
        chosen_tasks = tasks;
      }
    }
    if (chosen_cost < kInf) {
      current = std::move(chosen);
      if (params.tenure > 0) {
        memory.push_back(std::move(chosen_tasks));
        while (static_cast<int>(memory.size()) > params.tenure) memory.pop_front();
      }
      if (chosen_cost < best_cost - kTol) {
        best_cost = chosen_cost;
        best = current;
      }
    } else if (!memory.empty()) {
      memory.pop_front();
    }
    res.log.push_back({iter, best_cost});
  }
  res.best = ev.solution(best);
  res.evaluations = ev.evaluations();
  return res;
}

BaselineResult sa_solve(const Scenario& s, const SaParams& params) {
  if (!(params.alpha > 0.0 && params.alpha < 1.0))
    throw ConfigError("sa: alpha must lie in (0, 1)");
  if (params.iters_per_temp <= 0) throw ConfigError("sa: iterations per temperature must be positive");
  Evaluator ev(s);
  Rng rng(params.seed);
  BaselineResult res;
  RouteSolution init = ev.initial();
  Routes current = init.routes;
  double current_cost = init.makespan;
  Routes best = current;
  double best_cost = current_cost;
  double temperature = params.t0 > 0.0 ? params.t0 : 0.2 * init.makespan;

  for (int iter = 1; iter <= params.iters; ++iter) {
    const auto moves = neighborhood(current);
    if (!moves.empty()) {
      const Move& m = moves[rng.below(moves.size())];
      Routes r = apply_move(current, m);
      const double c = ev.cost(r);
      if (c < kInf && metropolis_accept(c - current_cost, temperature, rng)) {
        current = std::move(r);
        current_cost = c;
        if (c < best_cost - kTol) {
          best_cost = c;
          best = current;
        }
      }
    }
    if (iter % params.iters_per_temp == 0) temperature *= params.alpha;
    res.log.push_back({iter, best_cost});
  }
  res.best = ev.solution(best);
  res.evaluations = ev.evaluations();
  return res;
}

}  // namespace coplan
