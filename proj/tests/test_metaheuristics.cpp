#include <algorithm>
#include <cmath>
#include <limits>

#include "coplan/error.hpp"
#include "coplan/metaheuristics.hpp"
#include "coplan/oracle.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace coplan;
using namespace coplan::testing;

namespace {

// Floyd-Warshall distances and a nearest-neighbour tour built from them.
double brute_nn_tour(const RoadNetwork& road, const std::vector<int>& share, int depot) {
  const int n = static_cast<int>(road.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (int a = 0; a < n; ++a) d[a][a] = 0;
  for (auto [a, b] : road.edges()) d[a][b] = d[b][a] = distance(road.node(a), road.node(b));
  for (int k = 0; k < n; ++k)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) d[a][b] = std::min(d[a][b], d[a][k] + d[k][b]);
  int cur = share[0];
  for (int x : share)
    if (d[depot][x] < d[depot][cur]) cur = x;
  const int first = cur;
  std::vector<int> left;
  for (int x : share)
    if (x != cur) left.push_back(x);
  double len = 0;
  while (!left.empty()) {
    auto it = std::min_element(left.begin(), left.end(),
                               [&](int a, int b) { return d[cur][a] < d[cur][b] || (d[cur][a] == d[cur][b] && a < b); });
    len += d[cur][*it];
    cur = *it;
    left.erase(it);
  }
  return share.size() > 1 ? len + d[cur][first] : 0.0;
}

void check_partition(const Scenario& s, const RouteSolution& sol) {
  std::vector<int> seen;
  for (const auto& r : sol.routes) seen.insert(seen.end(), r.begin(), r.end());
  std::sort(seen.begin(), seen.end());
  REQUIRE(seen.size() == s.tasks.size());
  for (std::size_t k = 0; k < seen.size(); ++k) CHECK(seen[k] == static_cast<int>(k));
}

void check_feasible(const Scenario& s, const RouteSolution& sol) {
  check_partition(s, sol);
  const auto trace = execute_plan(s, sol.plan);
  CHECK(metrics(trace).makespan == sol.makespan);
}

void check_monotone(const BaselineResult& r) {
  for (std::size_t k = 1; k < r.log.size(); ++k) CHECK(r.log[k].incumbent <= r.log[k - 1].incumbent);
}

}  // namespace

TEST_CASE("fixed_ugv_route shares and tours") {
  SUBCASE("single node is stationary") {
    const auto s = line_scenario({{1000, 0}});
    const auto p = fixed_ugv_route(s);
    REQUIRE(p.size() == 1);
    CHECK(p[0].stationary());
    CHECK(p[0].tour == std::vector<int>{0});
    CHECK(p[0].at(5) == 0);
  }
  SUBCASE("two UGVs, four nodes") {
    auto s = line_scenario({{1000, 0}}, {{0, 0}, {1000, 0}, {2000, 0}, {3000, 0}}, {{0, 1}, {1, 2}, {2, 3}}, 1, 2);
    const auto p = fixed_ugv_route(s);
    REQUIRE(p.size() == 2);
    auto sorted = [](std::vector<int> v) { std::sort(v.begin(), v.end()); return v; };
    CHECK(sorted(p[0].tour) == std::vector<int>{0, 2});
    CHECK(sorted(p[1].tour) == std::vector<int>{1, 3});
    CHECK(p[1].walk == std::vector<int>{0, 1, 2, 3, 2});
    CHECK(p[1].cycle_start == 1);
    CHECK(p[1].at(5) == 1);
    CHECK(p[1].at(6) == 2);
    CHECK(p[1].tour_length == doctest::Approx(4000.0));
  }
  SUBCASE("tour length matches a brute-force nearest-neighbour oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = generate_scenario(tiny_config(3, 5), seed);
      const auto p = fixed_ugv_route(s);
      CHECK(p[0].tour_length == doctest::Approx(brute_nn_tour(s.road, {0, 1, 2, 3, 4}, s.depot_node)).epsilon(1e-12));
      // Walk follows road edges.
      for (std::size_t k = 0; k + 1 < p[0].walk.size() + 3; ++k)
        CHECK(s.road.adjacent(p[0].at(k), p[0].at(k + 1)));
    }
  }
}

TEST_CASE("initial_solution") {
  SUBCASE("one task") {
    const auto s = line_scenario({{3000, 4000}});
    const auto sol = initial_solution(s);
    CHECK(sol.routes == std::vector<std::vector<int>>{{0}});
    CHECK(sol.recharges.empty());
    CHECK(sol.makespan == doctest::Approx(500.0));
  }
  SUBCASE("out of range task") {
    const auto s = line_scenario({{15000, 0}});
    CHECK_THROWS_AS(initial_solution(s), NoFeasiblePlan);
  }
  SUBCASE("random T6 instances are feasible") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = generate_scenario(tiny_config(6, 3, 2, 1), seed);
      try {
        check_feasible(s, initial_solution(s));
      } catch (const NoFeasiblePlan&) {
        CHECK_THROWS_AS(solve_exact(s), NoFeasiblePlan);
      }
    }
  }
}

TEST_CASE("repair_recharges") {
  const auto s = line_scenario({{7000, 0}, {0, 7000}});
  const auto patrols = fixed_ugv_route(s);
  SUBCASE("feasible route unchanged") {
    const auto s1 = line_scenario({{1000, 0}, {2000, 0}});
    const auto sol = repair_recharges(s1, fixed_ugv_route(s1), {{0, 1}});
    CHECK(sol.recharges.empty());
    CHECK(sol.plan.actions == std::vector<Action>{Action::visit(0, 0), Action::visit(0, 1)});
  }
  SUBCASE("one stop") {
    const auto sol = repair_recharges(s, patrols, {{0, 1}});
    REQUIRE(sol.recharges.size() == 1);
    CHECK(sol.recharges[0] == RechargeStop{0, 1, 0, 0});
    check_feasible(s, sol);
  }
  SUBCASE("zero capacity") {
    auto s0 = s;
    s0.fleet.uav_capacity = 0;
    CHECK_THROWS_AS(repair_recharges(s0, patrols, {{0, 1}}), NoFeasiblePlan);
  }
  SUBCASE("UGV drives along its patrol to meet the UAV") {
    // Only the far node leaves enough reserve to come back from task 1.
    auto s2 = line_scenario({{7000, 0}, {9000, 0}, {9500, 0}}, {{0, 0}, {1000, 0}, {2000, 0}}, {{0, 1}, {1, 2}});
    const auto sol = repair_recharges(s2, fixed_ugv_route(s2), {{0, 1, 2}});
    REQUIRE(sol.recharges.size() == 1);
    CHECK(sol.recharges[0].node == 2);
    check_feasible(s2, sol);
  }
}

TEST_CASE("neighborhood counts") {
  CHECK(neighborhood({{0}}).empty());
  const auto one = neighborhood({{0, 1, 2}});
  auto count = [](const std::vector<Move>& v, MoveKind k) {
    return std::count_if(v.begin(), v.end(), [&](const Move& m) { return m.kind == k; });
  };
  CHECK(count(one, MoveKind::TwoOpt) == 3);
  CHECK(count(one, MoveKind::Relocate) == 6);
  CHECK(one.size() == 9);
  // Two routes of sizes 2 and 1: 1 reversal; within 2 + between 2*2 + 1*3 relocations; 2 swaps.
  const auto two = neighborhood({{0, 1}, {2}});
  CHECK(count(two, MoveKind::TwoOpt) == 1);
  CHECK(count(two, MoveKind::Relocate) == 9);
  CHECK(count(two, MoveKind::Swap) == 2);
  // Every move keeps the task multiset.
  for (const Move& m : two) {
    auto r = apply_move({{0, 1}, {2}}, m);
    std::vector<int> all;
    for (auto& x : r) all.insert(all.end(), x.begin(), x.end());
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<int>{0, 1, 2});
  }
  CHECK(apply_move({{0, 1, 2, 3}}, {MoveKind::TwoOpt, 0, 1, 0, 3}) == std::vector<std::vector<int>>{{0, 3, 2, 1}});
  CHECK(apply_move({{0, 1, 2}}, {MoveKind::Relocate, 0, 0, 0, 2}) == std::vector<std::vector<int>>{{1, 2, 0}});
}

TEST_CASE("GLS penalties") {
  const auto s = line_scenario({{1000, 0}, {0, 3000}, {2000, 2000}});
  GlsPenalties pen;
  pen.lambda = 7.0;
  const std::vector<std::vector<int>> r{{0, 1, 2}};
  CHECK(pen.augmented(r, 100.0) == 100.0);
  pen.penalize(s, r);
  // Longest leg is 0 -> 1 (sqrt(1e6 + 9e6) m).
  CHECK(pen.counts.size() == 1);
  CHECK(pen.counts.count(GlsFeature{0, 0, 1}) == 1);
  CHECK(pen.augmented(r, 100.0) == 107.0);
  CHECK(pen.augmented({{2, 1, 0}}, 100.0) == 100.0);
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    pen.penalize(s, r);
    CHECK(pen.augmented(r, 100.0) > 100.0);
    CHECK(pen.augmented({{1, 0, 2}}, 100.0) >= 100.0);
  }
  for (const auto& [f, c] : pen.counts) CHECK(c >= 0);
}

TEST_CASE("metropolis acceptance") {
  Rng rng(5);
  CHECK(metropolis_accept(-1.0, 1.0, rng));
  CHECK(metropolis_accept(0.0, 0.0, rng));
  CHECK_FALSE(metropolis_accept(1.0, 0.0, rng));
  const int n = 10000;
  int hits = 0;
  for (int k = 0; k < n; ++k) hits += metropolis_accept(2.0, 3.0, rng);
  const double p = std::exp(-2.0 / 3.0);
  CHECK(std::abs(hits - n * p) <= 3 * std::sqrt(n * p * (1 - p)));
}

TEST_CASE("solvers: single task matches the oracle") {
  const auto s = line_scenario({{3000, 4000}});
  const double opt = solve_exact(s).metrics.makespan;
  CHECK(gls_solve(s, {.max_iters = 10}).best.makespan == doctest::Approx(opt));
  CHECK(ts_solve(s, {.max_iters = 10}).best.makespan == doctest::Approx(opt));
  CHECK(sa_solve(s, {.iters = 10}).best.makespan == doctest::Approx(opt));
}

TEST_CASE("solvers: feasibility, anytime, determinism, never worse than initial") {
  int matched[3] = {0, 0, 0};
  int total = 0;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto s = generate_scenario(tiny_config(4, 2, 2, 1), seed);
    double init = 0;
    try {
      init = initial_solution(s).makespan;
    } catch (const NoFeasiblePlan&) {
      continue;
    }
    const double opt = solve_exact(s).metrics.makespan;
    ++total;
    const BaselineResult rs[3] = {gls_solve(s, {.max_iters = 60, .seed = seed}),
                                  ts_solve(s, {.max_iters = 60, .seed = seed}),
                                  sa_solve(s, {.iters = 300, .seed = seed})};
    for (int k = 0; k < 3; ++k) {
      check_feasible(s, rs[k].best);
      check_monotone(rs[k]);
      CHECK(rs[k].best.makespan <= init);
      CHECK(rs[k].best.makespan >= opt - 1e-9);
      if (rs[k].best.makespan <= opt + 1e-6) ++matched[k];
    }
    CHECK(sa_solve(s, {.iters = 300, .seed = seed}).best.plan == rs[2].best.plan);
    CHECK(gls_solve(s, {.max_iters = 60, .seed = seed}).best.plan == rs[0].best.plan);
  }
  REQUIRE(total > 0);
  MESSAGE("T4 optimum matched: gls " << matched[0] << "/" << total << ", ts " << matched[1] << "/" << total
                                     << ", sa " << matched[2] << "/" << total);
}

TEST_CASE("iteration log CSV") {
  const auto csv = iteration_log_csv({{1, 10.5}, {2, 9.25}});
  CHECK(csv == "iteration,incumbent_makespan_s\n1,10.5\n2,9.25\n");
}
