#include "coplan/scenario.hpp"

#include <cstdio>

#include "coplan/error.hpp"

namespace coplan {

namespace {

bool inside(Vec2 p, Vec2 area) { return p.x >= 0.0 && p.y >= 0.0 && p.x <= area.x && p.y <= area.y; }

}  // namespace

void Scenario::validate() const {
  if (!(area.x > 0.0 && area.y > 0.0)) throw ParseError("area", "area must be positive");
  if (tasks.empty()) throw ParseError("tasks", "scenario needs at least one task");
  if (road.size() == 0) throw ParseError("road", "road network needs at least one node");
  if (road.size() > 64) throw ParseError("road", "at most 64 road nodes are supported");
  if (!road.connected()) throw ParseError("road", "road network is not connected");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].index != static_cast<int>(i))
      throw ParseError("tasks", "task indices must be 0..n-1 in order");
    if (!inside(tasks[i].position, area))
      throw ParseError("tasks", "task " + std::to_string(i) + " lies outside the area");
  }
  for (std::size_t i = 0; i < road.size(); ++i)
    if (!inside(road.nodes()[i], area))
      throw ParseError("road", "road node " + std::to_string(i) + " lies outside the area");
  if (depot_node < 0 || depot_node >= n_paths())
    throw ParseError("depot_node", "depot node index out of range");
  if (!(road.node(depot_node) == depot))
    throw ParseError("depot", "depot must coincide with its road node");
  if (fleet.n_uav < 1 || fleet.n_ugv < 1) throw ParseError("fleet", "fleet needs at least one UAV and one UGV");
  if (!(fleet.uav_speed > 0.0 && fleet.ugv_speed > 0.0)) throw ParseError("fleet", "speeds must be positive");
  if (!(fleet.uav_capacity > 0.0 && fleet.ugv_capacity > 0.0))
    throw ParseError("fleet", "capacities must be positive");
  if (!(fleet.recharge_seconds >= 0.0)) throw ParseError("fleet", "recharge time must be nonnegative");
  for (int i = 0; i <= 40; ++i)
    if (!(uav_power(energy, 0.5 * i) > 0.0)) throw ParseError("energy", "UAV power must be positive on [0, 20] m/s");
  if (!(energy.ugv_affine[0] >= 0.0 && energy.ugv_affine[1] > 0.0))
    throw ParseError("energy", "UGV power must be positive for q >= 0");
}

std::string scenario_id(const GenConfig& config, std::uint64_t seed) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "T%d-P%d-A%dG%d-s%llu", config.n_tasks, config.n_road_nodes, config.n_uav,
                config.n_ugv, static_cast<unsigned long long>(seed));
  return buf;
}

Scenario generate_scenario(const GenConfig& config, std::uint64_t seed) {
  if (config.n_tasks <= 0) throw ConfigError("n_tasks must be positive");
  if (config.n_road_nodes <= 0) throw ConfigError("n_road_nodes must be positive");
  if (config.n_road_nodes > 64) throw ConfigError("at most 64 road nodes are supported");
  if (config.n_uav <= 0 || config.n_ugv <= 0) throw ConfigError("team sizes must be positive");
  if (!(config.area.x > 0.0 && config.area.y > 0.0)) throw ConfigError("area must be positive");

  Rng rng(seed);
  std::vector<Vec2> nodes;
  for (int i = 0; i < config.n_road_nodes; ++i)
    nodes.push_back({rng.uniform(0.0, config.area.x), rng.uniform(0.0, config.area.y)});

  Scenario s;
  s.id = scenario_id(config, seed);
  s.area = config.area;
  s.depot = nodes.front();
  s.depot_node = 0;
  s.rng_seed = seed;
  s.fleet = config.fleet;
  s.fleet.n_uav = config.n_uav;
  s.fleet.n_ugv = config.n_ugv;
  s.energy = config.energy;

  for (int i = 0; i < config.n_tasks; ++i) {
    Vec2 p;
    for (;;) {
      p = {rng.uniform(0.0, config.area.x), rng.uniform(0.0, config.area.y)};
      bool near_road = false;
      for (const auto& n : nodes) near_road = near_road || distance(p, n) < 1.0;
      if (!near_road) break;
    }
    s.tasks.push_back({i, p, false});
  }
  s.road = build_road_network(std::move(nodes), config.road_k);
  s.validate();
  return s;
}

}  // namespace coplan
