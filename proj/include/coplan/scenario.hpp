#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coplan/energy.hpp"
#include "coplan/geometry.hpp"
#include "coplan/road_network.hpp"

namespace coplan {

struct TaskPoint {
  int index = 0;
  Vec2 position;
  bool visited = false;

  friend bool operator==(const TaskPoint&, const TaskPoint&) = default;
};

struct Fleet {
  int n_uav = 1;
  int n_ugv = 1;
  double uav_speed = 10.0;          // m/s
  double ugv_speed = 4.5;           // m/s
  double uav_capacity = 287'700.0;  // J
  double ugv_capacity = 36'810'000.0;
  double recharge_seconds = 0.0;    // docked time per recharge

  friend bool operator==(const Fleet&, const Fleet&) = default;
};

/// Static mission description. UGVs start on the road node at the depot,
/// UAVs start at the depot with full batteries.
struct Scenario {
  std::string id;
  Vec2 area{10'000.0, 10'000.0};  // width, height in meters
  Vec2 depot;
  int depot_node = 0;
  std::vector<TaskPoint> tasks;
  RoadNetwork road;
  Fleet fleet;
  EnergyModelParams energy;
  std::uint64_t rng_seed = 0;

  int n_tasks() const { return static_cast<int>(tasks.size()); }
  int n_paths() const { return static_cast<int>(road.size()); }

  /// Throws ParseError naming the first violated invariant.
  void validate() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct GenConfig {
  int n_tasks = 15;
  int n_road_nodes = 5;
  int n_uav = 1;
  int n_ugv = 1;
  Vec2 area{10'000.0, 10'000.0};
  int road_k = 3;
  Fleet fleet;  // counts are overwritten by n_uav / n_ugv
  EnergyModelParams energy;
};

/// Pure function of (config, seed). Road nodes are sampled first; node 0 is
/// the depot. Tasks closer than 1 m to any road node are resampled.
Scenario generate_scenario(const GenConfig& config, std::uint64_t seed);

/// Identifier "T<tasks>-P<paths>-A<uavs>G<ugvs>-s<seed>".
std::string scenario_id(const GenConfig& config, std::uint64_t seed);

inline constexpr int kScenarioFormatVersion = 1;

std::string scenario_to_string(const Scenario& s);
Scenario scenario_from_string(const std::string& text);
void save_scenario(const Scenario& s, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace coplan
