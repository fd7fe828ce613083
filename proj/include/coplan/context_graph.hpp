#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "coplan/dynamics.hpp"
#include "coplan/scenario.hpp"

namespace coplan {

enum class NodeType : std::uint8_t { Task = 0, Path = 1, Uav = 2, Ugv = 3 };
inline constexpr int kNodeTypes = 4;

/// Connection radii in meters; an edge exists when distance <= radius.
struct RadiusConfig {
  double intra = 0.0;
  double uav = 0.0;
  double ugv = 0.0;

  /// Half the area diagonal for every set.
  static RadiusConfig defaults_for(const Scenario& s);
  static RadiusConfig unbounded();
};

/// Typed graph fed to the encoder. Nodes are ordered tasks, paths, UAVs, UGVs,
/// each by index. Features (row-major per type):
///   task [x, y, visited]   path [x, y]   uav [x, y, energy/capacity]
///   ugv  [x, y, x_uav0, y_uav0, x_uav1, ...]
/// with coordinates divided by the area size. Edge sets are dense symmetric
/// 0/1 matrices without self loops.
struct ContextGraph {
  std::array<int, kNodeTypes> counts{};
  std::array<int, kNodeTypes> widths{};
  std::array<std::vector<double>, kNodeTypes> features;
  std::vector<std::uint8_t> intra;  // same-type pairs
  std::vector<std::uint8_t> uav;    // UAV <-> {UGV, task}
  std::vector<std::uint8_t> ugv;    // UGV <-> {UAV, path}
  std::vector<Vec2> positions;      // meters, for inspection

  int size() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
  int offset(NodeType t) const;
  NodeType type_of(int node) const;
  bool edge(const std::vector<std::uint8_t>& set, int i, int j) const { return set[i * size() + j] != 0; }
};

ContextGraph build_context_graph(const Scenario& s, const WorldState& state, const RadiusConfig& radii);
inline ContextGraph build_context_graph(const Scenario& s, const WorldState& state) {
  return build_context_graph(s, state, RadiusConfig::defaults_for(s));
}

}  // namespace coplan
