#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "coplan/geometry.hpp"

namespace coplan {

struct RoadEdge {
  int to = 0;
  double length = 0.0;  // meters
};

/// Undirected road graph over path-center points. All-pairs shortest paths are
/// computed once at construction; the network is immutable afterwards.
class RoadNetwork {
 public:
  RoadNetwork() = default;
  /// Edge lengths are the Euclidean distances between endpoints. Duplicate and
  /// self edges are dropped.
  RoadNetwork(std::vector<Vec2> nodes, const std::vector<std::pair<int, int>>& edges);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  Vec2 node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  const std::vector<RoadEdge>& neighbors(int i) const { return adjacency_.at(static_cast<std::size_t>(i)); }
  /// Sorted (a < b) edge list.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  bool adjacent(int a, int b) const;
  double edge_length(int a, int b) const;
  bool connected() const;

  /// Shortest road distance in meters; +inf when unreachable.
  double shortest_distance(int a, int b) const;
  /// Node sequence a..b along a shortest path, inclusive of both ends.
  std::vector<int> shortest_path(int a, int b) const;

  friend bool operator==(const RoadNetwork& a, const RoadNetwork& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<Vec2> nodes_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<RoadEdge>> adjacency_;
  std::vector<double> dist_;  // row-major n*n
  std::vector<int> next_;     // first hop on a shortest path, -1 if none
};

/// Seconds to drive from node a to node b along the road at `speed`.
/// Throws Error when b is unreachable from a.
double road_travel_time(const RoadNetwork& road, int a, int b, double speed);

/// k-nearest-neighbour graph over `nodes`, then shortest inter-component edges
/// added until connected.
RoadNetwork build_road_network(std::vector<Vec2> nodes, int k = 3);

}  // namespace coplan
