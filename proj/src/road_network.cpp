#include "coplan/road_network.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

#include "coplan/error.hpp"

namespace coplan {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

RoadNetwork::RoadNetwork(std::vector<Vec2> nodes, const std::vector<std::pair<int, int>>& edges)
    : nodes_(std::move(nodes)) {
  const int n = static_cast<int>(nodes_.size());
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw Error("road edge references unknown node");
    if (a == b) continue;
    edges_.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  adjacency_.assign(nodes_.size(), {});
  for (auto [a, b] : edges_) {
    const double len = distance(nodes_[a], nodes_[b]);
    adjacency_[a].push_back({b, len});
    adjacency_[b].push_back({a, len});
  }
  for (auto& adj : adjacency_)
    std::sort(adj.begin(), adj.end(), [](const RoadEdge& x, const RoadEdge& y) { return x.to < y.to; });

  // Dijkstra from every source; n is small.
  dist_.assign(nodes_.size() * nodes_.size(), kInf);
  next_.assign(nodes_.size() * nodes_.size(), -1);
  for (int src = 0; src < n; ++src) {
    std::vector<double> d(n, kInf);
    std::vector<int> parent(n, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    d[src] = 0.0;
    pq.push({0.0, src});
    while (!pq.empty()) {
      auto [du, u] = pq.top();
      pq.pop();
      if (du > d[u]) continue;
      for (const auto& e : adjacency_[u]) {
        const double nd = du + e.length;
        if (nd < d[e.to]) {
          d[e.to] = nd;
          parent[e.to] = u;
          pq.push({nd, e.to});
        }
      }
    }
    for (int dst = 0; dst < n; ++dst) {
      dist_[src * n + dst] = d[dst];
      if (dst == src || parent[dst] < 0) continue;
      int hop = dst;
      while (parent[hop] != src) hop = parent[hop];
      next_[src * n + dst] = hop;
    }
  }
}

bool RoadNetwork::adjacent(int a, int b) const {
  if (a < 0 || a >= static_cast<int>(size())) return false;
  for (const auto& e : adjacency_[a])
    if (e.to == b) return true;
  return false;
}

double RoadNetwork::edge_length(int a, int b) const {
  for (const auto& e : adjacency_.at(a))
    if (e.to == b) return e.length;
  throw Error("no road edge between " + std::to_string(a) + " and " + std::to_string(b));
}

bool RoadNetwork::connected() const {
  const std::size_t n = size();
  if (n == 0) return false;
  for (std::size_t j = 0; j < n; ++j)
    if (dist_[j] == kInf) return false;
  return true;
}

double RoadNetwork::shortest_distance(int a, int b) const {
  const int n = static_cast<int>(size());
  if (a < 0 || b < 0 || a >= n || b >= n) throw Error("road node index out of range");
  return dist_[a * n + b];
}

std::vector<int> RoadNetwork::shortest_path(int a, int b) const {
  const int n = static_cast<int>(size());
  if (shortest_distance(a, b) == kInf) throw Error("road nodes are not connected");
  std::vector<int> path{a};
  while (path.back() != b) path.push_back(next_[path.back() * n + b]);
  return path;
}

double road_travel_time(const RoadNetwork& road, int a, int b, double speed) {
  if (!(speed > 0.0)) throw Error("road_travel_time: speed must be positive");
  const double d = road.shortest_distance(a, b);
  if (d == kInf)
    throw Error("road node " + std::to_string(b) + " unreachable from " + std::to_string(a));
  return d / speed;
}

RoadNetwork build_road_network(std::vector<Vec2> nodes, int k) {
  const int n = static_cast<int>(nodes.size());
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return distance(nodes[i], nodes[a]) < distance(nodes[i], nodes[b]);
    });
    int taken = 0;
    for (int j : order) {
      if (j == i) continue;
      if (taken++ >= k) break;
      edges.emplace_back(i, j);
    }
  }

  // Union-find over the kNN edges, then join components by shortest links.
  std::vector<int> comp(n);
  std::iota(comp.begin(), comp.end(), 0);
  auto find = [&](int x) {
    while (comp[x] != x) x = comp[x] = comp[comp[x]];
    return x;
  };
  for (auto [a, b] : edges) comp[find(a)] = find(b);
  for (;;) {
    double best = kInf;
    std::pair<int, int> link{-1, -1};
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        if (find(a) == find(b)) continue;
        const double d = distance(nodes[a], nodes[b]);
        if (d < best) {
          best = d;
          link = {a, b};
        }
      }
    if (link.first < 0) break;
    edges.push_back(link);
    comp[find(link.first)] = find(link.second);
  }
  return RoadNetwork(std::move(nodes), edges);
}

}  // namespace coplan
