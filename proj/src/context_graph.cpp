#include "coplan/context_graph.hpp"

#include <cmath>
#include <limits>

namespace coplan {

RadiusConfig RadiusConfig::defaults_for(const Scenario& s) {
  const double r = 0.5 * std::hypot(s.area.x, s.area.y);
  return {r, r, r};
}

RadiusConfig RadiusConfig::unbounded() {
  const double inf = std::numeric_limits<double>::infinity();
  return {inf, inf, inf};
}

int ContextGraph::offset(NodeType t) const {
  int off = 0;
  for (int k = 0; k < static_cast<int>(t); ++k) off += counts[k];
  return off;
}

NodeType ContextGraph::type_of(int node) const {
  int k = 0;
  while (k < kNodeTypes - 1 && node >= counts[k]) node -= counts[k++];
  return static_cast<NodeType>(k);
}

ContextGraph build_context_graph(const Scenario& s, const WorldState& state, const RadiusConfig& radii) {
  ContextGraph g;
  const int n_uav = static_cast<int>(state.uavs.size());
  g.counts = {s.n_tasks(), s.n_paths(), n_uav, static_cast<int>(state.ugvs.size())};
  g.widths = {3, 2, 3, 2 + 2 * n_uav};
  const double sx = s.area.x, sy = s.area.y;

  for (int i = 0; i < s.n_tasks(); ++i) {
    const Vec2 p = s.tasks[i].position;
    g.features[0].insert(g.features[0].end(), {p.x / sx, p.y / sy, state.visited[i] ? 1.0 : 0.0});
    g.positions.push_back(p);
  }
  for (const Vec2& p : s.road.nodes()) {
    g.features[1].insert(g.features[1].end(), {p.x / sx, p.y / sy});
    g.positions.push_back(p);
  }
  for (const auto& u : state.uavs) {
    g.features[2].insert(g.features[2].end(),
                         {u.position.x / sx, u.position.y / sy, u.energy / s.fleet.uav_capacity});
    g.positions.push_back(u.position);
  }
  for (const auto& v : state.ugvs) {
    g.features[3].insert(g.features[3].end(), {v.position.x / sx, v.position.y / sy});
    for (const auto& u : state.uavs) g.features[3].insert(g.features[3].end(), {u.position.x / sx, u.position.y / sy});
    g.positions.push_back(v.position);
  }

  const int n = g.size();
  g.intra.assign(n * n, 0);
  g.uav.assign(n * n, 0);
  g.ugv.assign(n * n, 0);
  auto link = [&](std::vector<std::uint8_t>& set, int i, int j, double radius) {
    if (distance(g.positions[i], g.positions[j]) <= radius) set[i * n + j] = set[j * n + i] = 1;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const NodeType ti = g.type_of(i), tj = g.type_of(j);
      if (ti == tj) {
        link(g.intra, i, j, radii.intra);
        continue;
      }
      auto pair_is = [&](NodeType a, NodeType b) { return (ti == a && tj == b) || (ti == b && tj == a); };
      if (pair_is(NodeType::Uav, NodeType::Ugv) || pair_is(NodeType::Uav, NodeType::Task))
        link(g.uav, i, j, radii.uav);
      if (pair_is(NodeType::Ugv, NodeType::Uav) || pair_is(NodeType::Ugv, NodeType::Path))
        link(g.ugv, i, j, radii.ugv);
    }
  return g;
}

}  // namespace coplan
