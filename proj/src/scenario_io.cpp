#include <fstream>
#include <sstream>

#include "json.hpp"

#include "coplan/error.hpp"
#include "coplan/scenario.hpp"

namespace coplan {

using nlohmann::json;

namespace {

const json& field(const json& j, const std::string& key, const std::string& path) {
  const std::string name = path.empty() ? key : path + "." + key;
  if (!j.is_object() || !j.contains(key)) throw ParseError(name, "missing field " + name);
  return j.at(key);
}

template <class T>
T get(const json& j, const std::string& key, const std::string& path = "") {
  const json& v = field(j, key, path);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    const std::string name = path.empty() ? key : path + "." + key;
    throw ParseError(name, "bad value for field " + name);
  }
}

json point(Vec2 p) { return json::array({p.x, p.y}); }

Vec2 to_point(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError(name, "field " + name + " must be an [x, y] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string scenario_to_string(const Scenario& s) {
  json j;
  j["format_version"] = kScenarioFormatVersion;
  j["id"] = s.id;
  j["rng_seed"] = s.rng_seed;
  j["area_m"] = point(s.area);
  j["depot_m"] = point(s.depot);
  j["depot_node"] = s.depot_node;
  json tasks = json::array();
  for (const auto& t : s.tasks)
    tasks.push_back({{"index", t.index}, {"position_m", point(t.position)}, {"visited", t.visited}});
  j["tasks"] = tasks;
  json nodes = json::array();
  for (const auto& n : s.road.nodes()) nodes.push_back(point(n));
  json edges = json::array();
  for (auto [a, b] : s.road.edges()) edges.push_back(json::array({a, b}));
  j["road"] = {{"nodes_m", nodes}, {"edges", edges}};
  j["fleet"] = {{"n_uav", s.fleet.n_uav},
                {"n_ugv", s.fleet.n_ugv},
                {"uav_speed_mps", s.fleet.uav_speed},
                {"ugv_speed_mps", s.fleet.ugv_speed},
                {"uav_capacity_J", s.fleet.uav_capacity},
                {"ugv_capacity_J", s.fleet.ugv_capacity},
                {"recharge_s", s.fleet.recharge_seconds}};
  j["energy"] = {{"uav_power_W_cubic", s.energy.uav_poly}, {"ugv_power_W_affine", s.energy.ugv_affine}};
  return j.dump(2) + "\n";
}

Scenario scenario_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("scenario file is not valid JSON: ") + e.what());
  }
  const int version = get<int>(j, "format_version");
  if (version != kScenarioFormatVersion)
    throw ParseError("format_version", "unsupported format_version " + std::to_string(version));

  Scenario s;
  s.id = get<std::string>(j, "id");
  s.rng_seed = get<std::uint64_t>(j, "rng_seed");
  s.area = to_point(field(j, "area_m", ""), "area_m");
  s.depot = to_point(field(j, "depot_m", ""), "depot_m");
  s.depot_node = get<int>(j, "depot_node");

  const json& tasks = field(j, "tasks", "");
  if (!tasks.is_array()) throw ParseError("tasks", "field tasks must be a list");
  for (const auto& t : tasks) {
    TaskPoint tp;
    tp.index = get<int>(t, "index", "tasks");
    tp.position = to_point(field(t, "position_m", "tasks"), "tasks.position_m");
    tp.visited = get<bool>(t, "visited", "tasks");
    s.tasks.push_back(tp);
  }

  const json& road = field(j, "road", "");
  std::vector<Vec2> nodes;
  for (const auto& n : field(road, "nodes_m", "road")) nodes.push_back(to_point(n, "road.nodes_m"));
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : field(road, "edges", "road")) {
    if (!e.is_array() || e.size() != 2) throw ParseError("road.edges", "road edges must be [a, b] pairs");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  try {
    s.road = RoadNetwork(std::move(nodes), edges);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError("road.edges", e.what());
  }

  const json& fleet = field(j, "fleet", "");
  s.fleet.n_uav = get<int>(fleet, "n_uav", "fleet");
  s.fleet.n_ugv = get<int>(fleet, "n_ugv", "fleet");
  s.fleet.uav_speed = get<double>(fleet, "uav_speed_mps", "fleet");
  s.fleet.ugv_speed = get<double>(fleet, "ugv_speed_mps", "fleet");
  s.fleet.uav_capacity = get<double>(fleet, "uav_capacity_J", "fleet");
  s.fleet.ugv_capacity = get<double>(fleet, "ugv_capacity_J", "fleet");
  s.fleet.recharge_seconds = get<double>(fleet, "recharge_s", "fleet");

  const json& energy = field(j, "energy", "");
  s.energy.uav_poly = get<std::array<double, 4>>(energy, "uav_power_W_cubic", "energy");
  s.energy.ugv_affine = get<std::array<double, 2>>(energy, "ugv_power_W_affine", "energy");

  s.validate();
  return s;
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << scenario_to_string(s);
  if (!out) throw Error("failed writing " + path.string());
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_string(ss.str());
}

}  // namespace coplan
