#include "coplan/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "coplan/error.hpp"

namespace coplan {

namespace {

const std::vector<std::string> kMethods = {"oracle", "greedy", "gls", "ts", "sa", "mlp", "copcs"};

std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

struct MeanStd {
  double mean = 0.0, sd = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.sd = std::sqrt(ss / static_cast<double>(xs.size()));
  return r;
}

}  // namespace

std::string mission_config(const std::string& scenario_id) {
  const auto cut = scenario_id.rfind("-s");
  return cut == std::string::npos ? scenario_id : scenario_id.substr(0, cut);
}

bool known_method(const std::string& method) {
  return std::find(kMethods.begin(), kMethods.end(), method) != kMethods.end();
}

const Model* LoadedModels::find(const std::string& method) const {
  for (const auto& [name, m] : models)
    if (name == method) return &m;
  return nullptr;
}

LoadedModels load_models(const std::vector<std::string>& methods, const MethodParams& params) {
  LoadedModels out;
  for (const auto& method : methods) {
    if (!known_method(method)) throw ConfigError("unknown method '" + method + "'");
    if (method != "mlp" && method != "copcs") continue;
    if (out.find(method)) continue;
    const auto& path = method == "mlp" ? params.mlp_checkpoint : params.copcs_checkpoint;
    if (path.empty()) throw ConfigError("method " + method + " needs a checkpoint");
    if (!std::filesystem::exists(path)) throw ConfigError("checkpoint not found: " + path.string());
    Model m = load_checkpoint(path).first;
    const EncoderKind want = method == "mlp" ? EncoderKind::Mlp : EncoderKind::Hgt;
    if (m.config.encoder != want)
      throw ConfigError("checkpoint " + path.string() + " holds a " + to_string(m.config.encoder) +
                        " encoder, method " + method + " needs " + to_string(want));
    out.models.emplace_back(method, std::move(m));
  }
  return out;
}

InstanceRecord run_method(const Scenario& s, const std::string& method, const MethodParams& params,
                          const LoadedModels& models, JointPlan* plan_out) {
  InstanceRecord rec;
  rec.id = s.id;
  rec.config = mission_config(s.id);
  rec.method = method;
  const auto t0 = std::chrono::steady_clock::now();
  JointPlan plan;
  std::string status = "ok";
  try {
    if (method == "oracle") {
      SolveResult r = solve_exact(s, params.oracle);
      plan = std::move(r.plan);
      if (r.status != SolveStatus::Optimal) status = "budget_exhausted";
    } else if (method == "greedy") {
      plan = initial_solution(s).plan;
    } else if (method == "gls") {
      plan = gls_solve(s, params.gls).best.plan;
    } else if (method == "ts") {
      plan = ts_solve(s, params.ts).best.plan;
    } else if (method == "sa") {
      plan = sa_solve(s, params.sa).best.plan;
    } else if (method == "mlp" || method == "copcs") {
      const Model* m = models.find(method);
      if (!m) throw ConfigError("no model loaded for " + method);
      plan = decode_plan(s, *m, params.decode);
    } else {
      throw ConfigError("unknown method '" + method + "'");
    }
  } catch (const NoFeasiblePlan& e) {
    status = "no_feasible_plan";
    rec.detail = e.what();
  } catch (const DeadEnd& e) {
    status = "dead_end";
    rec.detail = e.what();
  }
  if (plan.actions.empty() && status == "budget_exhausted") status = "budget_exhausted_no_plan";
  if (status == "ok" || status == "budget_exhausted") {
    try {
      rec.metrics = metrics(execute_plan(s, plan));
    } catch (const InfeasiblePlan& e) {
      status = "invalid_plan";
      rec.detail = e.what();
      plan.actions.clear();
    }
  }
  rec.status = status;
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (plan_out) *plan_out = std::move(plan);
  return rec;
}

ResultsTable summarize(std::vector<InstanceRecord> records) {
  ResultsTable table;
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<const InstanceRecord*>> groups;
  for (const auto& r : records) {
    auto key = std::make_pair(r.config, r.method);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&r);
  }
  for (const auto& key : keys) {
    ResultRow row;
    row.config = key.first;
    row.method = key.second;
    std::vector<double> mk, ua, ug;
    double wall = 0.0;
    for (const auto* r : groups[key]) {
      ++row.n;
      wall += r->wall_ms;
      if (!r->feasible()) continue;
      ++row.n_feasible;
      mk.push_back(r->metrics.makespan);
      ua.push_back(r->metrics.uav_energy);
      ug.push_back(r->metrics.ugv_energy);
    }
    row.feasibility_rate = static_cast<double>(row.n_feasible) / row.n;
    const auto a = mean_std(mk), b = mean_std(ua), c = mean_std(ug);
    row.mean_makespan = a.mean;
    row.std_makespan = a.sd;
    row.mean_uav_kj = b.mean;
    row.std_uav_kj = b.sd;
    row.mean_ugv_kj = c.mean;
    row.std_ugv_kj = c.sd;
    row.mean_wall_ms = wall / row.n;
    table.rows.push_back(row);
  }
  table.records = std::move(records);
  return table;
}

ResultsTable run_benchmark(const BenchmarkConfig& config) {
  if (config.methods.empty()) throw ConfigError("benchmark needs at least one method");
  if (!std::filesystem::is_directory(config.dataset))
    throw ConfigError("dataset directory not found: " + config.dataset.string());
  const LoadedModels models = load_models(config.methods, config.params);
  const auto items = load_dataset(config.dataset, config.split);
  if (items.empty()) throw ConfigError("split '" + config.split + "' of " + config.dataset.string() + " is empty");

  const std::size_t n_methods = config.methods.size();
  std::vector<InstanceRecord> records(items.size() * n_methods);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      for (std::size_t k = 0; k < n_methods; ++k) {
        InstanceRecord r = run_method(items[i].scenario, config.methods[k], config.params, models);
        r.index = static_cast<int>(i);
        records[i * n_methods + k] = std::move(r);
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(items.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ResultsTable table = summarize(std::move(records));
  if (!config.out_dir.empty()) {
    write_text(config.out_dir / "per_instance.csv", per_instance_csv(table.records));
    write_text(config.out_dir / "timings.csv", timings_csv(table.records));
    write_text(config.out_dir / "summary.csv", summary_csv(table));
  }
  return table;
}

std::string per_instance_csv(const std::vector<InstanceRecord>& records) {
  std::string out = "index,id,config,method,status,makespan_s,uav_energy_kJ,ugv_energy_kJ\n";
  for (const auto& r : records) {
    out += std::to_string(r.index) + "," + r.id + "," + r.config + "," + r.method + "," + r.status + ",";
    if (r.feasible())
      out += fmt(r.metrics.makespan) + "," + fmt(r.metrics.uav_energy) + "," + fmt(r.metrics.ugv_energy);
    else
      out += ",,";
    out += "\n";
  }
  return out;
}

std::string timings_csv(const std::vector<InstanceRecord>& records) {
  std::string out = "index,id,method,wall_ms\n";
  for (const auto& r : records)
    out += std::to_string(r.index) + "," + r.id + "," + r.method + "," + fmt(r.wall_ms, 3) + "\n";
  return out;
}

std::string summary_csv(const ResultsTable& table) {
  std::string out =
      "config,method,n,n_feasible,feasibility_rate,mean_makespan_s,std_makespan_s,mean_uav_energy_kJ,"
      "std_uav_energy_kJ,mean_ugv_energy_kJ,std_ugv_energy_kJ,mean_wall_ms\n";
  for (const auto& r : table.rows) {
    out += r.config + "," + r.method + "," + std::to_string(r.n) + "," + std::to_string(r.n_feasible) + "," +
           fmt(r.feasibility_rate) + "," + fmt(r.mean_makespan) + "," + fmt(r.std_makespan) + "," +
           fmt(r.mean_uav_kj) + "," + fmt(r.std_uav_kj) + "," + fmt(r.mean_ugv_kj) + "," + fmt(r.std_ugv_kj) +
           "," + fmt(r.mean_wall_ms, 3) + "\n";
  }
  return out;
}

namespace {

const char* kUavColors[] = {"#e6194b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#bfef45", "#469990"};

}  // namespace

std::string trace_svg(const Scenario& s, const ExecutionTrace& trace) {
  const double w = s.area.x, h = s.area.y;
  const double unit = std::max(w, h) / 1000.0;
  // y grows upward in the scenario, downward in SVG
  auto X = [&](double x) { return fmt(x, 1); };
  auto Y = [&](double y) { return fmt(h - y, 1); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << fmt(-20 * unit, 1) << " " << fmt(-20 * unit, 1)
    << " " << fmt(w + 40 * unit, 1) << " " << fmt(h + 40 * unit, 1) << "\">\n";
  o << "<rect class=\"area\" x=\"0\" y=\"0\" width=\"" << X(w) << "\" height=\"" << fmt(h, 1)
    << "\" fill=\"#dcdcdc\" stroke=\"#000\" stroke-width=\"" << fmt(2 * unit, 1) << "\"/>\n";
  for (const auto& [a, b] : s.road.edges())
    o << "<line class=\"road\" x1=\"" << X(s.road.node(a).x) << "\" y1=\"" << Y(s.road.node(a).y) << "\" x2=\""
      << X(s.road.node(b).x) << "\" y2=\"" << Y(s.road.node(b).y) << "\" stroke=\"#9a9a9a\" stroke-width=\""
      << fmt(4 * unit, 1) << "\"/>\n";
  for (int i = 0; i < s.n_paths(); ++i)
    o << "<circle class=\"node\" cx=\"" << X(s.road.node(i).x) << "\" cy=\"" << Y(s.road.node(i).y) << "\" r=\""
      << fmt(12 * unit, 1) << "\" fill=\"#2ca02c\" stroke=\"#000\"/>\n";
  for (const auto& t : s.tasks)
    o << "<circle class=\"task\" cx=\"" << X(t.position.x) << "\" cy=\"" << Y(t.position.y) << "\" r=\""
      << fmt(10 * unit, 1) << "\" fill=\"#fff\" stroke=\"#000\"/>\n";
  for (const auto& ev : trace.events) {
    const char* color = ev.robot_kind == RobotKind::Ugv ? "#000" : kUavColors[ev.robot % 8];
    const std::string who = std::string(ev.robot_kind == RobotKind::Uav ? "uav" : "ugv") + std::to_string(ev.robot);
    switch (ev.kind) {
      case EventKind::Fly:
      case EventKind::Drive:
        o << "<line class=\"event " << to_string(ev.kind) << " " << who << "\" x1=\"" << X(ev.from.x) << "\" y1=\""
          << Y(ev.from.y) << "\" x2=\"" << X(ev.to.x) << "\" y2=\"" << Y(ev.to.y) << "\" stroke=\"" << color
          << "\" stroke-width=\"" << fmt((ev.kind == EventKind::Drive ? 6 : 3) * unit, 1) << "\"/>\n";
        break;
      case EventKind::Recharge:
        o << "<circle class=\"event recharge " << who << "\" cx=\"" << X(ev.to.x) << "\" cy=\"" << Y(ev.to.y)
          << "\" r=\"" << fmt(20 * unit, 1) << "\" fill=\"none\" stroke=\"" << color << "\"><title>" << who
          << " recharge t=" << fmt(ev.t_start, 1) << "s</title></circle>\n";
        break;
      case EventKind::Wait:
      case EventKind::Visit:
        o << "<circle class=\"event " << to_string(ev.kind) << " " << who << "\" cx=\"" << X(ev.to.x) << "\" cy=\""
          << Y(ev.to.y) << "\" r=\"" << fmt(4 * unit, 1) << "\" fill=\"" << color << "\"><title>" << who << " "
          << to_string(ev.kind) << " t=" << fmt(ev.t_start, 1) << "s</title></circle>\n";
        break;
    }
  }
  o << "</svg>\n";
  return o.str();
}

void export_trace_svg(const Scenario& s, const ExecutionTrace& trace, const std::filesystem::path& path) {
  write_text(path, trace_svg(s, trace));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace coplan
