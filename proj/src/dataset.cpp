#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "coplan/error.hpp"
#include "coplan/oracle.hpp"
#include "coplan/tokens.hpp"

namespace coplan {

namespace {

struct Attempt {
  Scenario scenario;
  SolveResult result;
};

}  // namespace

std::vector<DatasetEntry> generate_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir) {
  if (config.n_instances <= 0) throw ConfigError("dataset needs at least one instance");
  if (!(config.train_fraction >= 0.0 && config.train_fraction <= 1.0))
    throw ConfigError("train fraction must lie in [0, 1]");
  const int n = config.n_instances;
  const int n_train = static_cast<int>(std::lround(n * config.train_fraction));

  std::filesystem::create_directories(out_dir / "train");
  std::filesystem::create_directories(out_dir / "test");

  std::vector<DatasetEntry> entries(n);
  std::vector<Attempt> accepted(n);
  std::vector<char> first_exhausted(n, 0);

  // Instance k tries seeds base + k, base + k + n, base + k + 2n, ... so the
  // result does not depend on scheduling.
  auto solve_instance = [&](int k) {
    DatasetEntry& entry = entries[k];
    entry.index = k;
    entry.split = k < n_train ? "train" : "test";
    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
      const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(k) +
                                 static_cast<std::uint64_t>(attempt) * static_cast<std::uint64_t>(n);
      Scenario s = generate_scenario(config.gen, seed);
      std::string reason;
      try {
        SolveResult r = solve_exact(s, config.budget);
        if (r.status == SolveStatus::Optimal) {
          entry.id = s.id;
          entry.seed = seed;
          entry.status = to_string(r.status);
          entry.metrics = r.metrics;
          entry.expanded = r.expanded;
          accepted[k] = {std::move(s), std::move(r)};
          return;
        }
        if (attempt == 0) first_exhausted[k] = 1;
        reason = "budget exhausted";
      } catch (const NoFeasiblePlan&) {
        reason = "no feasible plan";
      }
      const std::uint64_t next = seed + static_cast<std::uint64_t>(n);
      entry.substitutions.push_back("instance " + std::to_string(k) + ": seed " + std::to_string(seed) + " -> seed " +
                                    std::to_string(next) + " (" + reason + ")");
    }
    throw Error("instance " + std::to_string(k) + " found no solvable seed in " +
                std::to_string(config.max_attempts) + " attempts");
  };

  std::atomic<int> next_index{0};
  std::mutex error_mutex;
  std::string first_error;
  auto worker = [&] {
    for (int k = next_index++; k < n; k = next_index++) {
      try {
        solve_instance(k);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
        next_index = n;
      }
    }
  };
  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (!first_error.empty()) throw Error(first_error);

  int exhausted = 0;
  for (char c : first_exhausted) exhausted += c;
  if (exhausted * 5 > n)
    throw Error("aborting dataset: " + std::to_string(exhausted) + " of " + std::to_string(n) +
                " instances exhausted the search budget");

  // Single writer, index order.
  std::ofstream manifest(out_dir / "manifest.csv", std::ios::binary);
  std::ofstream subs(out_dir / "substitutions.log", std::ios::binary);
  manifest << "index,id,split,seed,status,makespan_s,uav_energy_kJ,ugv_energy_kJ,nodes_expanded\n";
  char buf[512];
  for (int k = 0; k < n; ++k) {
    const auto& e = entries[k];
    const auto& a = accepted[k];
    const auto dir = out_dir / e.split;
    save_scenario(a.scenario, dir / (e.id + ".scenario.json"));
    char header[160];
    std::snprintf(header, sizeof header, "%s optimal makespan %.6f s", e.id.c_str(), e.metrics.makespan);
    save_plan(a.result.plan, TokenCodec(a.scenario), dir / (e.id + ".tokens.txt"), header);
    std::snprintf(buf, sizeof buf, "%d,%s,%s,%llu,%s,%.6f,%.6f,%.6f,%zu\n", k, e.id.c_str(), e.split.c_str(),
                  static_cast<unsigned long long>(e.seed), e.status.c_str(), e.metrics.makespan, e.metrics.uav_energy,
                  e.metrics.ugv_energy, e.expanded);
    manifest << buf;
    for (const auto& line : e.substitutions) subs << line << "\n";
  }

  std::ofstream info(out_dir / "dataset.txt", std::ios::binary);
  info << "# coplan dataset\n"
       << "tasks " << config.gen.n_tasks << "\n"
       << "paths " << config.gen.n_road_nodes << "\n"
       << "uavs " << config.gen.n_uav << "\n"
       << "ugvs " << config.gen.n_ugv << "\n"
       << "area_m " << config.gen.area.x << " " << config.gen.area.y << "\n"
       << "instances " << n << "\n"
       << "train " << n_train << "\n"
       << "test " << n - n_train << "\n"
       << "base_seed " << config.base_seed << "\n"
       << "max_nodes " << config.budget.max_nodes << "\n"
       << "note demonstrations are exact minimum-makespan plans on reduced desk-scale instances\n";
  return entries;
}

std::vector<DatasetItem> load_dataset(const std::filesystem::path& dir, const std::string& split) {
  std::ifstream manifest(dir / "manifest.csv", std::ios::binary);
  if (!manifest) throw Error("no manifest.csv in " + dir.string());
  std::vector<DatasetItem> items;
  std::string line;
  std::getline(manifest, line);  // header
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string index, id, sp;
    std::getline(ls, index, ',');
    std::getline(ls, id, ',');
    std::getline(ls, sp, ',');
    if (sp != split) continue;
    DatasetItem item;
    item.id = id;
    item.scenario = load_scenario(dir / sp / (id + ".scenario.json"));
    item.plan = load_plan(dir / sp / (id + ".tokens.txt"), TokenCodec(item.scenario));
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace coplan
