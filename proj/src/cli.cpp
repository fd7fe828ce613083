#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "coplan/error.hpp"
#include "coplan/harness.hpp"
#include "coplan/tokens.hpp"

namespace coplan {

namespace {

std::filesystem::path default_out() {
  const char* env = std::getenv("COPLAN_OUT_DIR");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("out");
}

std::string metrics_line(const Metrics& m) {
  std::ostringstream o;
  o.precision(10);
  o << "makespan_s=" << m.makespan << " uav_energy_kJ=" << m.uav_energy << " ugv_energy_kJ=" << m.ugv_energy;
  return o.str();
}

DecodeMode decode_mode(const std::string& s) {
  if (s == "encode-once") return DecodeMode::EncodeOnce;
  if (s == "reencode") return DecodeMode::ReencodeEachStep;
  throw ConfigError("unknown decode mode '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct BaselineFlags {
  int iters = 2000;
  double lambda = 0.0;
  int tenure = 10;
  double t0 = 0.0;
  double alpha = 0.95;
  int iters_per_temp = 20;

  void add(CLI::App* app) {
    app->add_option("--iters", iters, "Iterations for gls/ts/sa")->capture_default_str();
    app->add_option("--lambda", lambda, "GLS penalty weight in seconds; 0 picks 0.1 x mean leg time")
        ->capture_default_str();
    app->add_option("--tenure", tenure, "Tabu tenure in iterations")->capture_default_str();
    app->add_option("--t0", t0, "SA start temperature in seconds; 0 picks 0.2 x initial makespan")
        ->capture_default_str();
    app->add_option("--alpha", alpha, "SA geometric cooling factor")->capture_default_str();
    app->add_option("--iters-per-temp", iters_per_temp, "SA iterations per temperature")->capture_default_str();
  }

  void apply(MethodParams& p, std::uint64_t seed) const {
    p.gls = {lambda, iters, seed};
    p.ts = {tenure, iters, seed};
    p.sa = {t0, alpha, iters, iters_per_temp, seed};
  }
};

/// Splices the options of "<command> ... --config FILE" into the argument
/// list right after the command, so flags on the command line win. Keys at
/// the top of the file or in a [<command>] section apply.
std::vector<std::string> expand_config(std::vector<std::string> args, const CLI::App& app) {
  std::size_t cmd = 0;
  while (cmd < args.size() && !app.get_subcommand_no_throw(args[cmd])) ++cmd;
  if (cmd == args.size()) return args;
  std::string file;
  for (std::size_t i = cmd + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (file.empty()) return args;
  if (!std::filesystem::is_regular_file(file)) throw CLI::FileError::Missing(file);
  std::vector<std::string> extra;
  for (const auto& item : CLI::ConfigTOML().from_file(file)) {
    if (item.name == "++" || item.name == "--") continue;
    if (!(item.parents.empty() || (item.parents.size() == 1 && item.parents[0] == args[cmd]))) continue;
    extra.push_back("--" + item.name);
    extra.insert(extra.end(), item.inputs.begin(), item.inputs.end());
  }
  args.insert(args.begin() + static_cast<long>(cmd) + 1, extra.begin(), extra.end());
  return args;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"UAV-UGV co-planning: scenarios, exact solver, baselines, learned planner"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::uint64_t seed = 0;
  std::string config_path;
  std::filesystem::path out_dir = default_out();
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "TOML or INI file with option values for this command");
    sub->add_option("--seed", seed, "Random seed")->capture_default_str();
    sub->add_option("--out", out_dir, "Output directory (default $COPLAN_OUT_DIR or ./out)")->capture_default_str();
  };

  // gen
  GenConfig gen;
  double area = 10'000.0;
  int instances = 0, jobs = 1;
  double train_fraction = 0.8;
  std::size_t max_nodes = SearchBudget{}.max_nodes;
  double max_seconds = 0.0;
  auto* g = app.add_subcommand("gen", "Generate one scenario, or a dataset with oracle demonstrations");
  common(g);
  g->add_option("--tasks", gen.n_tasks, "Task count")->capture_default_str()->check(CLI::NonNegativeNumber);
  g->add_option("--paths", gen.n_road_nodes, "Road node count")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--uavs", gen.n_uav, "UAV count")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--ugvs", gen.n_ugv, "UGV count")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--area", area, "Side of the square area in meters")->capture_default_str()->check(
      CLI::PositiveNumber);
  g->add_option("--road-k", gen.road_k, "Nearest neighbours per road node")->capture_default_str();
  g->add_option("--recharge-seconds", gen.fleet.recharge_seconds, "Docked time per recharge")
      ->capture_default_str();
  g->add_option("--instances", instances, "Dataset size; 0 writes a single scenario")->capture_default_str();
  g->add_option("--train-fraction", train_fraction, "Leading share of instances in the train split")
      ->capture_default_str();
  g->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
  g->add_option("--max-nodes", max_nodes, "Oracle expansion budget per instance")->capture_default_str();

  // oracle
  std::filesystem::path scenario_path, plan_path, dataset_path, checkpoint;
  auto* o = app.add_subcommand("oracle", "Solve one scenario exactly");
  common(o);
  o->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  o->add_option("--max-nodes", max_nodes, "Expansion budget")->capture_default_str();
  o->add_option("--max-seconds", max_seconds, "Wall-clock budget, 0 for none")->capture_default_str();

  // solve
  std::string method, decode = "encode-once";
  BaselineFlags baseline;
  auto* s = app.add_subcommand("solve", "Solve one scenario with a baseline or a trained model");
  common(s);
  s->add_option("--method", method, "Solver")->required()->check(
      CLI::IsMember({"greedy", "gls", "ts", "sa", "mlp", "copcs"}));
  s->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  s->add_option("--checkpoint", checkpoint, "Model checkpoint for mlp/copcs");
  s->add_option("--decode", decode, "Decode mode")->capture_default_str()->check(
      CLI::IsMember({"encode-once", "reencode"}));
  baseline.add(s);

  // train
  std::string encoder = "hgt";
  ModelConfig mc;
  TrainConfig tc;
  std::filesystem::path resume;
  auto* t = app.add_subcommand("train", "Imitation training on a dataset's train split");
  common(t);
  t->add_option("--dataset", dataset_path, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  t->add_option("--encoder", encoder, "Encoder")->capture_default_str()->check(
      CLI::IsMember({"hgt", "copcs", "mlp"}));
  t->add_option("--d", mc.d, "Model width")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--enc-layers", mc.enc_layers, "Encoder layers")->capture_default_str();
  t->add_option("--dec-layers", mc.dec_layers, "Decoder layers")->capture_default_str();
  t->add_option("--max-len", mc.max_len, "Positional table rows")->capture_default_str();
  t->add_option("--lr", tc.lr, "Adam learning rate")->capture_default_str();
  t->add_option("--batch", tc.batch, "Minibatch size")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--steps", tc.steps, "Total Adam steps")->capture_default_str();
  t->add_option("--checkpoint-every", tc.checkpoint_every, "Extra checkpoint period, 0 for none")
      ->capture_default_str();
  t->add_option("--resume", resume, "Continue from a checkpoint")->check(CLI::ExistingFile);

  // eval
  std::string methods = "oracle,gls,ts,sa";
  std::string split = "test";
  std::filesystem::path copcs_ckpt, mlp_ckpt;
  auto* e = app.add_subcommand("eval", "Benchmark methods on a dataset split");
  common(e);
  e->add_option("--dataset", dataset_path, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--split", split, "train or test")->capture_default_str()->check(CLI::IsMember({"train", "test"}));
  e->add_option("--methods", methods, "Comma list of oracle,greedy,gls,ts,sa,mlp,copcs")->capture_default_str();
  e->add_option("--copcs-checkpoint", copcs_ckpt, "HGT model checkpoint");
  e->add_option("--mlp-checkpoint", mlp_ckpt, "MLP model checkpoint");
  e->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
  e->add_option("--max-nodes", max_nodes, "Oracle expansion budget")->capture_default_str();
  e->add_option("--decode", decode, "Decode mode")->capture_default_str()->check(
      CLI::IsMember({"encode-once", "reencode"}));
  baseline.add(e);

  // trace
  auto* r = app.add_subcommand("trace", "Replay a plan and draw it as SVG");
  common(r);
  r->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  r->add_option("--plan", plan_path, "Plan file")->required()->check(CLI::ExistingFile);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(std::move(args), app);
  } catch (const CLI::Error& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& ex) {
    if (ex.get_exit_code() == 0) {
      app.exit(ex, out, err);
      return 0;
    }
    err << "error: " << ex.what() << "\n\n";
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return 1;
  }

  try {
    std::filesystem::create_directories(out_dir);
    if (*g) {
      gen.area = {area, area};
      if (instances <= 0) {
        Scenario sc = generate_scenario(gen, seed);
        const auto path = out_dir / (sc.id + ".scenario.json");
        save_scenario(sc, path);
        out << path.string() << "\n";
      } else {
        DatasetConfig dc;
        dc.gen = gen;
        dc.n_instances = instances;
        dc.train_fraction = train_fraction;
        dc.budget.max_nodes = max_nodes;
        dc.base_seed = seed;
        dc.jobs = jobs;
        const auto entries = generate_dataset(dc, out_dir);
        int subs = 0;
        for (const auto& en : entries) subs += static_cast<int>(en.substitutions.size());
        out << "wrote " << entries.size() << " instances to " << out_dir.string() << " (" << subs
            << " seed substitutions)\n";
      }
    } else if (*o) {
      const Scenario sc = load_scenario(scenario_path);
      SearchBudget budget{max_nodes, max_seconds};
      SolveResult res = solve_exact(sc, budget);
      const auto path = out_dir / (sc.id + ".oracle.plan.txt");
      save_plan(res.plan, TokenCodec(sc), path,
                std::string("status ") + to_string(res.status) + " " + metrics_line(res.metrics));
      out << to_string(res.status) << " " << metrics_line(res.metrics) << " expanded=" << res.expanded << "\n"
          << path.string() << "\n";
    } else if (*s) {
      const Scenario sc = load_scenario(scenario_path);
      MethodParams p;
      baseline.apply(p, seed);
      p.decode = decode_mode(decode);
      (method == "mlp" ? p.mlp_checkpoint : p.copcs_checkpoint) = checkpoint;
      JointPlan plan;
      if (method == "gls" || method == "ts" || method == "sa") {
        const BaselineResult br = method == "gls" ? gls_solve(sc, p.gls)
                                  : method == "ts" ? ts_solve(sc, p.ts)
                                                   : sa_solve(sc, p.sa);
        plan = br.best.plan;
        write_text(out_dir / (sc.id + "." + method + ".log.csv"), iteration_log_csv(br.log));
      } else {
        const LoadedModels models = load_models({method}, p);
        InstanceRecord rec = run_method(sc, method, p, models, &plan);
        if (!rec.feasible()) throw Error(method + " failed: " + rec.status + " " + rec.detail);
      }
      const Metrics m = metrics(execute_plan(sc, plan));
      const auto path = out_dir / (sc.id + "." + method + ".plan.txt");
      save_plan(plan, TokenCodec(sc), path, method + " " + metrics_line(m));
      out << metrics_line(m) << "\n" << path.string() << "\n";
    } else if (*t) {
      const auto items = load_dataset(dataset_path, "train");
      if (items.empty()) throw ConfigError("train split of " + dataset_path.string() + " is empty");
      std::vector<TrainSample> data;
      for (const auto& it : items) data.push_back(make_canonical_sample(it.id, it.scenario, it.plan));
      tc.seed = seed;
      tc.out_dir = out_dir;
      AdamState adam;
      adam.lr = tc.lr;
      std::optional<Model> model;
      if (!resume.empty()) {
        auto [m, a] = load_checkpoint(resume);
        if (m.config.vocab() != ModelConfig::for_scenario(items[0].scenario, m.config.encoder).vocab())
          throw ConfigError("checkpoint " + resume.string() + " does not match the dataset's fleet and sizes");
        model.emplace(std::move(m));
        adam = std::move(a);
      } else {
        ModelConfig c = ModelConfig::for_scenario(items[0].scenario, encoder_kind_from_string(encoder));
        c.d = mc.d;
        c.enc_layers = mc.enc_layers;
        c.dec_layers = mc.dec_layers;
        c.max_len = mc.max_len;
        c.init_seed = seed;
        model.emplace(c);
      }
      const auto log = train(*model, adam, data, tc);
      if (!log.empty())
        out << "step " << log.back().step << " loss " << log.back().loss << " token_accuracy "
            << log.back().accuracy << "\n";
      out << (out_dir / "model.bin").string() << "\n";
    } else if (*e) {
      BenchmarkConfig bc;
      bc.dataset = dataset_path;
      bc.split = split;
      bc.methods = split_list(methods);
      baseline.apply(bc.params, seed);
      bc.params.oracle.max_nodes = max_nodes;
      bc.params.decode = decode_mode(decode);
      bc.params.copcs_checkpoint = copcs_ckpt;
      bc.params.mlp_checkpoint = mlp_ckpt;
      bc.out_dir = out_dir;
      bc.jobs = jobs;
      const ResultsTable table = run_benchmark(bc);
      out << summary_csv(table);
    } else if (*r) {
      const Scenario sc = load_scenario(scenario_path);
      const JointPlan plan = load_plan(plan_path, TokenCodec(sc));
      const ExecutionTrace trace = execute_plan(sc, plan);
      export_trace_svg(sc, trace, out_dir / (sc.id + ".svg"));
      write_text(out_dir / (sc.id + ".events.txt"), trace_to_log(trace));
      out << metrics_line(metrics(trace)) << "\n" << (out_dir / (sc.id + ".svg")).string() << "\n";
    }
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return ex.user_error() ? 1 : 2;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace coplan
