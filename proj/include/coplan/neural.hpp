#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "coplan/autograd.hpp"
#include "coplan/context_graph.hpp"
#include "coplan/dynamics.hpp"
#include "coplan/scenario.hpp"
#include "coplan/tokens.hpp"

namespace coplan {

enum class EncoderKind { Hgt, Mlp };
const char* to_string(EncoderKind k);
EncoderKind encoder_kind_from_string(const std::string& s);

struct ModelConfig {
  EncoderKind encoder = EncoderKind::Hgt;
  int d = 64;
  int enc_layers = 2;
  int dec_layers = 2;
  int max_len = 128;  // positional table rows
  // Fleet and map shape the model is built for.
  int n_uav = 1;
  int n_ugv = 1;
  int n_task = 1;
  int n_path = 1;
  std::uint64_t init_seed = 0;
  double ln_eps = 1e-9;

  static ModelConfig for_scenario(const Scenario& s, EncoderKind kind = EncoderKind::Hgt);
  int vocab() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// All learnable tensors, addressable by name for checkpoints and tests.
struct Model {
  ModelConfig config;
  std::map<std::string, ag::Tensor> params;

  explicit Model(const ModelConfig& config);
  ag::Tensor& p(const std::string& name) { return params.at(name); }
  const ag::Tensor& p(const std::string& name) const { return params.at(name); }
  void zero_grad();
  std::size_t parameter_count() const;
  /// Deep copy; plain copies share tensors.
  Model clone() const;
};

/// Per-type input projection; rows follow the graph's node order.
ag::Tensor encode_nodes(const Model& m, const ContextGraph& g);
/// One graph-attention layer `layer` applied to h.
ag::Tensor hgt_layer(const Model& m, const ContextGraph& g, const ag::Tensor& h, int layer);
/// Graph embeddings H (nodes x d) from the configured encoder.
ag::Tensor encode(const Model& m, const ContextGraph& g);
ag::Tensor hgt_forward(const Model& m, const ContextGraph& g);
ag::Tensor mlp_encode(const Model& m, const ContextGraph& g);

/// Decoder over inputs (start token first, then prefix tokens). Row i holds
/// the logits for the token after input i.
ag::Tensor decoder_forward(const Model& m, const std::vector<int>& inputs, const ag::Tensor& h);

/// Teacher-forced summed cross-entropy of `tokens` given the graph.
ag::Tensor sequence_loss(const Model& m, const ContextGraph& g, const std::vector<int>& tokens,
                         int* correct = nullptr);

/// Same mission with tasks and road nodes renumbered by distance from the
/// depot (ties by original index). The learner works in this numbering so
/// that a token index means "k-th closest" on every map.
struct Relabeling {
  Scenario scenario;
  std::vector<int> task_from;  // canonical task k is original task_from[k]
  std::vector<int> node_from;  // canonical node k is original node_from[k]
};
Relabeling canonical_relabeling(const Scenario& s);
/// Arbitrary renumbering; throws ConfigError unless both are permutations.
Relabeling relabel(const Scenario& s, std::vector<int> task_from, std::vector<int> node_from);
JointPlan to_canonical(const Relabeling& r, const JointPlan& original);
JointPlan from_canonical(const Relabeling& r, const JointPlan& canonical);

enum class DecodeMode { EncodeOnce, ReencodeEachStep };
const char* to_string(DecodeMode m);

/// Greedy decoding restricted to executor-valid actions; ties go to the
/// lowest token id. With `lookahead`, actions after which the mission can no
/// longer be completed are masked as well. Throws DeadEnd when nothing is
/// left to choose before completion. Works in the scenario's own numbering;
/// see decode_plan for the canonical wrapper.
JointPlan masked_greedy_decode(const Scenario& s, const Model& m, DecodeMode mode = DecodeMode::EncodeOnce,
                               bool lookahead = true);

/// Decodes in canonical numbering and maps the plan back.
JointPlan decode_plan(const Scenario& s, const Model& m, DecodeMode mode = DecodeMode::EncodeOnce,
                      bool lookahead = true);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::map<std::string, ag::Matrix> m;
  std::map<std::string, ag::Matrix> v;

  void apply(Model& model);
};

struct TrainSample {
  std::string id;
  ContextGraph graph;
  std::vector<int> tokens;
};
/// Sample in the scenario's own numbering.
TrainSample make_sample(const std::string& id, const Scenario& s, const JointPlan& plan);
/// Sample in canonical numbering; pairs with decode_plan.
TrainSample make_canonical_sample(const std::string& id, const Scenario& s, const JointPlan& plan);

struct TrainConfig {
  double lr = 1e-3;
  int batch = 16;
  int steps = 2000;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0: only the final checkpoint
  std::filesystem::path out_dir;  // empty: no files written
};

struct TrainRecord {
  long step = 0;
  double loss = 0.0;      // mean summed cross-entropy per sequence
  double accuracy = 0.0;  // teacher-forced token accuracy on the batch
};

/// Indices of the samples used at `step`: consecutive slices of a per-epoch
/// permutation seeded from (seed, epoch).
std::vector<int> batch_indices(std::size_t n_samples, int batch, std::uint64_t seed, long step);

/// Runs Adam from `adam.step` up to config.steps. Writes loss.csv and
/// checkpoints into out_dir when set. `on_step` sees every record.
std::vector<TrainRecord> train(Model& model, AdamState& adam, const std::vector<TrainSample>& data,
                               const TrainConfig& config,
                               const std::function<void(const TrainRecord&)>& on_step = {});

/// Teacher-forced token accuracy over `data`.
double token_accuracy(const Model& model, const std::vector<TrainSample>& data);

void save_checkpoint(const Model& model, const AdamState& adam, const std::filesystem::path& path);
/// Restores model and optimizer state; throws ParseError on a bad file.
std::pair<Model, AdamState> load_checkpoint(const std::filesystem::path& path);

}  // namespace coplan
