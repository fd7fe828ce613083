#include "coplan/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coplan/error.hpp"
#include "coplan/oracle.hpp"

namespace coplan {

using ag::Matrix;
using ag::Tensor;

namespace {

const char* kTypeNames[kNodeTypes] = {"task", "path", "uav", "ugv"};
const char* kEdgeSets[3] = {"intra", "uav", "ugv"};

std::string layer_name(const char* part, int l) { return std::string(part) + ".L" + std::to_string(l); }

int feature_width(const ModelConfig& c, int type) {
  switch (type) {
    case 0: return 3;
    case 1: return 2;
    case 2: return 3;
    default: return 2 + 2 * c.n_uav;
  }
}

}  // namespace

const char* to_string(EncoderKind k) { return k == EncoderKind::Hgt ? "hgt" : "mlp"; }

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "hgt" || s == "copcs") return EncoderKind::Hgt;
  if (s == "mlp") return EncoderKind::Mlp;
  throw ConfigError("unknown encoder '" + s + "' (expected hgt or mlp)");
}

ModelConfig ModelConfig::for_scenario(const Scenario& s, EncoderKind kind) {
  ModelConfig c;
  c.encoder = kind;
  c.n_uav = s.fleet.n_uav;
  c.n_ugv = s.fleet.n_ugv;
  c.n_task = s.n_tasks();
  c.n_path = s.n_paths();
  return c;
}

int ModelConfig::vocab() const { return TokenCodec(n_uav, n_task, n_ugv, n_path).vocab_size(); }

Model::Model(const ModelConfig& cfg) : config(cfg) {
  if (cfg.d <= 0 || cfg.enc_layers < 0 || cfg.dec_layers < 0 || cfg.max_len <= 0)
    throw ConfigError("model: width, layer counts and max_len must be positive");
  const int d = cfg.d;
  const int vocab = cfg.vocab();
  auto matrix = [&](const std::string& name, int r, int c) { params[name] = Tensor::param(Matrix(r, c)); };
  auto ones = [&](const std::string& name) { params[name] = Tensor::param(Matrix(1, d, 1.0)); };

  for (int t = 0; t < kNodeTypes; ++t) {
    matrix(std::string("enc.wz.") + kTypeNames[t], feature_width(cfg, t), d);
    matrix(std::string("enc.bz.") + kTypeNames[t], 1, d);
  }
  if (cfg.encoder == EncoderKind::Hgt) {
    for (int l = 0; l < cfg.enc_layers; ++l) {
      for (const char* e : kEdgeSets)
        for (const char* w : {"wq", "wk", "wv"}) matrix(layer_name("enc", l) + "." + e + "." + w, d, d);
      ones(layer_name("enc", l) + ".ln.gamma");
      matrix(layer_name("enc", l) + ".ln.beta", 1, d);
    }
  } else {
    matrix("mlp.w1", d, d);
    matrix("mlp.b1", 1, d);
    matrix("mlp.w2", d, d);
    matrix("mlp.b2", 1, d);
  }
  matrix("dec.emb_action", vocab, d);
  matrix("dec.emb_pos", cfg.max_len, d);
  for (int l = 0; l < cfg.dec_layers; ++l) {
    for (const char* part : {"self", "cross"})
      for (const char* w : {"wq", "wk", "wv"}) matrix(layer_name("dec", l) + "." + part + "." + w, d, d);
    ones(layer_name("dec", l) + ".ln.gamma");
    matrix(layer_name("dec", l) + ".ln.beta", 1, d);
  }
  matrix("dec.out", d, vocab);

  // Matrices uniform in +-1/sqrt(d); biases, shifts zero; scales one.
  Rng rng(cfg.init_seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (auto& [name, t] : params) {
    if (t.rows() == 1 && name.find(".w") == std::string::npos) continue;
    for (double& x : t.mutable_value().v) x = rng.uniform(-bound, bound);
  }
}

void Model::zero_grad() {
  for (auto& [_, t] : params) t.zero_grad();
}

Model Model::clone() const {
  Model out(config);
  for (auto& [name, t] : out.params) t.mutable_value() = p(name).value();
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params) n += t.value().size();
  return n;
}

Tensor encode_nodes(const Model& m, const ContextGraph& g) {
  std::vector<Tensor> parts;
  for (int t = 0; t < kNodeTypes; ++t) {
    if (g.counts[t] == 0) continue;
    const Tensor& w = m.p(std::string("enc.wz.") + kTypeNames[t]);
    if (g.widths[t] != w.rows()) throw Error("context graph feature width does not match the model");
    Matrix f(g.counts[t], g.widths[t]);
    f.v = g.features[t];
    for (double x : f.v)
      if (!std::isfinite(x)) throw Error("non-finite node feature");
    parts.push_back(ag::add_row(ag::matmul(Tensor(std::move(f)), w), m.p(std::string("enc.bz.") + kTypeNames[t])));
  }
  return ag::concat_rows(parts);
}

namespace {

std::vector<std::uint8_t> receiver_mask(const ContextGraph& g, const std::vector<std::uint8_t>& set,
                                        int receivers) {
  const int n = g.size();
  std::vector<std::uint8_t> mask(set.size(), 0);
  for (int i = 0; i < n; ++i) {
    if (receivers >= 0 && static_cast<int>(g.type_of(i)) != receivers) continue;
    for (int j = 0; j < n; ++j) mask[static_cast<std::size_t>(i) * n + j] = set[static_cast<std::size_t>(i) * n + j];
  }
  return mask;
}

Tensor attend(const Tensor& q, const Tensor& k, const Tensor& v, const std::vector<std::uint8_t>& mask, int d) {
  const Tensor scores = ag::scale(ag::matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(d)));
  return ag::matmul(ag::masked_softmax(scores, mask), v);
}

}  // namespace

Tensor hgt_layer(const Model& m, const ContextGraph& g, const Tensor& h, int layer) {
  const std::string base = layer_name("enc", layer);
  const std::vector<std::uint8_t>* sets[3] = {&g.intra, &g.uav, &g.ugv};
  const int receivers[3] = {-1, static_cast<int>(NodeType::Uav), static_cast<int>(NodeType::Ugv)};
  Tensor sum = h;
  for (int e = 0; e < 3; ++e) {
    const std::string p = base + "." + kEdgeSets[e] + ".";
    const Tensor q = ag::matmul(h, m.p(p + "wq"));
    const Tensor k = ag::matmul(h, m.p(p + "wk"));
    const Tensor v = ag::matmul(h, m.p(p + "wv"));
    sum = ag::add(sum, attend(q, k, v, receiver_mask(g, *sets[e], receivers[e]), m.config.d));
  }
  return ag::layer_norm(sum, m.p(base + ".ln.gamma"), m.p(base + ".ln.beta"), m.config.ln_eps);
}

Tensor hgt_forward(const Model& m, const ContextGraph& g) {
  Tensor h = encode_nodes(m, g);
  for (int l = 0; l < m.config.enc_layers; ++l) h = hgt_layer(m, g, h, l);
  return h;
}

// Per-node two-layer perceptron with tanh; edges are ignored.
Tensor mlp_encode(const Model& m, const ContextGraph& g) {
  const Tensor z = encode_nodes(m, g);
  const Tensor hidden = ag::tanh(ag::add_row(ag::matmul(z, m.p("mlp.w1")), m.p("mlp.b1")));
  return ag::add_row(ag::matmul(hidden, m.p("mlp.w2")), m.p("mlp.b2"));
}

Tensor encode(const Model& m, const ContextGraph& g) {
  return m.config.encoder == EncoderKind::Hgt ? hgt_forward(m, g) : mlp_encode(m, g);
}

Tensor decoder_forward(const Model& m, const std::vector<int>& inputs, const Tensor& h) {
  const int t = static_cast<int>(inputs.size());
  const int vocab = m.config.vocab();
  if (t == 0) throw Error("decoder needs at least the start token");
  if (t > m.config.max_len) throw Error("sequence longer than the positional table");
  for (int a : inputs)
    if (a < 0 || a >= vocab) throw Error("token " + std::to_string(a) + " outside the vocabulary");
  std::vector<int> pos(t);
  for (int i = 0; i < t; ++i) pos[i] = i;
  Tensor f = ag::add(ag::gather_rows(m.p("dec.emb_action"), inputs), ag::gather_rows(m.p("dec.emb_pos"), pos));

  std::vector<std::uint8_t> causal(static_cast<std::size_t>(t) * t, 0);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j <= i; ++j) causal[static_cast<std::size_t>(i) * t + j] = 1;
  const std::vector<std::uint8_t> full(static_cast<std::size_t>(t) * h.rows(), 1);

  for (int l = 0; l < m.config.dec_layers; ++l) {
    const std::string base = layer_name("dec", l);
    const Tensor self = attend(ag::matmul(f, m.p(base + ".self.wq")), ag::matmul(f, m.p(base + ".self.wk")),
                               ag::matmul(f, m.p(base + ".self.wv")), causal, m.config.d);
    const Tensor cross = attend(ag::matmul(f, m.p(base + ".cross.wq")), ag::matmul(h, m.p(base + ".cross.wk")),
                                ag::matmul(h, m.p(base + ".cross.wv")), full, m.config.d);
    f = ag::layer_norm(ag::add(ag::add(f, self), cross), m.p(base + ".ln.gamma"), m.p(base + ".ln.beta"),
                       m.config.ln_eps);
  }
  return ag::matmul(f, m.p("dec.out"));
}

namespace {

int argmax_row(const Matrix& u, int r) {
  int best = 0;
  for (int c = 1; c < u.cols; ++c)
    if (u(r, c) > u(r, best)) best = c;
  return best;
}

}  // namespace

Tensor sequence_loss(const Model& m, const ContextGraph& g, const std::vector<int>& tokens, int* correct) {
  if (tokens.empty()) throw Error("empty demonstration");
  std::vector<int> inputs{m.config.vocab() - 1};
  inputs.insert(inputs.end(), tokens.begin(), tokens.end() - 1);
  const Tensor logits = decoder_forward(m, inputs, encode(m, g));
  if (correct) {
    *correct = 0;
    for (int r = 0; r < logits.rows(); ++r) *correct += argmax_row(logits.value(), r) == tokens[r];
  }
  return ag::cross_entropy(logits, tokens);
}

const char* to_string(DecodeMode m) {
  return m == DecodeMode::EncodeOnce ? "encode-once" : "reencode-each-step";
}

Relabeling canonical_relabeling(const Scenario& s) {
  std::vector<int> task_from(s.tasks.size());
  std::iota(task_from.begin(), task_from.end(), 0);
  std::stable_sort(task_from.begin(), task_from.end(), [&](int a, int b) {
    return distance(s.depot, s.tasks[a].position) < distance(s.depot, s.tasks[b].position);
  });
  std::vector<int> node_from(s.road.size());
  std::iota(node_from.begin(), node_from.end(), 0);
  std::stable_sort(node_from.begin(), node_from.end(), [&](int a, int b) {
    return distance(s.depot, s.road.node(a)) < distance(s.depot, s.road.node(b));
  });
  return relabel(s, std::move(task_from), std::move(node_from));
}

Relabeling relabel(const Scenario& s, std::vector<int> task_from, std::vector<int> node_from) {
  auto is_perm = [](std::vector<int> p, std::size_t n) {
    if (p.size() != n) return false;
    std::sort(p.begin(), p.end());
    for (std::size_t k = 0; k < n; ++k)
      if (p[k] != static_cast<int>(k)) return false;
    return true;
  };
  if (!is_perm(task_from, s.tasks.size()) || !is_perm(node_from, s.road.size()))
    throw ConfigError("relabeling is not a permutation");
  Relabeling r;
  r.task_from = std::move(task_from);
  r.node_from = std::move(node_from);
  std::vector<int> node_to(s.road.size());
  for (std::size_t k = 0; k < r.node_from.size(); ++k) node_to[r.node_from[k]] = static_cast<int>(k);

  r.scenario = s;
  for (std::size_t k = 0; k < r.task_from.size(); ++k) {
    r.scenario.tasks[k] = s.tasks[r.task_from[k]];
    r.scenario.tasks[k].index = static_cast<int>(k);
  }
  std::vector<Vec2> nodes;
  for (int n : r.node_from) nodes.push_back(s.road.node(n));
  std::vector<std::pair<int, int>> edges;
  for (auto [a, b] : s.road.edges()) edges.emplace_back(node_to[a], node_to[b]);
  r.scenario.road = RoadNetwork(std::move(nodes), edges);
  r.scenario.depot_node = node_to[s.depot_node];
  return r;
}

namespace {

JointPlan remap(const JointPlan& plan, const std::vector<int>& task, const std::vector<int>& node) {
  JointPlan out = plan;
  for (Action& a : out.actions) {
    if (a.kind == ActionKind::UavVisit) a.target = task.at(a.target);
    if (a.kind == ActionKind::UgvMove) a.target = node.at(a.target);
  }
  return out;
}

std::vector<int> inverse(const std::vector<int>& p) {
  std::vector<int> inv(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) inv[p[k]] = static_cast<int>(k);
  return inv;
}

}  // namespace

JointPlan to_canonical(const Relabeling& r, const JointPlan& original) {
  return remap(original, inverse(r.task_from), inverse(r.node_from));
}

JointPlan from_canonical(const Relabeling& r, const JointPlan& canonical) {
  return remap(canonical, r.task_from, r.node_from);
}

JointPlan masked_greedy_decode(const Scenario& s, const Model& m, DecodeMode mode, bool lookahead) {
  const ModelConfig& c = m.config;
  if (c.n_uav != s.fleet.n_uav || c.n_ugv != s.fleet.n_ugv || c.n_task != s.n_tasks() || c.n_path != s.n_paths())
    throw ConfigError("model was built for a different fleet or map size");
  ag::NoGradGuard no_grad;
  const TokenCodec codec(s);
  WorldState state = initial_state(s);
  Tensor h = encode(m, build_context_graph(s, state));
  std::vector<int> inputs{codec.start_token()};
  JointPlan plan;
  while (!state.complete()) {
    const std::size_t step_index = plan.actions.size();
    const auto valid = valid_actions(s, state);
    if (valid.empty()) throw DeadEnd(step_index);
    if (static_cast<int>(inputs.size()) > c.max_len)
      throw Error("decoded plan outgrew the positional table (" + std::to_string(c.max_len) + ")");
    if (mode == DecodeMode::ReencodeEachStep && step_index > 0) h = encode(m, build_context_graph(s, state));
    const Tensor u = decoder_forward(m, inputs, h);
    const int last = u.rows() - 1;
    std::vector<int> order;
    for (const Action& a : valid) order.push_back(codec.encode(a));
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return u.value()(last, a) > u.value()(last, b); });
    int chosen = -1;
    WorldState next;
    for (int tok : order) {
      next = state;
      if (auto why = step(s, next, codec.decode(tok))) throw Error("mask admitted an invalid action: " + *why, false);
      if (!lookahead || completable(s, next)) {
        chosen = tok;
        break;
      }
    }
    if (chosen < 0) throw DeadEnd(step_index);
    state = std::move(next);
    plan.actions.push_back(codec.decode(chosen));
    inputs.push_back(chosen);
  }
  return plan;
}

JointPlan decode_plan(const Scenario& s, const Model& m, DecodeMode mode, bool lookahead) {
  const Relabeling r = canonical_relabeling(s);
  return from_canonical(r, masked_greedy_decode(r.scenario, m, mode, lookahead));
}

TrainSample make_sample(const std::string& id, const Scenario& s, const JointPlan& plan) {
  const TokenCodec codec(s);
  TrainSample t;
  t.id = id;
  t.graph = build_context_graph(s, initial_state(s));
  for (const Action& a : plan.actions) t.tokens.push_back(codec.encode(a));
  return t;
}

TrainSample make_canonical_sample(const std::string& id, const Scenario& s, const JointPlan& plan) {
  const Relabeling r = canonical_relabeling(s);
  return make_sample(id, r.scenario, to_canonical(r, plan));
}

double token_accuracy(const Model& model, const std::vector<TrainSample>& data) {
  ag::NoGradGuard no_grad;
  long correct = 0, total = 0;
  for (const auto& d : data) {
    int c = 0;
    sequence_loss(model, d.graph, d.tokens, &c);
    correct += c;
    total += static_cast<long>(d.tokens.size());
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace coplan
