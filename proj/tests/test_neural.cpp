#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "coplan/error.hpp"
#include "coplan/neural.hpp"
#include "coplan/oracle.hpp"
#include "doctest.h"
#include "nn_oracles.hpp"
#include "properties.hpp"
#include "test_util.hpp"

using namespace coplan;
using namespace coplan::testing;
using ag::Matrix;
using ag::Tensor;

namespace {

Matrix random_matrix(Rng& rng, int r, int c) {
  Matrix m(r, c);
  for (double& x : m.v) x = rng.uniform(-1, 1);
  return m;
}

void check_close(const Mat& a, const ag::Matrix& b, double tol) {
  REQUIRE(static_cast<int>(a.size()) == b.rows);
  for (int r = 0; r < b.rows; ++r)
    for (int c = 0; c < b.cols; ++c) CHECK(std::abs(a[r][c] - b(r, c)) <= tol);
}

// Finite-difference check of a scalar function of one leaf.
double op_grad_error(const std::function<Tensor(const Tensor&)>& f, Matrix x0) {
  Tensor x = Tensor::param(x0);
  f(x).backward();
  const Matrix g = x.grad();
  double worst = 0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    Matrix up = x0, dn = x0;
    up.v[i] += 1e-6;
    dn.v[i] -= 1e-6;
    const double num = (f(Tensor(up)).item() - f(Tensor(dn)).item()) / 2e-6;
    worst = std::max(worst, std::abs(num - g.v[i]) / std::max({std::abs(num), std::abs(g.v[i]), 1e-6}));
  }
  return worst;
}

Scenario feasible(const GenConfig& cfg, std::uint64_t& seed, JointPlan* plan = nullptr) {
  for (;; ++seed) {
    Scenario s = generate_scenario(cfg, seed);
    try {
      auto r = solve_exact(s);
      if (plan) *plan = r.plan;
      return s;
    } catch (const NoFeasiblePlan&) {
    }
  }
}

ModelConfig small(const Scenario& s, int d = 8, int layers = 1, EncoderKind kind = EncoderKind::Hgt) {
  ModelConfig c = ModelConfig::for_scenario(s, kind);
  c.d = d;
  c.enc_layers = layers;
  c.dec_layers = layers;
  c.max_len = 32;
  c.init_seed = 11;
  return c;
}

}  // namespace

TEST_CASE("engine ops match finite differences") {
  Rng rng(1);
  const Matrix w = random_matrix(rng, 4, 3);
  const Matrix other = random_matrix(rng, 5, 4);
  const Matrix row = random_matrix(rng, 1, 3);
  std::vector<std::uint8_t> mask(5 * 5, 1);
  mask[0] = mask[7] = 0;
  for (int c = 0; c < 5; ++c) mask[15 + c] = 0;  // row 3 fully masked
  auto dot = [&](const Tensor& t) {
    // Weighted sum so every entry matters.
    Matrix wts(t.cols(), 1);
    for (int i = 0; i < wts.rows; ++i) wts.v[i] = 0.3 + 0.1 * i;
    Matrix ones(1, t.rows(), 1.0);
    return ag::matmul(Tensor(ones), ag::matmul(t, Tensor(wts)));
  };
  CHECK(op_grad_error([&](const Tensor& x) { return dot(ag::matmul(x, Tensor(w))); }, random_matrix(rng, 5, 4)) < 1e-6);
  CHECK(op_grad_error([&](const Tensor& x) { return dot(ag::matmul(Tensor(other), x)); }, random_matrix(rng, 4, 3)) < 1e-6);
  CHECK(op_grad_error([&](const Tensor& x) { return dot(ag::matmul_nt(x, Tensor(other))); }, random_matrix(rng, 3, 4)) < 1e-6);
  CHECK(op_grad_error([&](const Tensor& x) { return dot(ag::matmul_nt(Tensor(other), x)); }, random_matrix(rng, 3, 4)) < 1e-6);
  CHECK(op_grad_error([&](const Tensor& x) { return dot(ag::add_row(x, Tensor(row))); }, random_matrix(rng, 2, 3)) < 1e-6);
  CHECK(op_grad_error([&](const Tensor& x) { return dot(ag::add_row(Tensor(w), x)); }, random_matrix(rng, 1, 3)) < 1e-6);
  CHECK(op_grad_error([&](const Tensor& x) { return dot(ag::tanh(x)); }, random_matrix(rng, 3, 3)) < 1e-6);
  CHECK(op_grad_error([&](const Tensor& x) { return dot(ag::masked_softmax(x, mask)); }, random_matrix(rng, 5, 5)) < 1e-6);
  CHECK(op_grad_error([&](const Tensor& x) { return dot(ag::layer_norm(x, Tensor(row), Tensor(row), 1e-9)); },
                      random_matrix(rng, 4, 3)) < 1e-5);
  CHECK(op_grad_error([&](const Tensor& x) { return dot(ag::layer_norm(Tensor(w), x, Tensor(row), 1e-9)); },
                      random_matrix(rng, 1, 3)) < 1e-6);
  CHECK(op_grad_error([&](const Tensor& x) { return dot(ag::gather_rows(x, {2, 0, 2})); }, random_matrix(rng, 3, 2)) < 1e-6);
  CHECK(op_grad_error([&](const Tensor& x) { return dot(ag::concat_rows({x, Tensor(w), x})); }, random_matrix(rng, 2, 3)) < 1e-6);
  CHECK(op_grad_error([&](const Tensor& x) { return ag::cross_entropy(x, {1, 0, 3}); }, random_matrix(rng, 3, 4)) < 1e-6);
  CHECK(op_grad_error([&](const Tensor& x) { return ag::sum({ag::cross_entropy(x, {1}), ag::scale(ag::cross_entropy(x, {2}), 3)}); },
                      random_matrix(rng, 1, 4)) < 1e-6);
}

TEST_CASE("softmax rows and layer norm statistics") {
  Rng rng(2);
  std::vector<std::uint8_t> mask(6 * 6);
  for (auto& m : mask) m = rng.below(2);
  for (int c = 0; c < 6; ++c) mask[c] = 0;
  const Tensor p = ag::masked_softmax(Tensor(random_matrix(rng, 6, 6)), mask);
  for (int r = 0; r < 6; ++r) {
    double s = 0;
    bool any = false;
    for (int c = 0; c < 6; ++c) {
      s += p.value()(r, c);
      any = any || mask[r * 6 + c];
      if (!mask[r * 6 + c]) CHECK(p.value()(r, c) == 0.0);
    }
    CHECK(std::abs(s - (any ? 1.0 : 0.0)) < 1e-9);
  }
  Matrix x = random_matrix(rng, 5, 64);
  for (double& v : x.v) v = v * 40 + 7;
  const Tensor y = ag::layer_norm(Tensor(x), Tensor(Matrix(1, 64, 1.0)), Tensor(Matrix(1, 64, 0.0)), 1e-9);
  for (int r = 0; r < 5; ++r) {
    double mean = 0, var = 0;
    for (int c = 0; c < 64; ++c) mean += y.value()(r, c) / 64;
    for (int c = 0; c < 64; ++c) var += (y.value()(r, c) - mean) * (y.value()(r, c) - mean) / 64;
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(var - 1) < 1e-6);
  }
}

TEST_CASE("no-grad guard records nothing") {
  Tensor w = Tensor::param(Matrix(2, 2, 1.0));
  {
    ag::NoGradGuard g;
    CHECK_FALSE(ag::matmul(w, w).requires_grad());
  }
  CHECK(ag::matmul(w, w).requires_grad());
}

TEST_CASE("encode_nodes") {
  std::uint64_t seed = 0;
  const Scenario s = feasible(tiny_config(3, 2), seed);
  const auto g = build_context_graph(s, initial_state(s));
  SUBCASE("zero features and bias give zero") {
    Model m(small(s));
    ContextGraph z = g;
    for (auto& f : z.features) std::fill(f.begin(), f.end(), 0.0);
    const Tensor out = encode_nodes(m, z);
    for (double x : out.value().v) CHECK(x == 0.0);
  }
  SUBCASE("identity projection") {
    Model m(small(s, 3));
    Matrix eye(3, 3);
    for (int i = 0; i < 3; ++i) eye(i, i) = 1;
    m.p("enc.wz.task").mutable_value() = eye;
    const Tensor out = encode_nodes(m, g);
    for (int i = 0; i < g.counts[0]; ++i)
      for (int c = 0; c < 3; ++c) CHECK(out.value()(i, c) == g.features[0][i * 3 + c]);
  }
  SUBCASE("matches triple loop") {
    Model m(small(s, 8));
    Rng rng(4);
    for (auto& [n, t] : m.params)
      for (double& x : t.mutable_value().v) x = rng.uniform(-1, 1);
    check_close(encode_nodes_ref(m, g), encode_nodes(m, g).value(), 1e-12);
  }
  SUBCASE("NaN feature rejected") {
    Model m(small(s));
    ContextGraph bad = g;
    bad.features[0][0] = std::nan("");
    CHECK_THROWS_AS(encode_nodes(m, bad), Error);
  }
}

TEST_CASE("hgt_layer") {
  SUBCASE("nodes without edges get layer norm of their input") {
    const auto s = line_scenario({{1000, 0}});
    ContextGraph g = build_context_graph(s, initial_state(s), RadiusConfig{-1, -1, -1});
    Model m(small(s));
    const Tensor h0 = encode_nodes(m, g);
    const Tensor h1 = hgt_layer(m, g, h0, 0);
    for (int i = 0; i < g.size(); ++i) {
      std::vector<double> row(h0.value().v.begin() + i * 8, h0.value().v.begin() + (i + 1) * 8);
      const auto ln = layer_norm_ref(row, std::vector<double>(8, 1.0), std::vector<double>(8, 0.0), 1e-9);
      for (int c = 0; c < 8; ++c) CHECK(h1.value()(i, c) == doctest::Approx(ln[c]).epsilon(1e-12));
    }
  }
  SUBCASE("identical intra-connected nodes stay identical") {
    const auto s = line_scenario({{1000, 1000}, {1000, 1000}});
    ContextGraph g = build_context_graph(s, initial_state(s), RadiusConfig::unbounded());
    REQUIRE(g.edge(g.intra, 0, 1));
    Model m(small(s));
    const Tensor h = hgt_forward(m, g);
    for (int c = 0; c < 8; ++c) CHECK(h.value()(0, c) == h.value()(1, c));
  }
  SUBCASE("matches loop reference on random graphs") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto s = generate_scenario(tiny_config(2, 1, 1, 1), seed);  // 5 nodes
      const auto g = build_context_graph(s, initial_state(s), RadiusConfig{4000, 6000, 8000});
      REQUIRE(g.size() == 5);
      Model m(small(s, 8, 2));
      check_close(hgt_layer_ref(m, g, encode_nodes_ref(m, g), 0), hgt_layer(m, g, encode_nodes(m, g), 0).value(),
                  1e-12);
      check_close(encode_ref(m, g), hgt_forward(m, g).value(), 1e-11);
    }
  }
}

TEST_CASE("hgt_forward") {
  std::uint64_t seed = 0;
  const Scenario s = feasible(tiny_config(4, 2, 2, 1), seed);
  const auto g = build_context_graph(s, initial_state(s));
  SUBCASE("zero layers returns z") {
    Model m(small(s, 8, 0));
    CHECK(hgt_forward(m, g).value() == encode_nodes(m, g).value());
  }
  SUBCASE("task permutation permutes task embeddings") {
    Model m(small(s, 8, 2));
    Scenario p = s;
    const std::vector<int> perm{2, 0, 3, 1};  // new task k is old perm[k]
    for (int k = 0; k < 4; ++k) {
      p.tasks[k] = s.tasks[perm[k]];
      p.tasks[k].index = k;
    }
    const auto h0 = hgt_forward(m, g).value();
    const auto h1 = hgt_forward(m, build_context_graph(p, initial_state(p))).value();
    for (int k = 0; k < 4; ++k)
      for (int c = 0; c < 8; ++c) CHECK(std::abs(h1(k, c) - h0(perm[k], c)) < 1e-12);
    for (int r = 4; r < g.size(); ++r)
      for (int c = 0; c < 8; ++c) CHECK(std::abs(h1(r, c) - h0(r, c)) < 1e-12);
  }
  SUBCASE("UGV embedding ignores task features one hop away") {
    Model m(small(s, 8, 1));
    ContextGraph changed = g;
    Rng rng(9);
    for (double& x : changed.features[0]) x = rng.uniform(-5, 5);
    const auto a = hgt_forward(m, g).value();
    const auto b = hgt_forward(m, changed).value();
    const int ugv = g.offset(NodeType::Ugv);
    for (int c = 0; c < 8; ++c) CHECK(a(ugv, c) == b(ugv, c));
  }
}

TEST_CASE("mlp_encode") {
  std::uint64_t seed = 0;
  const Scenario s = feasible(tiny_config(3, 2), seed);
  const auto g = build_context_graph(s, initial_state(s));
  Model m(small(s, 8, 1, EncoderKind::Mlp));
  SUBCASE("edges are ignored") {
    ContextGraph none = g;
    std::fill(none.intra.begin(), none.intra.end(), 0);
    std::fill(none.uav.begin(), none.uav.end(), 0);
    std::fill(none.ugv.begin(), none.ugv.end(), 0);
    CHECK(mlp_encode(m, g).value() == mlp_encode(m, none).value());
  }
  SUBCASE("zero weights give a constant") {
    for (auto& [n, t] : m.params)
      if (n.rfind("mlp.", 0) == 0 && n != "mlp.b2") std::fill(t.mutable_value().v.begin(), t.mutable_value().v.end(), 0.0);
    const auto h = mlp_encode(m, g).value();
    for (int r = 0; r < h.rows; ++r)
      for (int c = 0; c < h.cols; ++c) CHECK(h(r, c) == m.p("mlp.b2").value().v[c]);
  }
  SUBCASE("matches loop reference") { check_close(encode_ref(m, g), mlp_encode(m, g).value(), 1e-12); }
}

TEST_CASE("decoder_forward") {
  std::uint64_t seed = 0;
  const Scenario s = feasible(tiny_config(3, 2), seed);
  const auto g = build_context_graph(s, initial_state(s));
  Model m(small(s, 8, 2));
  const int vocab = m.config.vocab();
  const Tensor h = encode(m, g);
  SUBCASE("shape") {
    for (int t = 1; t <= 5; ++t) {
      std::vector<int> in(t, 0);
      in[0] = vocab - 1;
      const Tensor u = decoder_forward(m, in, h);
      CHECK(u.rows() == t);
      CHECK(u.cols() == vocab);
    }
  }
  SUBCASE("causality") {
    const std::vector<int> a{vocab - 1, 0, 3};
    const std::vector<int> b{vocab - 1, 0, 3, 1, 2};
    const auto ua = decoder_forward(m, a, h).value();
    const auto ub = decoder_forward(m, b, h).value();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < vocab; ++c) CHECK(ua(r, c) == ub(r, c));
  }
  SUBCASE("loop reference") {
    const std::vector<int> in{vocab - 1, 2, 1};
    check_close(decoder_ref(m, in, encode_ref(m, g)), decoder_forward(m, in, h).value(), 1e-11);
  }
  SUBCASE("out of vocabulary") {
    CHECK_THROWS_AS(decoder_forward(m, {vocab - 1, vocab}, h), Error);
    CHECK_THROWS_AS(decoder_forward(m, {vocab - 1, -1}, h), Error);
  }
}

TEST_CASE("cross-entropy") {
  SUBCASE("confident correct logits") {
    Matrix u(2, 4, 0.0);
    u(0, 1) = 60;
    u(1, 3) = 60;
    CHECK(ag::cross_entropy(Tensor(u), {1, 3}).item() < 1e-20);
  }
  SUBCASE("uniform logits") {
    CHECK(ag::cross_entropy(Tensor(Matrix(5, 7, 0.3)), {0, 1, 2, 3, 6}).item() == doctest::Approx(5 * std::log(7.0)));
  }
  SUBCASE("loop reference") {
    Rng rng(5);
    const Matrix u = random_matrix(rng, 3, 6);
    CHECK(ag::cross_entropy(Tensor(u), {5, 0, 2}).item() == doctest::Approx(xent_ref(to_mat(u), {5, 0, 2})).epsilon(1e-12));
  }
}

TEST_CASE("backward") {
  std::uint64_t seed = 0;
  JointPlan plan;
  const Scenario s = feasible(tiny_config(2, 1), seed, &plan);
  const TrainSample sample = make_sample("t", s, plan);
  for (auto kind : {EncoderKind::Hgt, EncoderKind::Mlp}) {
    CAPTURE(to_string(kind));
    ModelConfig c = small(s, 16, 1, kind);
    c.max_len = 8;
    Model m(c);
    CHECK(sequence_loss(m, sample.graph, sample.tokens).item() == doctest::Approx(loss_ref(m, sample)).epsilon(1e-12));
    const GradCheck fd = finite_difference_check(m, {sample});
    CAPTURE(fd.worst);
    CHECK(fd.max_rel_error < 1e-4);

    // Positions past the sequence never receive gradient.
    m.zero_grad();
    sequence_loss(m, sample.graph, sample.tokens).backward();
    const Matrix pos_grad = m.p("dec.emb_pos").grad();
    for (int r = static_cast<int>(sample.tokens.size()); r < pos_grad.rows; ++r)
      for (int k = 0; k < pos_grad.cols; ++k) CHECK(pos_grad(r, k) == 0.0);
    // Encoder parameters receive gradient through cross-attention.
    double enc = 0;
    for (double x : m.p("enc.wz.task").grad().v) enc += std::abs(x);
    CHECK(enc > 0);
    // Linearity in the loss scale.
    std::map<std::string, Matrix> once;
    for (auto& [n, t] : m.params) once[n] = t.grad();
    m.zero_grad();
    sequence_loss(m, sample.graph, sample.tokens).backward(2.0);
    for (auto& [n, t] : m.params)
      for (std::size_t i = 0; i < once[n].size(); ++i) CHECK(t.grad().v[i] == 2.0 * once[n].v[i]);
  }
}

TEST_CASE("masked greedy decoding") {
  SUBCASE("single task forces the plan") {
    const auto s = line_scenario({{3000, 4000}});
    Model m(small(s));
    for (auto mode : {DecodeMode::EncodeOnce, DecodeMode::ReencodeEachStep}) {
      const auto plan = masked_greedy_decode(s, m, mode);
      CHECK(plan.actions == std::vector<Action>{Action::visit(0, 0)});
    }
  }
  SUBCASE("deterministic and always executable") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const auto s = generate_scenario(tiny_config(4, 2), seed);
      Model m(small(s));
      for (auto mode : {DecodeMode::EncodeOnce, DecodeMode::ReencodeEachStep}) {
        try {
          const auto plan = masked_greedy_decode(s, m, mode);
          CHECK(plan == masked_greedy_decode(s, m, mode));
          CHECK_NOTHROW(execute_plan(s, plan));
        } catch (const DeadEnd&) {
        }
      }
    }
  }
  SUBCASE("dead end") {
    const auto s = line_scenario({{15000, 0}});
    Model m(small(s));
    try {
      masked_greedy_decode(s, m);
      FAIL("expected a dead end");
    } catch (const DeadEnd& e) {
      CHECK(e.step() == 0);
    }
  }
  SUBCASE("model shape must match") {
    const auto s = line_scenario({{3000, 4000}});
    Model m(small(line_scenario({{1, 1}, {2, 2}})));
    CHECK_THROWS_AS(masked_greedy_decode(s, m), ConfigError);
  }
}

TEST_CASE("batching, training and checkpoints") {
  std::vector<TrainSample> data;
  Scenario first;
  std::uint64_t seed = 0;
  for (int k = 0; k < 5; ++k, ++seed) {
    JointPlan plan;
    const Scenario s = feasible(tiny_config(3, 2), seed, &plan);
    if (k == 0) first = s;
    data.push_back(make_sample(s.id, s, plan));
  }
  SUBCASE("batches cover each epoch exactly once") {
    std::vector<int> seen;
    for (long step = 0; step < 3; ++step) {
      const auto b = batch_indices(5, 2, 7, step);
      seen.insert(seen.end(), b.begin(), b.end());
    }
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(batch_indices(5, 2, 7, 3) == batch_indices(5, 2, 7, 3));
  }
  SUBCASE("near-zero output layer starts at T ln V") {
    Model m(small(first));
    for (double& x : m.p("dec.out").mutable_value().v) x *= 1e-9;
    const double expected = static_cast<double>(data[0].tokens.size()) * std::log(static_cast<double>(m.config.vocab()));
    CHECK(sequence_loss(m, data[0].graph, data[0].tokens).item() == doctest::Approx(expected).epsilon(1e-6));
  }
  SUBCASE("loss goes down and resume is bit-identical") {
    const auto dir = std::filesystem::temp_directory_path() / "coplan_train_test";
    std::filesystem::remove_all(dir);
    TrainConfig tc;
    tc.lr = 3e-3;
    tc.batch = 2;
    tc.steps = 40;
    tc.seed = 3;
    Model full(small(first, 16));
    AdamState adam_full;
    const auto rec = train(full, adam_full, data, tc);
    CHECK(rec.size() == 40);
    CHECK(rec.back().loss < rec.front().loss);

    Model part(small(first, 16));
    AdamState adam_part;
    TrainConfig half = tc;
    half.steps = 20;
    half.out_dir = dir;
    train(part, adam_part, data, half);
    auto [loaded, adam_loaded] = load_checkpoint(dir / "model.bin");
    CHECK(loaded.config == part.config);
    CHECK(adam_loaded.step == 20);
    TrainConfig rest = tc;
    rest.out_dir = dir;
    train(loaded, adam_loaded, data, rest);
    for (auto& [n, t] : full.params) CHECK(loaded.p(n).value() == t.value());

    std::ifstream csv(dir / "loss.csv");
    std::string line;
    int lines = 0;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 41);
    std::filesystem::remove_all(dir);
  }
  SUBCASE("bad checkpoint") {
    const auto path = std::filesystem::temp_directory_path() / "coplan_bad.bin";
    std::ofstream(path) << "not a checkpoint";
    CHECK_THROWS_AS(load_checkpoint(path), ParseError);
    std::filesystem::remove(path);
  }
  SUBCASE("non-finite loss aborts with the batch id") {
    Model m(small(first));
    m.p("dec.out").mutable_value().v[0] = std::nan("");
    AdamState adam;
    TrainConfig tc;
    tc.steps = 1;
    try {
      train(m, adam, data, tc);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("batch 0") != std::string::npos);
    }
  }
}

TEST_CASE("canonical relabeling") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    JointPlan plan;
    std::uint64_t sd = seed * 7;
    const Scenario s = feasible(tiny_config(5, 4, 2, 2), sd, &plan);
    const Relabeling r = canonical_relabeling(s);
    const auto& c = r.scenario;
    for (int k = 0; k + 1 < c.n_tasks(); ++k)
      CHECK(distance(c.depot, c.tasks[k].position) <= distance(c.depot, c.tasks[k + 1].position));
    CHECK(c.depot_node == 0);
    CHECK(c.road.node(c.depot_node) == s.road.node(s.depot_node));
    for (std::size_t k = 0; k < r.node_from.size(); ++k)
      for (std::size_t j = 0; j < r.node_from.size(); ++j)
        CHECK(c.road.adjacent(static_cast<int>(k), static_cast<int>(j)) == s.road.adjacent(r.node_from[k], r.node_from[j]));
    const JointPlan cp = to_canonical(r, plan);
    CHECK(from_canonical(r, cp) == plan);
    const auto m0 = metrics(execute_plan(s, plan));
    const auto m1 = metrics(execute_plan(c, cp));
    CHECK(m0.makespan == doctest::Approx(m1.makespan).epsilon(1e-12));
    CHECK(m0.uav_energy == doctest::Approx(m1.uav_energy).epsilon(1e-12));
  }
}

TEST_CASE("lookahead mask never dead-ends on a completable mission") {
  int decoded = 0;
  for (std::uint64_t seed = 0; decoded < 8; ++seed) {
    const auto s = generate_scenario(tiny_config(5, 3), seed);
    if (!completable(s, initial_state(s))) continue;
    ModelConfig c = small(s);
    c.init_seed = seed;
    Model m(c);
    for (auto mode : {DecodeMode::EncodeOnce, DecodeMode::ReencodeEachStep}) {
      const auto plan = decode_plan(s, m, mode);
      CHECK_NOTHROW(execute_plan(s, plan));
    }
    ++decoded;
  }
}

TEST_CASE("loss is invariant to consistent renumbering of tasks and road nodes") {
  Rng rng(31);
  for (int trial = 0; trial < 6; ++trial) {
    JointPlan plan;
    std::uint64_t sd = 100 + trial * 13;
    const Scenario s = feasible(tiny_config(4, 3, 1 + trial % 2, 1), sd, &plan);
    std::vector<int> tp(4), np(3);
    std::iota(tp.begin(), tp.end(), 0);
    std::iota(np.begin(), np.end(), 0);
    std::shuffle(tp.begin(), tp.end(), rng);
    std::shuffle(np.begin(), np.end(), rng);
    const Relabeling r = relabel(s, tp, np);
    const JointPlan rp = to_canonical(r, plan);
    CHECK(metrics(execute_plan(r.scenario, rp)).makespan ==
          doctest::Approx(metrics(execute_plan(s, plan)).makespan).epsilon(1e-12));
    for (auto kind : {EncoderKind::Hgt, EncoderKind::Mlp}) {
      Model m(small(s, 8, 2, kind));
      const Model pm = permuted_model(m, s, r);
      const auto a = make_sample("a", s, plan);
      const auto b = make_sample("b", r.scenario, rp);
      ag::NoGradGuard ng;
      const double la = sequence_loss(m, a.graph, a.tokens).item();
      const double lb = sequence_loss(pm, b.graph, b.tokens).item();
      CHECK(std::abs(la - lb) <= 1e-9 * std::max(1.0, std::abs(la)));
    }
  }
  CHECK_THROWS_AS(relabel(line_scenario({{1, 0}, {2, 0}}), {0, 0}, {0}), ConfigError);
}
