#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "coplan/error.hpp"
#include "coplan/neural.hpp"
#include "json.hpp"

namespace coplan {

using ag::Matrix;

void AdamState::apply(Model& model) {
  ++step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (auto& [name, t] : model.params) {
    const Matrix& g = t.grad();
    Matrix& mm = m[name];
    Matrix& vv = v[name];
    if (mm.size() != g.size()) mm = Matrix(g.rows, g.cols);
    if (vv.size() != g.size()) vv = Matrix(g.rows, g.cols);
    Matrix& w = t.mutable_value();
    for (std::size_t i = 0; i < g.size(); ++i) {
      mm.v[i] = beta1 * mm.v[i] + (1.0 - beta1) * g.v[i];
      vv.v[i] = beta2 * vv.v[i] + (1.0 - beta2) * g.v[i] * g.v[i];
      w.v[i] -= lr * (mm.v[i] / c1) / (std::sqrt(vv.v[i] / c2) + eps);
    }
  }
}

std::vector<int> batch_indices(std::size_t n_samples, int batch, std::uint64_t seed, long step) {
  if (n_samples == 0 || batch <= 0) throw ConfigError("training needs samples and a positive batch size");
  const long n = static_cast<long>(n_samples);
  const long b = std::min<long>(batch, n);
  const long per_epoch = (n + b - 1) / b;
  const long epoch = step / per_epoch;
  const long slice = step % per_epoch;
  std::vector<int> perm(n_samples);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epoch + 1)));
  for (long i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
  const long lo = slice * b;
  const long hi = std::min(n, lo + b);
  return {perm.begin() + lo, perm.begin() + hi};
}

std::vector<TrainRecord> train(Model& model, AdamState& adam, const std::vector<TrainSample>& data,
                               const TrainConfig& config, const std::function<void(const TrainRecord&)>& on_step) {
  if (data.empty()) throw ConfigError("training set is empty");
  adam.lr = config.lr;
  std::ofstream csv;
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    const bool resume = adam.step > 0;
    csv.open(config.out_dir / "loss.csv", resume ? std::ios::app : std::ios::trunc);
    if (!csv) throw Error("cannot write " + (config.out_dir / "loss.csv").string());
    csv.precision(17);
    if (!resume) csv << "step,loss,token_accuracy\n";
  }
  std::vector<TrainRecord> records;
  while (adam.step < config.steps) {
    const long step = adam.step;
    const auto idx = batch_indices(data.size(), config.batch, config.seed, step);
    model.zero_grad();
    double loss = 0.0;
    long correct = 0, total = 0;
    for (int i : idx) {
      int c = 0;
      ag::Tensor l = sequence_loss(model, data[i].graph, data[i].tokens, &c);
      if (!std::isfinite(l.item()))
        throw Error("non-finite loss in batch " + std::to_string(step) + " (sample " + data[i].id + ")");
      l.backward(1.0 / static_cast<double>(idx.size()));
      loss += l.item();
      correct += c;
      total += static_cast<long>(data[i].tokens.size());
    }
    adam.apply(model);
    TrainRecord rec{step, loss / static_cast<double>(idx.size()),
                    static_cast<double>(correct) / static_cast<double>(total)};
    records.push_back(rec);
    if (csv.is_open()) csv << rec.step << ',' << rec.loss << ',' << rec.accuracy << '\n';
    if (on_step) on_step(rec);
    if (!config.out_dir.empty() && config.checkpoint_every > 0 && adam.step % config.checkpoint_every == 0)
      save_checkpoint(model, adam, config.out_dir / ("checkpoint_" + std::to_string(adam.step) + ".bin"));
  }
  if (!config.out_dir.empty()) save_checkpoint(model, adam, config.out_dir / "model.bin");
  return records;
}

namespace {

constexpr char kMagic[8] = {'C', 'O', 'P', 'L', 'A', 'N', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof x);
}

template <class T>
T get(std::istream& is, const char* what) {
  T x{};
  is.read(reinterpret_cast<char*>(&x), sizeof x);
  if (!is) throw ParseError(what, std::string("truncated checkpoint while reading ") + what);
  return x;
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void get_doubles(std::istream& is, std::vector<double>& v, const std::string& what) {
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!is) throw ParseError(what, "truncated checkpoint while reading " + what);
}

nlohmann::json header(const ModelConfig& c, const AdamState& a) {
  return {{"encoder", to_string(c.encoder)}, {"d", c.d},           {"enc_layers", c.enc_layers},
          {"dec_layers", c.dec_layers},      {"max_len", c.max_len}, {"n_uav", c.n_uav},
          {"n_ugv", c.n_ugv},                {"n_task", c.n_task},   {"n_path", c.n_path},
          {"init_seed", c.init_seed},        {"ln_eps", c.ln_eps},   {"adam_lr", a.lr},
          {"adam_beta1", a.beta1},           {"adam_beta2", a.beta2}, {"adam_eps", a.eps},
          {"adam_step", a.step}};
}

}  // namespace

void save_checkpoint(const Model& model, const AdamState& adam, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os.write(kMagic, sizeof kMagic);
  put(os, kVersion);
  const std::string h = header(model.config, adam).dump();
  put(os, static_cast<std::uint64_t>(h.size()));
  os.write(h.data(), static_cast<std::streamsize>(h.size()));
  put(os, static_cast<std::uint32_t>(model.params.size()));
  for (const auto& [name, t] : model.params) {
    put(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(os, static_cast<std::int32_t>(t.rows()));
    put(os, static_cast<std::int32_t>(t.cols()));
    put_doubles(os, t.value().v);
    for (const auto* moments : {&adam.m, &adam.v}) {
      auto it = moments->find(name);
      put_doubles(os, it != moments->end() && it->second.size() == t.value().size()
                          ? it->second.v
                          : std::vector<double>(t.value().size(), 0.0));
    }
  }
  if (!os) throw Error("failed writing " + path.string());
}

std::pair<Model, AdamState> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  char magic[sizeof kMagic];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw ParseError("magic", "not a model checkpoint");
  if (get<std::uint32_t>(is, "version") != kVersion) throw ParseError("version", "unsupported checkpoint version");
  const auto hlen = get<std::uint64_t>(is, "header");
  if (hlen > (1u << 20)) throw ParseError("header", "checkpoint header too large");
  std::string htext(hlen, '\0');
  is.read(htext.data(), static_cast<std::streamsize>(hlen));
  ModelConfig c;
  AdamState adam;
  try {
    const auto h = nlohmann::json::parse(htext);
    c.encoder = encoder_kind_from_string(h.at("encoder").get<std::string>());
    c.d = h.at("d");
    c.enc_layers = h.at("enc_layers");
    c.dec_layers = h.at("dec_layers");
    c.max_len = h.at("max_len");
    c.n_uav = h.at("n_uav");
    c.n_ugv = h.at("n_ugv");
    c.n_task = h.at("n_task");
    c.n_path = h.at("n_path");
    c.init_seed = h.at("init_seed");
    c.ln_eps = h.at("ln_eps");
    adam.lr = h.at("adam_lr");
    adam.beta1 = h.at("adam_beta1");
    adam.beta2 = h.at("adam_beta2");
    adam.eps = h.at("adam_eps");
    adam.step = h.at("adam_step");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("header", std::string("bad checkpoint header: ") + e.what());
  }
  Model model(c);
  const auto n = get<std::uint32_t>(is, "tensor count");
  if (n != model.params.size()) throw ParseError("tensors", "checkpoint tensor count does not match the model");
  for (std::uint32_t k = 0; k < n; ++k) {
    const auto len = get<std::uint32_t>(is, "tensor name");
    if (len > 256) throw ParseError("tensors", "tensor name too long");
    std::string name(len, '\0');
    is.read(name.data(), len);
    auto it = model.params.find(name);
    if (!is || it == model.params.end()) throw ParseError(name, "unknown tensor '" + name + "'");
    const auto rows = get<std::int32_t>(is, "rows");
    const auto cols = get<std::int32_t>(is, "cols");
    if (rows != it->second.rows() || cols != it->second.cols())
      throw ParseError(name, "tensor '" + name + "' has the wrong shape");
    get_doubles(is, it->second.mutable_value().v, name);
    Matrix mm(rows, cols), vv(rows, cols);
    get_doubles(is, mm.v, name);
    get_doubles(is, vv.v, name);
    adam.m[name] = std::move(mm);
    adam.v[name] = std::move(vv);
  }
  return {std::move(model), std::move(adam)};
}

}  // namespace coplan
