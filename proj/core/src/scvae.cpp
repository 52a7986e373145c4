#include "laserprog/scvae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "laserprog/rng.hpp"

namespace laserprog {

using nlohmann::json;

namespace {
constexpr int kModelFormatVersion = 1;
constexpr const char* kModelFormatName = "laserprog-model";
}  // namespace

void ScvaeConfig::validate() const {
  if (seq_len < 2) throw DataError("ScvaeConfig: seq_len must be >= 2");
  if (latent_dim < 1) throw DataError("ScvaeConfig: latent_dim must be >= 1");
  if (input_dim < 1) throw DataError("ScvaeConfig: input_dim must be >= 1");
  if (oc_dim < 0 || oc_dim > 2) throw DataError("ScvaeConfig: oc_dim in {0,1,2}");
  if (encoder_sizes.empty()) throw DataError("ScvaeConfig: no encoder layers");
  for (int s : encoder_sizes) {
    if (s < 1) throw DataError("ScvaeConfig: encoder sizes must be positive");
  }
  if (batch_size < 1 || epochs < 1 || learning_rate <= 0.0) {
    throw DataError("ScvaeConfig: bad optimizer settings");
  }
  if (kl_weight < 0.0) throw DataError("ScvaeConfig: kl_weight must be >= 0");
}

Vec reparameterize(const Vec& mu, const Vec& logvar, const Vec& eps) {
  if (mu.size() != logvar.size() || mu.size() != eps.size()) {
    throw ShapeError("reparameterize: dim mismatch");
  }
  Vec z(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) {
    z[j] = mu[j] + std::exp(0.5 * logvar[j]) * eps[j];
  }
  return z;
}

LossTerms scvae_loss(const Vec& x, const Vec& xhat, const Vec& mu,
                     const Vec& logvar, double kl_weight) {
  if (x.size() != xhat.size() || mu.size() != logvar.size()) {
    throw ShapeError("scvae_loss: shape mismatch");
  }
  LossTerms t;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - xhat[i];
    t.recon += d * d;
  }
  for (std::size_t j = 0; j < mu.size(); ++j) {
    t.kl += -0.5 * (1.0 + logvar[j] - mu[j] * mu[j] - std::exp(logvar[j]));
  }
  t.total = t.recon + kl_weight * t.kl;
  return t;
}

ScvaeModel ScvaeModel::create(const ScvaeConfig& cfg, const NormStats& norm) {
  cfg.validate();
  ScvaeModel m;
  m.cfg = cfg;
  m.norm = norm;
  Rng rng(mix_seed(cfg.seed, 0));

  std::size_t in = static_cast<std::size_t>(cfg.input_dim);
  for (std::size_t i = 0; i < cfg.encoder_sizes.size(); ++i) {
    const std::size_t hid = static_cast<std::size_t>(cfg.encoder_sizes[i]);
    m.enc.push_back(
        GruLayer::create(m.params, "enc.gru" + std::to_string(i), in, hid, rng));
    in = hid;
  }
  const std::size_t feat = in;
  const std::size_t lat = static_cast<std::size_t>(cfg.latent_dim);
  m.mu_head = DenseLayer::create(m.params, "enc.mu", feat, lat,
                                 Activation::identity, rng);
  if (cfg.variational) {
    m.logvar_head = DenseLayer::create(m.params, "enc.logvar", feat, lat,
                                       Activation::identity, rng);
  }

  std::vector<int> dec_sizes(cfg.encoder_sizes.rbegin(),
                             cfg.encoder_sizes.rend());
  const std::size_t d0 = static_cast<std::size_t>(dec_sizes.front());
  m.dec_init = DenseLayer::create(m.params, "dec.init",
                                  lat + static_cast<std::size_t>(cfg.oc_dim),
                                  d0, Activation::relu, rng);
  in = static_cast<std::size_t>(cfg.input_dim);  // learned-constant input dim
  for (std::size_t i = 0; i < dec_sizes.size(); ++i) {
    const std::size_t hid = static_cast<std::size_t>(dec_sizes[i]);
    m.dec.push_back(
        GruLayer::create(m.params, "dec.gru" + std::to_string(i), in, hid, rng));
    in = hid;
  }
  m.out_head = DenseLayer::create(m.params, "dec.out", in,
                                  static_cast<std::size_t>(cfg.input_dim),
                                  Activation::identity, rng);
  m.dec_const =
      m.params.add("dec.const", static_cast<std::size_t>(cfg.input_dim), 1);
  return m;
}

namespace {

// All intermediate activations of one sample's forward pass.
struct ForwardCaches {
  std::vector<std::vector<GruCache>> enc;  // [layer][t]
  DenseCache mu, logvar;
  Vec mu_v, logvar_v, z, din;
  DenseCache dec_init;
  std::vector<std::vector<GruCache>> dec;
  std::vector<DenseCache> out;  // per step
  Vec xhat;
};

std::vector<Vec> to_steps(const Vec& x, std::size_t input_dim) {
  if (x.size() % input_dim != 0) throw ShapeError("bad sequence length");
  std::vector<Vec> xs(x.size() / input_dim);
  for (std::size_t t = 0; t < xs.size(); ++t) {
    xs[t].assign(x.begin() + t * input_dim, x.begin() + (t + 1) * input_dim);
  }
  return xs;
}

}  // namespace

void ScvaeModel::encode(const Vec& x, Vec& mu, Vec& logvar) const {
  if (x.size() != static_cast<std::size_t>(cfg.seq_len * cfg.input_dim)) {
    throw ShapeError("encode: wrong sequence length");
  }
  std::vector<Vec> xs = to_steps(x, static_cast<std::size_t>(cfg.input_dim));
  for (const GruLayer& layer : enc) {
    auto caches = gru_sequence_forward(params, layer, xs);
    xs.resize(caches.size());
    for (std::size_t t = 0; t < caches.size(); ++t) xs[t] = caches[t].h;
  }
  const Vec& feat = xs.back();
  mu = dense_forward(params, mu_head, feat);
  if (logvar_head) {
    logvar = dense_forward(params, *logvar_head, feat);
  } else {
    logvar.assign(mu.size(), 0.0);
  }
}

Vec ScvaeModel::decode(const Vec& z, const Vec& oc) const {
  if (z.size() != static_cast<std::size_t>(cfg.latent_dim) ||
      oc.size() != static_cast<std::size_t>(cfg.oc_dim)) {
    throw ShapeError("decode: dim mismatch");
  }
  Vec din = z;
  din.insert(din.end(), oc.begin(), oc.end());
  Vec h0 = dense_forward(params, dec_init, din);

  const Vec& c = params.at(dec_const).value.a;
  std::vector<Vec> xs(static_cast<std::size_t>(cfg.seq_len), c);
  for (std::size_t i = 0; i < dec.size(); ++i) {
    auto caches = gru_sequence_forward(params, dec[i], xs, i == 0 ? &h0 : nullptr);
    xs.resize(caches.size());
    for (std::size_t t = 0; t < caches.size(); ++t) xs[t] = caches[t].h;
  }
  Vec xhat;
  xhat.reserve(static_cast<std::size_t>(cfg.seq_len * cfg.input_dim));
  for (const Vec& h : xs) {
    Vec y = dense_forward(params, out_head, h);
    xhat.insert(xhat.end(), y.begin(), y.end());
  }
  return xhat;
}

Vec ScvaeModel::reconstruct(const Vec& x, const Vec& oc, const Vec* eps) const {
  Vec mu, logvar;
  encode(x, mu, logvar);
  Vec z;
  if (cfg.variational && eps != nullptr) {
    z = reparameterize(mu, logvar, *eps);
  } else {
    z = mu;  // eps = 0: posterior mean, the reproducible scoring path
  }
  return decode(z, oc);
}

Vec ScvaeModel::oc_vector(const PowerWindow& w) const {
  if (!w.normalized) throw DataError("oc_vector: window not normalized");
  Vec oc;
  if (cfg.oc_dim >= 1) oc.push_back(w.oc.temperature_c);
  if (cfg.oc_dim >= 2) oc.push_back(w.oc.current_ma);
  return oc;
}

LossTerms ScvaeModel::forward_loss(const Vec& x, const Vec& oc,
                                   const Vec& eps) const {
  Vec mu, logvar;
  encode(x, mu, logvar);
  Vec z = cfg.variational ? reparameterize(mu, logvar, eps) : mu;
  Vec xhat = decode(z, oc);
  return scvae_loss(x, xhat, mu, logvar, cfg.variational ? cfg.kl_weight : 0.0);
}

LossTerms ScvaeModel::loss_and_grad(const Vec& x, const Vec& oc,
                                    const Vec& eps, double scale) {
  const std::size_t T = static_cast<std::size_t>(cfg.seq_len);
  const std::size_t L = static_cast<std::size_t>(cfg.latent_dim);
  ForwardCaches fc;

  // ---- forward ----
  std::vector<Vec> xs = to_steps(x, static_cast<std::size_t>(cfg.input_dim));
  fc.enc.resize(enc.size());
  for (std::size_t i = 0; i < enc.size(); ++i) {
    fc.enc[i] = gru_sequence_forward(params, enc[i], xs);
    xs.resize(fc.enc[i].size());
    for (std::size_t t = 0; t < T; ++t) xs[t] = fc.enc[i][t].h;
  }
  const Vec& feat = xs.back();
  fc.mu_v = dense_forward(params, mu_head, feat, &fc.mu);
  if (logvar_head) {
    fc.logvar_v = dense_forward(params, *logvar_head, feat, &fc.logvar);
  } else {
    fc.logvar_v.assign(L, 0.0);
  }
  fc.z = cfg.variational ? reparameterize(fc.mu_v, fc.logvar_v, eps) : fc.mu_v;

  fc.din = fc.z;
  fc.din.insert(fc.din.end(), oc.begin(), oc.end());
  Vec h0 = dense_forward(params, dec_init, fc.din, &fc.dec_init);

  const Vec c = params.at(dec_const).value.a;
  std::vector<Vec> ds(T, c);
  fc.dec.resize(dec.size());
  for (std::size_t i = 0; i < dec.size(); ++i) {
    fc.dec[i] = gru_sequence_forward(params, dec[i], ds, i == 0 ? &h0 : nullptr);
    for (std::size_t t = 0; t < T; ++t) ds[t] = fc.dec[i][t].h;
  }
  fc.out.resize(T);
  fc.xhat.clear();
  for (std::size_t t = 0; t < T; ++t) {
    Vec y = dense_forward(params, out_head, ds[t], &fc.out[t]);
    fc.xhat.insert(fc.xhat.end(), y.begin(), y.end());
  }
  const double klw = cfg.variational ? cfg.kl_weight : 0.0;
  LossTerms lt = scvae_loss(x, fc.xhat, fc.mu_v, fc.logvar_v, klw);

  // ---- backward ----
  const std::size_t D = static_cast<std::size_t>(cfg.input_dim);
  std::vector<Vec> dh_top(T);
  for (std::size_t t = 0; t < T; ++t) {
    Vec dy(D);
    for (std::size_t d = 0; d < D; ++d) {
      dy[d] = scale * 2.0 * (fc.xhat[t * D + d] - x[t * D + d]);
    }
    dh_top[t] = dense_backward(params, out_head, fc.out[t], dy);
  }
  std::vector<Vec> dhs = std::move(dh_top);
  Vec dh0_first;
  for (std::size_t i = dec.size(); i-- > 0;) {
    GruSequenceGrads g = gru_sequence_backward(params, dec[i], fc.dec[i], dhs);
    if (i == 0) {
      dh0_first = std::move(g.dh0);
      // the per-step inputs of the first decoder layer are the learned
      // constant; its gradient is the sum over steps
      Vec& cg = params.at(dec_const).grad.a;
      for (const Vec& dxt : g.dxs) add_acc(cg, dxt);
    } else {
      dhs = std::move(g.dxs);
    }
  }
  Vec ddin = dense_backward(params, dec_init, fc.dec_init, dh0_first);
  Vec dz(ddin.begin(), ddin.begin() + static_cast<std::ptrdiff_t>(L));

  Vec dmu(L, 0.0), dlogvar(L, 0.0);
  if (cfg.variational) {
    for (std::size_t j = 0; j < L; ++j) {
      dmu[j] = dz[j] + scale * klw * fc.mu_v[j];
      dlogvar[j] = dz[j] * eps[j] * 0.5 * std::exp(0.5 * fc.logvar_v[j]) +
                   scale * klw * 0.5 * (std::exp(fc.logvar_v[j]) - 1.0);
    }
  } else {
    dmu = dz;
  }

  Vec dfeat = dense_backward(params, mu_head, fc.mu, dmu);
  if (logvar_head) {
    Vec d2 = dense_backward(params, *logvar_head, fc.logvar, dlogvar);
    add_acc(dfeat, d2);
  }

  // upstream on the top encoder layer: only its final hidden state is used
  const std::size_t top = enc.size() - 1;
  std::vector<Vec> enc_dhs(T, Vec(enc[top].hidden_dim, 0.0));
  enc_dhs[T - 1] = dfeat;
  for (std::size_t i = enc.size(); i-- > 0;) {
    GruSequenceGrads g = gru_sequence_backward(params, enc[i], fc.enc[i], enc_dhs);
    if (i > 0) enc_dhs = std::move(g.dxs);
  }
  return lt;
}

TrainResult scvae_train(const std::vector<PowerWindow>& train_windows,
                        const ScvaeConfig& cfg, const NormStats& norm) {
  cfg.validate();
  if (train_windows.empty()) throw DataError("train: empty dataset");
  for (const PowerWindow& w : train_windows) {
    if (w.label != Label::normal) {
      throw DataError("train: degraded window present in training data");
    }
    if (!w.normalized) throw DataError("train: windows must be normalized");
    if (w.values.size() != static_cast<std::size_t>(cfg.seq_len)) {
      throw DataError("train: window length != seq_len");
    }
  }

  TrainResult res{ScvaeModel::create(cfg, norm), {}};
  ScvaeModel& model = res.model;
  const std::size_t L = static_cast<std::size_t>(cfg.latent_dim);

  std::vector<Vec> ocs(train_windows.size());
  for (std::size_t i = 0; i < train_windows.size(); ++i) {
    ocs[i] = model.oc_vector(train_windows[i]);
  }

  Rng rng(mix_seed(cfg.seed, 1));
  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t B = static_cast<std::size_t>(cfg.batch_size);

  res.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += B) {
      const std::size_t n = std::min(B, order.size() - start);
      const double scale = 1.0 / static_cast<double>(n);
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[start + k];
        Vec eps(L, 0.0);
        if (cfg.variational) {
          for (double& e : eps) e = gaussian(rng);
        }
        LossTerms lt = model.loss_and_grad(train_windows[i].values, ocs[i],
                                           eps, scale);
        epoch_total += lt.total;
      }
      model.params.adam_step(cfg.learning_rate);
    }
    res.epoch_loss.push_back(epoch_total /
                             static_cast<double>(train_windows.size()));
  }
  return res;
}

// ---- persistence ----

namespace {

json config_to_json(const ScvaeConfig& c) {
  return json{{"seq_len", c.seq_len},
              {"input_dim", c.input_dim},
              {"encoder_sizes", c.encoder_sizes},
              {"latent_dim", c.latent_dim},
              {"oc_dim", c.oc_dim},
              {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"seed", c.seed},
              {"kl_weight", c.kl_weight},
              {"variational", c.variational}};
}

ScvaeConfig config_from_json(const json& j) {
  ScvaeConfig c;
  c.seq_len = j.at("seq_len").get<int>();
  c.input_dim = j.at("input_dim").get<int>();
  c.encoder_sizes = j.at("encoder_sizes").get<std::vector<int>>();
  c.latent_dim = j.at("latent_dim").get<int>();
  c.oc_dim = j.at("oc_dim").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.kl_weight = j.at("kl_weight").get<double>();
  c.variational = j.at("variational").get<bool>();
  return c;
}

}  // namespace

void ScvaeModel::save(const std::string& path) const {
  json j;
  j["format"] = kModelFormatName;
  j["version"] = kModelFormatVersion;
  j["config"] = config_to_json(cfg);
  j["norm_stats"] = {{"p_min", norm.p_min}, {"p_max", norm.p_max},
                     {"t_min", norm.t_min}, {"t_max", norm.t_max},
                     {"i_min", norm.i_min}, {"i_max", norm.i_max}};
  json params_j = json::object();
  for (std::size_t id = 0; id < params.count(); ++id) {
    const ParamArray& p = params.at(id);
    params_j[p.name] = {{"rows", p.value.rows},
                        {"cols", p.value.cols},
                        {"data", p.value.a}};
  }
  j["params"] = std::move(params_j);
  std::ofstream out(path);
  if (!out) throw DataError("save: cannot open " + path);
  out << j.dump(1) << "\n";
}

ScvaeModel ScvaeModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("load: corrupt model file: " + std::string(e.what()));
  }
  try {
    if (j.at("format").get<std::string>() != kModelFormatName) {
      throw DataError("load: not a model file");
    }
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw DataError("load: unsupported model format version " +
                      j.at("version").dump());
    }
    ScvaeConfig cfg = config_from_json(j.at("config"));
    const json& ns = j.at("norm_stats");
    NormStats norm;
    norm.p_min = ns.at("p_min").get<double>();
    norm.p_max = ns.at("p_max").get<double>();
    norm.t_min = ns.at("t_min").get<double>();
    norm.t_max = ns.at("t_max").get<double>();
    norm.i_min = ns.at("i_min").get<double>();
    norm.i_max = ns.at("i_max").get<double>();
    norm.validate();

    ScvaeModel m = ScvaeModel::create(cfg, norm);
    const json& params_j = j.at("params");
    if (params_j.size() != m.params.count()) {
      throw DataError("load: parameter set does not match the architecture");
    }
    for (std::size_t id = 0; id < m.params.count(); ++id) {
      ParamArray& p = m.params.at(id);
      const json& pj = params_j.at(p.name);
      if (pj.at("rows").get<std::size_t>() != p.value.rows ||
          pj.at("cols").get<std::size_t>() != p.value.cols) {
        throw DataError("load: shape mismatch for " + p.name);
      }
      p.value.a = pj.at("data").get<Vec>();
      if (p.value.a.size() != p.value.rows * p.value.cols) {
        throw DataError("load: bad array size for " + p.name);
      }
      require_finite(p.value.a, p.name.c_str());
      std::fill(p.m.a.begin(), p.m.a.end(), 0.0);
      std::fill(p.v.a.begin(), p.v.a.end(), 0.0);
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError("load: schema violation: " + std::string(e.what()));
  }
}

}  // namespace laserprog
