#include "laserprog/layers.hpp"

#include <algorithm>
#include <cmath>

namespace laserprog {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  throw DataError("unknown activation tag");
}

Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw DataError("unknown activation '" + std::string(s) + "'");
}

double sigmoid(double x) {
  x = std::clamp(x, -500.0, 500.0);
  return 1.0 / (1.0 + std::exp(-x));
}

double apply_activation(Activation act, double x) {
  switch (act) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: return sigmoid(x);
    case Activation::tanh: return std::tanh(x);
    case Activation::identity: return x;
  }
  throw DataError("unknown activation tag");
}

namespace {

double activation_grad(Activation act, double pre, double out) {
  switch (act) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return out * (1.0 - out);
    case Activation::tanh: return 1.0 - out * out;
    case Activation::identity: return 1.0;
  }
  throw DataError("unknown activation tag");
}

}  // namespace

DenseLayer DenseLayer::create(ParamSet& ps, const std::string& prefix,
                              std::size_t in_dim, std::size_t out_dim,
                              Activation act, Rng& rng) {
  DenseLayer l;
  l.in_dim = in_dim;
  l.out_dim = out_dim;
  l.act = act;
  const double s = glorot_scale(in_dim, out_dim);
  l.w = ps.add_uniform(prefix + ".W", out_dim, in_dim, s, rng);
  l.b = ps.add(prefix + ".b", out_dim, 1);
  return l;
}

DenseLayer DenseLayer::create_zero(ParamSet& ps, const std::string& prefix,
                                   std::size_t in_dim, std::size_t out_dim,
                                   Activation act) {
  DenseLayer l;
  l.in_dim = in_dim;
  l.out_dim = out_dim;
  l.act = act;
  l.w = ps.add(prefix + ".W", out_dim, in_dim);
  l.b = ps.add(prefix + ".b", out_dim, 1);
  return l;
}

Vec dense_forward(const ParamSet& ps, const DenseLayer& layer,
                  std::span<const double> x, DenseCache* cache) {
  if (x.size() != layer.in_dim) throw ShapeError("dense_forward: bad input");
  require_finite(x, "dense input");
  Vec pre = ps.at(layer.b).value.a;
  matvec_acc(ps.at(layer.w).value, x, pre);
  Vec y(layer.out_dim);
  for (std::size_t i = 0; i < layer.out_dim; ++i) {
    y[i] = apply_activation(layer.act, pre[i]);
  }
  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->pre = pre;
    cache->y = y;
  }
  return y;
}

Vec dense_backward(ParamSet& ps, const DenseLayer& layer,
                   const DenseCache& cache, std::span<const double> dy) {
  if (dy.size() != layer.out_dim || cache.x.size() != layer.in_dim) {
    throw ShapeError("dense_backward: shape mismatch");
  }
  Vec dpre(layer.out_dim);
  for (std::size_t i = 0; i < layer.out_dim; ++i) {
    dpre[i] = dy[i] * activation_grad(layer.act, cache.pre[i], cache.y[i]);
  }
  outer_acc(ps.at(layer.w).grad, dpre, cache.x);
  add_acc(ps.at(layer.b).grad.a, dpre);
  Vec dx(layer.in_dim, 0.0);
  mat_t_vec_acc(ps.at(layer.w).value, dpre, dx);
  return dx;
}

GruLayer GruLayer::create(ParamSet& ps, const std::string& prefix,
                          std::size_t in_dim, std::size_t hidden_dim,
                          Rng& rng) {
  GruLayer l;
  l.in_dim = in_dim;
  l.hidden_dim = hidden_dim;
  const double su = glorot_scale(in_dim, hidden_dim);
  const double sw = glorot_scale(hidden_dim, hidden_dim);
  l.uz = ps.add_uniform(prefix + ".Uz", hidden_dim, in_dim, su, rng);
  l.ur = ps.add_uniform(prefix + ".Ur", hidden_dim, in_dim, su, rng);
  l.uh = ps.add_uniform(prefix + ".Uh", hidden_dim, in_dim, su, rng);
  l.wz = ps.add_uniform(prefix + ".Wz", hidden_dim, hidden_dim, sw, rng);
  l.wr = ps.add_uniform(prefix + ".Wr", hidden_dim, hidden_dim, sw, rng);
  l.wh = ps.add_uniform(prefix + ".Wh", hidden_dim, hidden_dim, sw, rng);
  l.bz = ps.add(prefix + ".bz", hidden_dim, 1);
  l.br = ps.add(prefix + ".br", hidden_dim, 1);
  l.bh = ps.add(prefix + ".bh", hidden_dim, 1);
  return l;
}

GruLayer GruLayer::create_zero(ParamSet& ps, const std::string& prefix,
                               std::size_t in_dim, std::size_t hidden_dim) {
  GruLayer l;
  l.in_dim = in_dim;
  l.hidden_dim = hidden_dim;
  l.uz = ps.add(prefix + ".Uz", hidden_dim, in_dim);
  l.ur = ps.add(prefix + ".Ur", hidden_dim, in_dim);
  l.uh = ps.add(prefix + ".Uh", hidden_dim, in_dim);
  l.wz = ps.add(prefix + ".Wz", hidden_dim, hidden_dim);
  l.wr = ps.add(prefix + ".Wr", hidden_dim, hidden_dim);
  l.wh = ps.add(prefix + ".Wh", hidden_dim, hidden_dim);
  l.bz = ps.add(prefix + ".bz", hidden_dim, 1);
  l.br = ps.add(prefix + ".br", hidden_dim, 1);
  l.bh = ps.add(prefix + ".bh", hidden_dim, 1);
  return l;
}

Vec gru_cell_forward(const ParamSet& ps, const GruLayer& layer,
                     std::span<const double> x, std::span<const double> h_prev,
                     GruCache* cache) {
  const std::size_t H = layer.hidden_dim;
  if (x.size() != layer.in_dim || h_prev.size() != H) {
    throw ShapeError("gru_cell_forward: shape mismatch");
  }
  require_finite(x, "gru input");
  require_finite(h_prev, "gru state");

  Vec az = ps.at(layer.bz).value.a;
  matvec_acc(ps.at(layer.uz).value, x, az);
  matvec_acc(ps.at(layer.wz).value, h_prev, az);
  Vec ar = ps.at(layer.br).value.a;
  matvec_acc(ps.at(layer.ur).value, x, ar);
  matvec_acc(ps.at(layer.wr).value, h_prev, ar);

  Vec z(H), r(H);
  for (std::size_t i = 0; i < H; ++i) {
    z[i] = sigmoid(az[i]);
    r[i] = sigmoid(ar[i]);
  }
  Vec rh(H);
  for (std::size_t i = 0; i < H; ++i) rh[i] = r[i] * h_prev[i];

  Vec ah = ps.at(layer.bh).value.a;
  matvec_acc(ps.at(layer.uh).value, x, ah);
  matvec_acc(ps.at(layer.wh).value, rh, ah);
  Vec hbar(H), h(H);
  for (std::size_t i = 0; i < H; ++i) {
    hbar[i] = std::tanh(ah[i]);
    h[i] = z[i] * h_prev[i] + (1.0 - z[i]) * hbar[i];
  }

  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->h_prev.assign(h_prev.begin(), h_prev.end());
    cache->z = z;
    cache->r = r;
    cache->rh = rh;
    cache->hbar = hbar;
    cache->h = h;
  }
  return h;
}

GruCellGrads gru_cell_backward(ParamSet& ps, const GruLayer& layer,
                               const GruCache& cache,
                               std::span<const double> dh) {
  const std::size_t H = layer.hidden_dim;
  if (dh.size() != H || cache.h.size() != H) {
    throw ShapeError("gru_cell_backward: stale or mismatched cache");
  }

  Vec dz(H), dhbar(H), dah(H), daz(H);
  for (std::size_t i = 0; i < H; ++i) {
    dz[i] = dh[i] * (cache.h_prev[i] - cache.hbar[i]);
    dhbar[i] = dh[i] * (1.0 - cache.z[i]);
    dah[i] = dhbar[i] * (1.0 - cache.hbar[i] * cache.hbar[i]);
    daz[i] = dz[i] * cache.z[i] * (1.0 - cache.z[i]);
  }
  // s = Wh^T dah, the gradient on (r o h_prev)
  Vec s(H, 0.0);
  mat_t_vec_acc(ps.at(layer.wh).value, dah, s);
  Vec dr(H), dar(H);
  for (std::size_t i = 0; i < H; ++i) {
    dr[i] = s[i] * cache.h_prev[i];
    dar[i] = dr[i] * cache.r[i] * (1.0 - cache.r[i]);
  }

  outer_acc(ps.at(layer.uz).grad, daz, cache.x);
  outer_acc(ps.at(layer.ur).grad, dar, cache.x);
  outer_acc(ps.at(layer.uh).grad, dah, cache.x);
  outer_acc(ps.at(layer.wz).grad, daz, cache.h_prev);
  outer_acc(ps.at(layer.wr).grad, dar, cache.h_prev);
  outer_acc(ps.at(layer.wh).grad, dah, cache.rh);
  add_acc(ps.at(layer.bz).grad.a, daz);
  add_acc(ps.at(layer.br).grad.a, dar);
  add_acc(ps.at(layer.bh).grad.a, dah);

  GruCellGrads g;
  g.dx.assign(layer.in_dim, 0.0);
  mat_t_vec_acc(ps.at(layer.uz).value, daz, g.dx);
  mat_t_vec_acc(ps.at(layer.ur).value, dar, g.dx);
  mat_t_vec_acc(ps.at(layer.uh).value, dah, g.dx);

  g.dh_prev.assign(H, 0.0);
  for (std::size_t i = 0; i < H; ++i) {
    g.dh_prev[i] = dh[i] * cache.z[i] + s[i] * cache.r[i];
  }
  mat_t_vec_acc(ps.at(layer.wz).value, daz, g.dh_prev);
  mat_t_vec_acc(ps.at(layer.wr).value, dar, g.dh_prev);
  return g;
}

std::vector<GruCache> gru_sequence_forward(const ParamSet& ps,
                                           const GruLayer& layer,
                                           const std::vector<Vec>& xs,
                                           const Vec* h0) {
  if (xs.empty()) throw ShapeError("gru_sequence_forward: empty sequence");
  Vec h = h0 ? *h0 : Vec(layer.hidden_dim, 0.0);
  if (h.size() != layer.hidden_dim) {
    throw ShapeError("gru_sequence_forward: bad h0");
  }
  std::vector<GruCache> caches(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) {
    h = gru_cell_forward(ps, layer, xs[t], h, &caches[t]);
  }
  return caches;
}

GruSequenceGrads gru_sequence_backward(ParamSet& ps, const GruLayer& layer,
                                       const std::vector<GruCache>& caches,
                                       const std::vector<Vec>& dhs) {
  if (caches.empty() || caches.size() != dhs.size()) {
    throw ShapeError("gru_sequence_backward: cache/grad length mismatch");
  }
  GruSequenceGrads out;
  out.dxs.resize(caches.size());
  Vec carry(layer.hidden_dim, 0.0);
  for (std::size_t t = caches.size(); t-- > 0;) {
    Vec dh = dhs[t];
    if (dh.size() != layer.hidden_dim) {
      throw ShapeError("gru_sequence_backward: bad upstream gradient");
    }
    add_acc(dh, carry);
    GruCellGrads g = gru_cell_backward(ps, layer, caches[t], dh);
    out.dxs[t] = std::move(g.dx);
    carry = std::move(g.dh_prev);
  }
  out.dh0 = std::move(carry);
  return out;
}

}  // namespace laserprog
