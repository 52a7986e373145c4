#pragma once

#include <span>
#include <string>
#include <vector>

#include "laserprog/params.hpp"

namespace laserprog {

enum class Activation { relu, sigmoid, tanh, identity };

std::string to_string(Activation a);
Activation activation_from_string(std::string_view s);

// Gate sigmoid with the argument clamped to [-500, 500].
double sigmoid(double x);
double apply_activation(Activation act, double x);

// Fully connected layer y = act(W x + b); parameters live in a ParamSet.
struct DenseLayer {
  std::size_t w = 0, b = 0;
  std::size_t in_dim = 0, out_dim = 0;
  Activation act = Activation::identity;

  static DenseLayer create(ParamSet& ps, const std::string& prefix,
                           std::size_t in_dim, std::size_t out_dim,
                           Activation act, Rng& rng);
  static DenseLayer create_zero(ParamSet& ps, const std::string& prefix,
                                std::size_t in_dim, std::size_t out_dim,
                                Activation act);
};

struct DenseCache {
  Vec x;    // input
  Vec pre;  // W x + b
  Vec y;    // act(pre)
};

Vec dense_forward(const ParamSet& ps, const DenseLayer& layer,
                  std::span<const double> x, DenseCache* cache = nullptr);
// Returns dx; accumulates dW, db into the gradient buffers.
Vec dense_backward(ParamSet& ps, const DenseLayer& layer,
                   const DenseCache& cache, std::span<const double> dy);

// GRU cell with separate input (U_*) and recurrent (W_*) weights:
//   z = sigmoid(U_z x + W_z h_prev + b_z)
//   r = sigmoid(U_r x + W_r h_prev + b_r)
//   hbar = tanh(U_h x + W_h (r o h_prev) + b_h)
//   h = z o h_prev + (1 - z) o hbar
struct GruLayer {
  std::size_t uz = 0, ur = 0, uh = 0;  // hidden x input
  std::size_t wz = 0, wr = 0, wh = 0;  // hidden x hidden
  std::size_t bz = 0, br = 0, bh = 0;  // hidden
  std::size_t in_dim = 0, hidden_dim = 0;

  static GruLayer create(ParamSet& ps, const std::string& prefix,
                         std::size_t in_dim, std::size_t hidden_dim, Rng& rng);
  static GruLayer create_zero(ParamSet& ps, const std::string& prefix,
                              std::size_t in_dim, std::size_t hidden_dim);
};

struct GruCache {
  Vec x, h_prev;
  Vec z, r, rh, hbar, h;  // rh = r o h_prev
};

Vec gru_cell_forward(const ParamSet& ps, const GruLayer& layer,
                     std::span<const double> x, std::span<const double> h_prev,
                     GruCache* cache = nullptr);

struct GruCellGrads {
  Vec dx, dh_prev;
};

// Backward of one cell; accumulates weight/bias gradients into ps.
GruCellGrads gru_cell_backward(ParamSet& ps, const GruLayer& layer,
                               const GruCache& cache,
                               std::span<const double> dh);

// Left-to-right unroll; h0 defaults to zero. The last cache holds the layer
// output h.
std::vector<GruCache> gru_sequence_forward(const ParamSet& ps,
                                           const GruLayer& layer,
                                           const std::vector<Vec>& xs,
                                           const Vec* h0 = nullptr);

struct GruSequenceGrads {
  std::vector<Vec> dxs;
  Vec dh0;
};

// dhs[t] is the upstream gradient on the hidden state emitted at step t
// (zero vectors where unused).
GruSequenceGrads gru_sequence_backward(ParamSet& ps, const GruLayer& layer,
                                       const std::vector<GruCache>& caches,
                                       const std::vector<Vec>& dhs);

}  // namespace laserprog
