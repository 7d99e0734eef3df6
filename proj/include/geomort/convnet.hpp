#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "geomort/error.hpp"
#include "geomort/image.hpp"
#include "geomort/rng.hpp"

namespace geomort {

// Negative Poisson log likelihood with the target-independent constant
// dropped: lambda - y * ln(lambda).
double poisson_nll(double lambda, double y);

// Product-moment correlation; throws DomainError on zero variance.
double pearson_r(const std::vector<double>& a, const std::vector<double>& b);

template <typename T>
struct Tensor3 {  // CHW
  int c = 0, h = 0, w = 0;
  std::vector<T> v;

  void resize(int c_, int h_, int w_) {
    c = c_;
    h = h_;
    w = w_;
    v.assign(static_cast<std::size_t>(c) * h * w, T(0));
  }
  T at(int ci, int y, int x) const { return v[(static_cast<std::size_t>(ci) * h + y) * w + x]; }
  T& at(int ci, int y, int x) { return v[(static_cast<std::size_t>(ci) * h + y) * w + x]; }
};

template <typename T>
Tensor3<T> tile_to_tensor(const ImageTile& tile) {
  Tensor3<T> t;
  t.resize(3, tile.height, tile.width);
  for (int y = 0; y < tile.height; ++y)
    for (int x = 0; x < tile.width; ++x)
      for (int c = 0; c < 3; ++c) t.at(c, y, x) = static_cast<T>(tile.at(y, x, c));
  return t;
}

template <typename T>
struct ConvLayer {
  int in_c = 0, out_c = 0;  // 3x3 kernels
  std::vector<T> w;         // out_c * in_c * 9
  std::vector<T> b;         // out_c

  T wk(int oc, int ic, int ky, int kx) const {
    return w[((static_cast<std::size_t>(oc) * in_c + ic) * 3 + ky) * 3 + kx];
  }
  T& wk(int oc, int ic, int ky, int kx) {
    return w[((static_cast<std::size_t>(oc) * in_c + ic) * 3 + ky) * 3 + kx];
  }
};

template <typename T>
struct DenseLayer {
  int in_n = 0, out_n = 0;
  std::vector<T> w;  // out_n * in_n
  std::vector<T> b;  // out_n
};

struct ConvRegressorShape {
  int input_size = 64;
  int c1 = 8;
  int c2 = 16;
  int c3 = 32;
  int d_embed = 64;

  bool operator==(const ConvRegressorShape&) const = default;
};

// Convolutional Poisson-rate regressor:
// conv3x3/ReLU/maxpool2 -> conv3x3/ReLU/maxpool2 -> conv3x3/ReLU/GAP
// -> dense/ReLU (embedding) -> dense -> exp (rate per 1,000).
template <typename T>
struct ConvRegressor {
  ConvRegressorShape shape;
  ConvLayer<T> conv1, conv2, conv3;
  DenseLayer<T> fc1, fc2;

  static ConvRegressor zero(const ConvRegressorShape& s) {
    ConvRegressor m;
    m.shape = s;
    m.conv1.in_c = 3;
    m.conv1.out_c = s.c1;
    m.conv2.in_c = s.c1;
    m.conv2.out_c = s.c2;
    m.conv3.in_c = s.c2;
    m.conv3.out_c = s.c3;
    m.fc1.in_n = s.c3;
    m.fc1.out_n = s.d_embed;
    m.fc2.in_n = s.d_embed;
    m.fc2.out_n = 1;
    for (auto* cl : {&m.conv1, &m.conv2, &m.conv3}) {
      cl->w.assign(static_cast<std::size_t>(cl->out_c) * cl->in_c * 9, T(0));
      cl->b.assign(cl->out_c, T(0));
    }
    for (auto* dl : {&m.fc1, &m.fc2}) {
      dl->w.assign(static_cast<std::size_t>(dl->out_n) * dl->in_n, T(0));
      dl->b.assign(dl->out_n, T(0));
    }
    return m;
  }

  // He-normal weights, zero biases.
  static ConvRegressor random_init(const ConvRegressorShape& s, std::uint64_t seed) {
    ConvRegressor m = zero(s);
    CounterRng rng(mix64(seed ^ 0xC0FFEE5EEDULL));
    auto init_conv = [&](ConvLayer<T>& cl) {
      const double sd = std::sqrt(2.0 / (cl.in_c * 9.0));
      for (auto& x : cl.w) x = static_cast<T>(sd * rng.normal());
    };
    auto init_dense = [&](DenseLayer<T>& dl, double gain) {
      const double sd = gain * std::sqrt(2.0 / dl.in_n);
      for (auto& x : dl.w) x = static_cast<T>(sd * rng.normal());
    };
    init_conv(m.conv1);
    init_conv(m.conv2);
    init_conv(m.conv3);
    init_dense(m.fc1, 1.0);
    init_dense(m.fc2, 0.1);  // keep the initial log-rate near the bias
    return m;
  }

  std::vector<std::vector<T>*> param_arrays() {
    return {&conv1.w, &conv1.b, &conv2.w, &conv2.b, &conv3.w,
            &conv3.b, &fc1.w,   &fc1.b,   &fc2.w,   &fc2.b};
  }
  std::vector<const std::vector<T>*> param_arrays() const {
    return {&conv1.w, &conv1.b, &conv2.w, &conv2.b, &conv3.w,
            &conv3.b, &fc1.w,   &fc1.b,   &fc2.w,   &fc2.b};
  }
};

namespace detail {

template <typename T>
void conv3x3_valid(const Tensor3<T>& in, const ConvLayer<T>& layer, Tensor3<T>& out) {
  const int oh = in.h - 2, ow = in.w - 2;
  out.resize(layer.out_c, oh, ow);
  for (int oc = 0; oc < layer.out_c; ++oc) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        T acc = layer.b[oc];
        for (int ic = 0; ic < layer.in_c; ++ic) {
          const T* row0 = &in.v[(static_cast<std::size_t>(ic) * in.h + y) * in.w + x];
          const T* row1 = row0 + in.w;
          const T* row2 = row1 + in.w;
          const T* k = &layer.w[(static_cast<std::size_t>(oc) * layer.in_c + ic) * 9];
          acc += k[0] * row0[0] + k[1] * row0[1] + k[2] * row0[2] +
                 k[3] * row1[0] + k[4] * row1[1] + k[5] * row1[2] +
                 k[6] * row2[0] + k[7] * row2[1] + k[8] * row2[2];
        }
        out.at(oc, y, x) = acc;
      }
    }
  }
}

template <typename T>
void relu_inplace(Tensor3<T>& t) {
  for (auto& x : t.v)
    if (x < T(0)) x = T(0);
}

// 2x2 max pool, stride 2, floor semantics; records flat argmax indices.
template <typename T>
void maxpool2(const Tensor3<T>& in, Tensor3<T>& out, std::vector<std::int32_t>& argmax) {
  const int oh = in.h / 2, ow = in.w / 2;
  out.resize(in.c, oh, ow);
  argmax.assign(out.v.size(), 0);
  for (int c = 0; c < in.c; ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        T best = in.at(c, 2 * y, 2 * x);
        int by = 2 * y, bx = 2 * x;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const T v = in.at(c, 2 * y + dy, 2 * x + dx);
            if (v > best) {
              best = v;
              by = 2 * y + dy;
              bx = 2 * x + dx;
            }
          }
        }
        out.at(c, y, x) = best;
        argmax[(static_cast<std::size_t>(c) * oh + y) * ow + x] =
            static_cast<std::int32_t>((static_cast<std::size_t>(c) * in.h + by) * in.w + bx);
      }
    }
  }
}

}  // namespace detail

// Cached activations from one forward pass, consumed by backward().
template <typename T>
struct ForwardCache {
  Tensor3<T> x;
  Tensor3<T> z1, p1;  // post-ReLU conv maps and pooled maps
  Tensor3<T> z2, p2;
  Tensor3<T> z3;
  std::vector<std::int32_t> idx1, idx2;
  std::vector<T> gap;        // c3
  std::vector<T> fc1_pre;    // d_embed, pre-ReLU
  std::vector<T> embedding;  // d_embed, post-ReLU
  T score = T(0);            // fc2 scalar
  T lambda = T(0);
};

template <typename T>
struct ForwardResult {
  T lambda = T(0);
  std::vector<T> embedding;
};

template <typename T>
ForwardResult<T> forward(const ConvRegressor<T>& m, const ImageTile& tile,
                         ForwardCache<T>* cache = nullptr) {
  if (tile.height != m.shape.input_size || tile.width != m.shape.input_size)
    throw DomainError("tile must be resized to the model input size before forward()");

  ForwardCache<T> local;
  ForwardCache<T>& c = cache ? *cache : local;
  c.x = tile_to_tensor<T>(tile);

  detail::conv3x3_valid(c.x, m.conv1, c.z1);
  detail::relu_inplace(c.z1);
  detail::maxpool2(c.z1, c.p1, c.idx1);

  detail::conv3x3_valid(c.p1, m.conv2, c.z2);
  detail::relu_inplace(c.z2);
  detail::maxpool2(c.z2, c.p2, c.idx2);

  detail::conv3x3_valid(c.p2, m.conv3, c.z3);
  detail::relu_inplace(c.z3);

  c.gap.assign(m.shape.c3, T(0));
  const T inv_hw = T(1) / static_cast<T>(c.z3.h * c.z3.w);
  for (int ch = 0; ch < c.z3.c; ++ch) {
    T s = T(0);
    for (int y = 0; y < c.z3.h; ++y)
      for (int x = 0; x < c.z3.w; ++x) s += c.z3.at(ch, y, x);
    c.gap[ch] = s * inv_hw;
  }

  c.fc1_pre.assign(m.shape.d_embed, T(0));
  for (int o = 0; o < m.fc1.out_n; ++o) {
    T s = m.fc1.b[o];
    const T* wrow = &m.fc1.w[static_cast<std::size_t>(o) * m.fc1.in_n];
    for (int i = 0; i < m.fc1.in_n; ++i) s += wrow[i] * c.gap[i];
    c.fc1_pre[o] = s;
  }
  c.embedding = c.fc1_pre;
  for (auto& e : c.embedding)
    if (e < T(0)) e = T(0);

  T s = m.fc2.b[0];
  for (int i = 0; i < m.fc2.in_n; ++i) s += m.fc2.w[i] * c.embedding[i];
  c.score = s;
  c.lambda = std::exp(s);

  if (!std::isfinite(static_cast<double>(c.lambda))) {
    // Name the first stage that went non-finite.
    const char* stage = "output";
    auto bad = [](const auto& vec) {
      for (const auto& v : vec)
        if (!std::isfinite(static_cast<double>(v))) return true;
      return false;
    };
    if (bad(c.z1.v)) stage = "conv1";
    else if (bad(c.z2.v)) stage = "conv2";
    else if (bad(c.z3.v)) stage = "conv3";
    else if (bad(c.fc1_pre)) stage = "fc1";
    throw NumericError(std::string("non-finite activation at layer ") + stage);
  }

  ForwardResult<T> r;
  r.lambda = c.lambda;
  r.embedding = c.embedding;
  return r;
}

// Gradient accumulator; shapes mirror the model parameters.
template <typename T>
struct Gradients {
  ConvRegressor<T> g;

  explicit Gradients(const ConvRegressorShape& s) : g(ConvRegressor<T>::zero(s)) {}
  void zero() {
    for (auto* a : g.param_arrays()) std::fill(a->begin(), a->end(), T(0));
  }
};

namespace detail {

template <typename T>
void conv3x3_backward(const Tensor3<T>& in, const ConvLayer<T>& layer,
                      const Tensor3<T>& dout, ConvLayer<T>& gl, Tensor3<T>* din) {
  const int oh = dout.h, ow = dout.w;
  if (din) din->resize(in.c, in.h, in.w);
  for (int oc = 0; oc < layer.out_c; ++oc) {
    T gb = T(0);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) gb += dout.at(oc, y, x);
    gl.b[oc] += gb;
    for (int ic = 0; ic < layer.in_c; ++ic) {
      T* gw = &gl.w[(static_cast<std::size_t>(oc) * layer.in_c + ic) * 9];
      const T* k = &layer.w[(static_cast<std::size_t>(oc) * layer.in_c + ic) * 9];
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          const T d = dout.at(oc, y, x);
          if (d == T(0)) continue;
          const T* row0 = &in.v[(static_cast<std::size_t>(ic) * in.h + y) * in.w + x];
          const T* row1 = row0 + in.w;
          const T* row2 = row1 + in.w;
          gw[0] += d * row0[0];
          gw[1] += d * row0[1];
          gw[2] += d * row0[2];
          gw[3] += d * row1[0];
          gw[4] += d * row1[1];
          gw[5] += d * row1[2];
          gw[6] += d * row2[0];
          gw[7] += d * row2[1];
          gw[8] += d * row2[2];
          if (din) {
            T* d0 = &din->v[(static_cast<std::size_t>(ic) * in.h + y) * in.w + x];
            T* d1 = d0 + in.w;
            T* d2 = d1 + in.w;
            d0[0] += d * k[0];
            d0[1] += d * k[1];
            d0[2] += d * k[2];
            d1[0] += d * k[3];
            d1[1] += d * k[4];
            d1[2] += d * k[5];
            d2[0] += d * k[6];
            d2[1] += d * k[7];
            d2[2] += d * k[8];
          }
        }
      }
    }
  }
}

}  // namespace detail

// Accumulates d(loss)/d(params) into grads for one sample, given
// dloss_dscore = d(loss)/d(pre-exp score). For the Poisson NLL contribution
// of one tile in a mean-over-batch loss, dloss_dscore = (lambda - y) / batch.
template <typename T>
void backward(const ConvRegressor<T>& m, const ForwardCache<T>& c, T dloss_dscore,
              Gradients<T>& grads) {
  auto& g = grads.g;

  // fc2
  g.fc2.b[0] += dloss_dscore;
  std::vector<T> demb(m.shape.d_embed);
  for (int i = 0; i < m.fc2.in_n; ++i) {
    g.fc2.w[i] += dloss_dscore * c.embedding[i];
    demb[i] = dloss_dscore * m.fc2.w[i];
    if (c.fc1_pre[i] <= T(0)) demb[i] = T(0);  // ReLU gate
  }

  // fc1
  std::vector<T> dgap(m.shape.c3, T(0));
  for (int o = 0; o < m.fc1.out_n; ++o) {
    const T d = demb[o];
    g.fc1.b[o] += d;
    if (d == T(0)) continue;
    T* gw = &g.fc1.w[static_cast<std::size_t>(o) * m.fc1.in_n];
    const T* w = &m.fc1.w[static_cast<std::size_t>(o) * m.fc1.in_n];
    for (int i = 0; i < m.fc1.in_n; ++i) {
      gw[i] += d * c.gap[i];
      dgap[i] += d * w[i];
    }
  }

  // GAP -> conv3 map, through the ReLU on z3 (z3 stores post-ReLU values).
  Tensor3<T> dz3;
  dz3.resize(c.z3.c, c.z3.h, c.z3.w);
  const T inv_hw = T(1) / static_cast<T>(c.z3.h * c.z3.w);
  for (int ch = 0; ch < c.z3.c; ++ch) {
    const T d = dgap[ch] * inv_hw;
    for (int y = 0; y < c.z3.h; ++y)
      for (int x = 0; x < c.z3.w; ++x)
        dz3.at(ch, y, x) = c.z3.at(ch, y, x) > T(0) ? d : T(0);
  }

  Tensor3<T> dp2;
  detail::conv3x3_backward(c.p2, m.conv3, dz3, g.conv3, &dp2);

  // Unpool into the conv2 map, gated by its ReLU.
  Tensor3<T> dz2;
  dz2.resize(c.z2.c, c.z2.h, c.z2.w);
  for (std::size_t i = 0; i < dp2.v.size(); ++i) {
    const auto src = static_cast<std::size_t>(c.idx2[i]);
    if (c.z2.v[src] > T(0)) dz2.v[src] += dp2.v[i];
  }

  Tensor3<T> dp1;
  detail::conv3x3_backward(c.p1, m.conv2, dz2, g.conv2, &dp1);

  Tensor3<T> dz1;
  dz1.resize(c.z1.c, c.z1.h, c.z1.w);
  for (std::size_t i = 0; i < dp1.v.size(); ++i) {
    const auto src = static_cast<std::size_t>(c.idx1[i]);
    if (c.z1.v[src] > T(0)) dz1.v[src] += dp1.v[i];
  }

  detail::conv3x3_backward(c.x, m.conv1, dz1, g.conv1, nullptr);
}

// SGD with classical momentum: v <- mu v - lr g; p <- p + v.
template <typename T>
class SgdMomentum {
public:
  SgdMomentum(const ConvRegressorShape& s, double lr, double momentum)
      : vel_(ConvRegressor<T>::zero(s)), lr_(lr), momentum_(momentum) {}

  void step(ConvRegressor<T>& m, const Gradients<T>& grads) {
    auto params = m.param_arrays();
    auto vels = vel_.param_arrays();
    auto gs = grads.g.param_arrays();
    for (std::size_t a = 0; a < params.size(); ++a) {
      auto& p = *params[a];
      auto& v = *vels[a];
      const auto& g = *gs[a];
      for (std::size_t i = 0; i < p.size(); ++i) {
        v[i] = static_cast<T>(momentum_ * v[i] - lr_ * g[i]);
        p[i] += v[i];
      }
    }
  }

private:
  ConvRegressor<T> vel_;
  double lr_;
  double momentum_;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 5;
  int batch_size = 32;
  std::uint64_t seed = 2015;
  bool augment = true;
  double momentum = 0.9;
};

struct TrainLogEntry {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  ConvRegressor<float> model;
  std::vector<TrainLogEntry> log;
  int best_epoch = 0;  // epoch whose parameters are returned
  bool diverged = false;
};

using TileLoader = std::function<ImageTile(std::size_t)>;

// Trains on image-level batches; targets are the county crude rates of each
// tile. Returns the parameters from the epoch with minimal validation loss.
TrainResult train(const ConvRegressorShape& shape, const TileLoader& load_tile,
                  const std::vector<double>& target_rates,
                  const std::vector<std::size_t>& train_idx,
                  const std::vector<std::size_t>& val_idx, const TrainConfig& cfg);

double predict_tile(const ConvRegressor<float>& m, const ImageTile& tile);

// Arithmetic mean of per-image rates for one county.
double predict_county(const ConvRegressor<float>& m, const std::vector<ImageTile>& tiles);
double mean_rate(const std::vector<double>& per_image_lambda);

// Versioned little-endian checkpoint.
void save_checkpoint(std::ostream& out, const ConvRegressor<float>& m);
ConvRegressor<float> load_checkpoint(std::istream& in);
void save_checkpoint_file(const std::string& path, const ConvRegressor<float>& m);
ConvRegressor<float> load_checkpoint_file(const std::string& path);

// Training log CSV: epoch,train_loss,val_loss
void write_train_log(std::ostream& out, const std::vector<TrainLogEntry>& log);

struct EmbeddingMatrix {
  std::vector<TileKey> keys;
  Eigen::MatrixXd E;  // n x d
};

// Embedding import CSV: fips,school,row,col,e0..e{d-1}. When known_keys is
// non-null every row must reference one of them.
EmbeddingMatrix import_embeddings(std::istream& in,
                                  const std::set<TileKey>* known_keys = nullptr);
void write_embeddings(std::ostream& out, const EmbeddingMatrix& em);

}  // namespace geomort
