#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "schedlab/rng.hpp"

namespace schedlab {

constexpr double kLayerNormEps = 1e-8;

// ---------------------------------------------------------------------------
// Configuration and parameters
// ---------------------------------------------------------------------------

/// Transformer-encoder policy/value network over (user, subband) tokens.
/// Sized so a full forward pass stays cheap inside tree search.
struct NetConfig {
  int n_user = 0;
  int n_subband = 0;
  int m = 0;           // co-scheduling cap, kept for checkpoint validation
  int n_actions = 0;   // policy width = per-subband action count
  int feature_dim = 0; // token feature width
  int d_model = 32;
  int n_heads = 2;
  int n_blocks = 2;
  int ff_hidden = 64;
  int head_hidden = 32;
  double leaky_slope = 0.01;
  bool use_positional_encoding = true;

  int n_tokens() const { return n_user * n_subband; }
  int d_head() const { return d_model / n_heads; }

  void validate() const {
    if (n_user < 1 || n_subband < 1 || m < 1 || n_actions < 1 || feature_dim < 1)
      throw std::invalid_argument("net config: problem dimensions must be positive");
    if (d_model % n_heads != 0)
      throw std::invalid_argument("net config: d_model must divide into heads");
    if (d_model % 4 != 0)
      throw std::invalid_argument("net config: d_model must be a multiple of 4 "
                                  "(two sin/cos position ladders)");
    if (n_blocks < 1 || ff_hidden < 1 || head_hidden < 1)
      throw std::invalid_argument("net config: layer sizes must be positive");
  }

  bool operator==(const NetConfig&) const = default;
};

/// One affine layer, y = x * w + b, with b stored 1 x out.
struct DenseParams {
  Eigen::MatrixXd w;
  Eigen::MatrixXd b;
};

struct LayerNormParams {
  Eigen::MatrixXd gamma;  // 1 x d
  Eigen::MatrixXd beta;   // 1 x d
};

struct BlockParams {
  DenseParams wq, wk, wv, wo;
  LayerNormParams ln1;
  DenseParams ff1, ff2;
  LayerNormParams ln2;
};

struct NetworkParameters {
  NetConfig config;
  DenseParams input;
  std::vector<BlockParams> blocks;
  DenseParams policy1, policy2, policy3;
  DenseParams value1, value2, value3;
  Eigen::MatrixXd positional;  // n_tokens x d_model, fixed (not trained)
};

/// Visits every trainable tensor in one canonical order. The order pins down
/// initialization draws, optimizer slot alignment, and checkpoint layout.
template <typename Params, typename Fn>
void for_each_tensor(Params& p, Fn&& fn) {
  fn(p.input.w);
  fn(p.input.b);
  for (auto& blk : p.blocks) {
    fn(blk.wq.w); fn(blk.wq.b);
    fn(blk.wk.w); fn(blk.wk.b);
    fn(blk.wv.w); fn(blk.wv.b);
    fn(blk.wo.w); fn(blk.wo.b);
    fn(blk.ln1.gamma); fn(blk.ln1.beta);
    fn(blk.ff1.w); fn(blk.ff1.b);
    fn(blk.ff2.w); fn(blk.ff2.b);
    fn(blk.ln2.gamma); fn(blk.ln2.beta);
  }
  fn(p.policy1.w); fn(p.policy1.b);
  fn(p.policy2.w); fn(p.policy2.b);
  fn(p.policy3.w); fn(p.policy3.b);
  fn(p.value1.w); fn(p.value1.b);
  fn(p.value2.w); fn(p.value2.b);
  fn(p.value3.w); fn(p.value3.b);
}

inline std::vector<Eigen::MatrixXd*> tensor_list(NetworkParameters& p) {
  std::vector<Eigen::MatrixXd*> out;
  for_each_tensor(p, [&](Eigen::MatrixXd& m) { out.push_back(&m); });
  return out;
}

inline std::vector<const Eigen::MatrixXd*> tensor_list(const NetworkParameters& p) {
  std::vector<const Eigen::MatrixXd*> out;
  for_each_tensor(p, [&](const Eigen::MatrixXd& m) { out.push_back(&m); });
  return out;
}

/// Two stacked sin/cos ladders: the first d/2 coordinates encode the token's
/// user index, the second d/2 its subband index. Token order is user-major
/// (row = user * n_subband + subband).
inline Eigen::MatrixXd positional_encoding_2d(const NetConfig& cfg) {
  const int d = cfg.d_model;
  const int half = d / 2;
  Eigen::MatrixXd pe(cfg.n_tokens(), d);
  for (int k = 0; k < cfg.n_user; ++k) {
    for (int j = 0; j < cfg.n_subband; ++j) {
      const int row = k * cfg.n_subband + j;
      for (int i = 0; i < half / 2; ++i) {
        const double freq = std::pow(10000.0, -2.0 * i / half);
        pe(row, 2 * i) = std::sin(k * freq);
        pe(row, 2 * i + 1) = std::cos(k * freq);
        pe(row, half + 2 * i) = std::sin(j * freq);
        pe(row, half + 2 * i + 1) = std::cos(j * freq);
      }
    }
  }
  return pe;
}

/// Fresh parameters. Weights draw U(-1/sqrt(fan_in), +1/sqrt(fan_in)) in
/// canonical tensor order (column-major within each tensor), biases start at
/// zero, layer norms at identity.
inline NetworkParameters init_parameters(const NetConfig& cfg, Rng& rng) {
  cfg.validate();
  NetworkParameters p;
  p.config = cfg;
  const int d = cfg.d_model;
  auto dense = [&](int in, int out) {
    DenseParams dp;
    dp.w.resize(in, out);
    dp.b = Eigen::MatrixXd::Zero(1, out);
    return dp;
  };
  auto norm = [&](int dim) {
    LayerNormParams ln;
    ln.gamma = Eigen::MatrixXd::Ones(1, dim);
    ln.beta = Eigen::MatrixXd::Zero(1, dim);
    return ln;
  };
  p.input = dense(cfg.feature_dim, d);
  p.blocks.resize(cfg.n_blocks);
  for (auto& blk : p.blocks) {
    blk.wq = dense(d, d);
    blk.wk = dense(d, d);
    blk.wv = dense(d, d);
    blk.wo = dense(d, d);
    blk.ln1 = norm(d);
    blk.ff1 = dense(d, cfg.ff_hidden);
    blk.ff2 = dense(cfg.ff_hidden, d);
    blk.ln2 = norm(d);
  }
  p.policy1 = dense(d, cfg.head_hidden);
  p.policy2 = dense(cfg.head_hidden, cfg.head_hidden);
  p.policy3 = dense(cfg.head_hidden, cfg.n_actions);
  p.value1 = dense(d, cfg.head_hidden);
  p.value2 = dense(cfg.head_hidden, cfg.head_hidden);
  p.value3 = dense(cfg.head_hidden, 1);

  for_each_tensor(p, [&](Eigen::MatrixXd& t) {
    if (t.rows() == 1) return;  // biases and layer-norm rows keep their init
    const double bound = 1.0 / std::sqrt(static_cast<double>(t.rows()));
    for (Eigen::Index c = 0; c < t.cols(); ++c)
      for (Eigen::Index r = 0; r < t.rows(); ++r) t(r, c) = rng.uniform(-bound, bound);
  });
  p.positional = positional_encoding_2d(cfg);
  return p;
}

inline NetworkParameters zero_like(const NetworkParameters& src) {
  NetworkParameters out = src;
  for_each_tensor(out, [](Eigen::MatrixXd& t) { t.setZero(); });
  return out;
}

inline std::size_t count_parameters(const NetworkParameters& p) {
  std::size_t n = 0;
  for_each_tensor(p, [&](const Eigen::MatrixXd& t) { n += t.size(); });
  return n;
}

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

struct LayerNormCache {
  Eigen::MatrixXd xhat;
  Eigen::VectorXd inv_std;
};

struct BlockCache {
  Eigen::MatrixXd x_in, q, k, v;
  std::vector<Eigen::MatrixXd> attn;  // per-head T x T row-softmax weights
  Eigen::MatrixXd concat, attn_out;
  LayerNormCache ln1;
  Eigen::MatrixXd x1, ff_pre, ff_act, ff_out;
  LayerNormCache ln2;
  Eigen::MatrixXd x2;
};

/// Every intermediate needed by the backward pass. Reuse one instance across
/// calls: Eigen assignments keep the storage when shapes repeat, which makes
/// the search loop allocation-free after warm-up.
struct ForwardCache {
  Eigen::MatrixXd tokens;
  std::vector<BlockCache> blocks;
  Eigen::RowVectorXd pooled;
  Eigen::RowVectorXd p1_pre, p1, p2_pre, p2, logits;
  Eigen::RowVectorXd policy;
  Eigen::RowVectorXd v1_pre, v1, v2_pre, v2;
  double value_pre = 0.0;
  double value = 0.0;
};

inline double stable_softplus(double s) {
  if (s > 30.0) return s;
  if (s < -30.0) return std::exp(s);
  return std::log1p(std::exp(s));
}

inline double sigmoid(double s) {
  return s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
}

inline void softmax_row_inplace(Eigen::RowVectorXd& v) {
  const double m = v.maxCoeff();
  v = (v.array() - m).exp();
  v /= v.sum();
}

namespace detail {

inline void affine(const Eigen::MatrixXd& x, const DenseParams& p, Eigen::MatrixXd& y) {
  y.noalias() = x * p.w;
  y.rowwise() += p.b.row(0);
}

inline void layer_norm_forward(const Eigen::MatrixXd& x, const LayerNormParams& p,
                               LayerNormCache& c, Eigen::MatrixXd& y) {
  const auto t = x.rows();
  const auto d = x.cols();
  c.xhat.resize(t, d);
  c.inv_std.resize(t);
  y.resize(t, d);
  for (Eigen::Index r = 0; r < t; ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    c.inv_std(r) = inv;
    c.xhat.row(r) = ((x.row(r).array() - mean) * inv).matrix();
    y.row(r) = c.xhat.row(r).cwiseProduct(p.gamma.row(0)) + p.beta.row(0);
  }
}

inline void layer_norm_backward(const Eigen::MatrixXd& dy, const LayerNormParams& p,
                                const LayerNormCache& c, LayerNormParams& grad,
                                Eigen::MatrixXd& dx) {
  const auto t = dy.rows();
  const auto d = dy.cols();
  dx.resize(t, d);
  for (Eigen::Index r = 0; r < t; ++r) {
    grad.gamma.row(0) += dy.row(r).cwiseProduct(c.xhat.row(r));
    grad.beta.row(0) += dy.row(r);
    const Eigen::RowVectorXd dxhat = dy.row(r).cwiseProduct(p.gamma.row(0));
    const double m1 = dxhat.mean();
    const double m2 = dxhat.cwiseProduct(c.xhat.row(r)).mean();
    dx.row(r) =
        (c.inv_std(r) * (dxhat.array() - m1 - c.xhat.row(r).array() * m2)).matrix();
  }
}

}  // namespace detail

inline void forward(const NetworkParameters& net, const Eigen::MatrixXd& features,
                    ForwardCache& cache) {
  const auto& cfg = net.config;
  if (features.rows() != cfg.n_tokens() || features.cols() != cfg.feature_dim)
    throw std::invalid_argument("forward: feature shape mismatch");
  const int n_heads = cfg.n_heads;
  const int dh = cfg.d_head();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  detail::affine(features, net.input, cache.tokens);
  if (cfg.use_positional_encoding) cache.tokens += net.positional;

  cache.blocks.resize(net.blocks.size());
  const Eigen::MatrixXd* x = &cache.tokens;
  for (std::size_t b = 0; b < net.blocks.size(); ++b) {
    const auto& blk = net.blocks[b];
    auto& bc = cache.blocks[b];
    bc.x_in = *x;
    detail::affine(bc.x_in, blk.wq, bc.q);
    detail::affine(bc.x_in, blk.wk, bc.k);
    detail::affine(bc.x_in, blk.wv, bc.v);
    bc.attn.resize(n_heads);
    bc.concat.resize(bc.x_in.rows(), cfg.d_model);
    for (int h = 0; h < n_heads; ++h) {
      auto qh = bc.q.middleCols(h * dh, dh);
      auto kh = bc.k.middleCols(h * dh, dh);
      auto vh = bc.v.middleCols(h * dh, dh);
      Eigen::MatrixXd& a = bc.attn[h];
      a.noalias() = scale * (qh * kh.transpose());
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const double mx = a.row(r).maxCoeff();
        a.row(r) = (a.row(r).array() - mx).exp();
        a.row(r) /= a.row(r).sum();
      }
      bc.concat.middleCols(h * dh, dh).noalias() = a * vh;
    }
    detail::affine(bc.concat, blk.wo, bc.attn_out);
    detail::layer_norm_forward(bc.x_in + bc.attn_out, blk.ln1, bc.ln1, bc.x1);
    detail::affine(bc.x1, blk.ff1, bc.ff_pre);
    bc.ff_act = bc.ff_pre.cwiseMax(0.0);
    detail::affine(bc.ff_act, blk.ff2, bc.ff_out);
    detail::layer_norm_forward(bc.x1 + bc.ff_out, blk.ln2, bc.ln2, bc.x2);
    x = &bc.x2;
  }

  cache.pooled = x->colwise().mean();
  const double slope = cfg.leaky_slope;
  auto leaky = [slope](const Eigen::RowVectorXd& pre) -> Eigen::RowVectorXd {
    return pre.cwiseMax(0.0) + slope * pre.cwiseMin(0.0);
  };

  cache.p1_pre = cache.pooled * net.policy1.w + net.policy1.b.row(0);
  cache.p1 = leaky(cache.p1_pre);
  cache.p2_pre = cache.p1 * net.policy2.w + net.policy2.b.row(0);
  cache.p2 = leaky(cache.p2_pre);
  cache.logits = cache.p2 * net.policy3.w + net.policy3.b.row(0);
  cache.policy = cache.logits;
  softmax_row_inplace(cache.policy);

  cache.v1_pre = cache.pooled * net.value1.w + net.value1.b.row(0);
  cache.v1 = leaky(cache.v1_pre);
  cache.v2_pre = cache.v1 * net.value2.w + net.value2.b.row(0);
  cache.v2 = leaky(cache.v2_pre);
  cache.value_pre = (cache.v2 * net.value3.w)(0, 0) + net.value3.b(0, 0);
  cache.value = stable_softplus(cache.value_pre);
}

// ---------------------------------------------------------------------------
// Loss and backward pass
// ---------------------------------------------------------------------------

/// Per-sample objective: squared value error plus policy cross-entropy,
/// (z - v)^2 - sum_a pi_a log p_a, with the log clamped for empty support.
inline double sample_loss(const ForwardCache& cache, const Eigen::VectorXd& pi_target,
                          double z) {
  double ce = 0.0;
  for (Eigen::Index i = 0; i < pi_target.size(); ++i)
    ce -= pi_target(i) * std::log(std::max(cache.policy(i), 1e-9));
  const double dv = z - cache.value;
  return dv * dv + ce;
}

/// Accumulates d(loss)/d(params) for one sample into `grads` (caller zeroes).
/// Requires `cache` to hold the forward pass of exactly these features.
inline void backward(const NetworkParameters& net, const Eigen::MatrixXd& features,
                     const ForwardCache& cache, const Eigen::VectorXd& pi_target,
                     double z, NetworkParameters& grads) {
  const auto& cfg = net.config;
  const int n_heads = cfg.n_heads;
  const int dh = cfg.d_head();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const double slope = cfg.leaky_slope;

  auto leaky_grad = [slope](const Eigen::RowVectorXd& pre,
                            const Eigen::RowVectorXd& d) -> Eigen::RowVectorXd {
    Eigen::RowVectorXd out(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i)
      out(i) = d(i) * (pre(i) > 0.0 ? 1.0 : slope);
    return out;
  };

  Eigen::RowVectorXd dpooled = Eigen::RowVectorXd::Zero(cfg.d_model);

  // Policy head: dlogits = p - pi.
  Eigen::RowVectorXd dlogits = cache.policy - pi_target.transpose();
  grads.policy3.w.noalias() += cache.p2.transpose() * dlogits;
  grads.policy3.b.row(0) += dlogits;
  Eigen::RowVectorXd dp2 = dlogits * net.policy3.w.transpose();
  Eigen::RowVectorXd dp2_pre = leaky_grad(cache.p2_pre, dp2);
  grads.policy2.w.noalias() += cache.p1.transpose() * dp2_pre;
  grads.policy2.b.row(0) += dp2_pre;
  Eigen::RowVectorXd dp1 = dp2_pre * net.policy2.w.transpose();
  Eigen::RowVectorXd dp1_pre = leaky_grad(cache.p1_pre, dp1);
  grads.policy1.w.noalias() += cache.pooled.transpose() * dp1_pre;
  grads.policy1.b.row(0) += dp1_pre;
  dpooled += dp1_pre * net.policy1.w.transpose();

  // Value head: d/ds of (z - softplus(s))^2 = -2 (z - v) * sigmoid(s).
  const double ds = -2.0 * (z - cache.value) * sigmoid(cache.value_pre);
  Eigen::RowVectorXd dv_out(1);
  dv_out(0) = ds;
  grads.value3.w.noalias() += cache.v2.transpose() * dv_out;
  grads.value3.b.row(0) += dv_out;
  Eigen::RowVectorXd dv2 = dv_out * net.value3.w.transpose();
  Eigen::RowVectorXd dv2_pre = leaky_grad(cache.v2_pre, dv2);
  grads.value2.w.noalias() += cache.v1.transpose() * dv2_pre;
  grads.value2.b.row(0) += dv2_pre;
  Eigen::RowVectorXd dv1 = dv2_pre * net.value2.w.transpose();
  Eigen::RowVectorXd dv1_pre = leaky_grad(cache.v1_pre, dv1);
  grads.value1.w.noalias() += cache.pooled.transpose() * dv1_pre;
  grads.value1.b.row(0) += dv1_pre;
  dpooled += dv1_pre * net.value1.w.transpose();

  // Mean pooling spreads the pooled gradient evenly over tokens.
  const auto n_tokens = cache.blocks.back().x2.rows();
  Eigen::MatrixXd dx =
      Eigen::VectorXd::Constant(n_tokens, 1.0 / static_cast<double>(n_tokens)) * dpooled;

  for (int b = static_cast<int>(net.blocks.size()) - 1; b >= 0; --b) {
    const auto& blk = net.blocks[b];
    const auto& bc = cache.blocks[b];
    auto& gblk = grads.blocks[b];

    Eigen::MatrixXd dsum2;
    detail::layer_norm_backward(dx, blk.ln2, bc.ln2, gblk.ln2, dsum2);
    // Residual: x2 = LN2(x1 + ff_out).
    Eigen::MatrixXd dx1 = dsum2;
    gblk.ff2.w.noalias() += bc.ff_act.transpose() * dsum2;
    gblk.ff2.b.row(0) += dsum2.colwise().sum();
    Eigen::MatrixXd dff_act = dsum2 * blk.ff2.w.transpose();
    Eigen::MatrixXd dff_pre =
        dff_act.cwiseProduct((bc.ff_pre.array() > 0.0).cast<double>().matrix());
    gblk.ff1.w.noalias() += bc.x1.transpose() * dff_pre;
    gblk.ff1.b.row(0) += dff_pre.colwise().sum();
    dx1.noalias() += dff_pre * blk.ff1.w.transpose();

    Eigen::MatrixXd dsum1;
    detail::layer_norm_backward(dx1, blk.ln1, bc.ln1, gblk.ln1, dsum1);
    // Residual: x1 = LN1(x_in + attn_out).
    Eigen::MatrixXd dx_in = dsum1;
    gblk.wo.w.noalias() += bc.concat.transpose() * dsum1;
    gblk.wo.b.row(0) += dsum1.colwise().sum();
    Eigen::MatrixXd dconcat = dsum1 * blk.wo.w.transpose();

    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(bc.q.rows(), bc.q.cols());
    Eigen::MatrixXd dk = Eigen::MatrixXd::Zero(bc.k.rows(), bc.k.cols());
    Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(bc.v.rows(), bc.v.cols());
    for (int h = 0; h < n_heads; ++h) {
      auto qh = bc.q.middleCols(h * dh, dh);
      auto kh = bc.k.middleCols(h * dh, dh);
      auto vh = bc.v.middleCols(h * dh, dh);
      const Eigen::MatrixXd& a = bc.attn[h];
      const Eigen::MatrixXd doh = dconcat.middleCols(h * dh, dh);
      Eigen::MatrixXd da = doh * vh.transpose();
      dv.middleCols(h * dh, dh).noalias() = a.transpose() * doh;
      // Row-wise softmax backward: ds = a .* (da - rowsum(da .* a)).
      Eigen::MatrixXd dscore(a.rows(), a.cols());
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const double dot = da.row(r).cwiseProduct(a.row(r)).sum();
        dscore.row(r) = a.row(r).cwiseProduct((da.row(r).array() - dot).matrix());
      }
      dq.middleCols(h * dh, dh).noalias() = scale * (dscore * kh);
      dk.middleCols(h * dh, dh).noalias() = scale * (dscore.transpose() * qh);
    }
    gblk.wq.w.noalias() += bc.x_in.transpose() * dq;
    gblk.wq.b.row(0) += dq.colwise().sum();
    gblk.wk.w.noalias() += bc.x_in.transpose() * dk;
    gblk.wk.b.row(0) += dk.colwise().sum();
    gblk.wv.w.noalias() += bc.x_in.transpose() * dv;
    gblk.wv.b.row(0) += dv.colwise().sum();
    dx_in.noalias() += dq * blk.wq.w.transpose();
    dx_in.noalias() += dk * blk.wk.w.transpose();
    dx_in.noalias() += dv * blk.wv.w.transpose();
    dx = std::move(dx_in);
  }

  grads.input.w.noalias() += features.transpose() * dx;
  grads.input.b.row(0) += dx.colwise().sum();
}

// ---------------------------------------------------------------------------
// Optimizer and training loop
// ---------------------------------------------------------------------------

struct TrainingExample {
  Eigen::MatrixXd features;
  Eigen::VectorXd pi;
  double z = 0.0;
};

struct AdamState {
  NetworkParameters m, v;
  long t = 0;
};

inline AdamState make_adam(const NetworkParameters& params) {
  return AdamState{zero_like(params), zero_like(params), 0};
}

inline void adam_step(NetworkParameters& params, const NetworkParameters& grads,
                      AdamState& st, double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ++st.t;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
  auto ps = tensor_list(params);
  auto gs = tensor_list(grads);
  auto ms = tensor_list(st.m);
  auto vs = tensor_list(st.v);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Eigen::MatrixXd& m = *ms[i];
    Eigen::MatrixXd& v = *vs[i];
    const Eigen::MatrixXd& g = *gs[i];
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    ps[i]->array() -=
        lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
}

struct TrainOptions {
  int epochs = 50;
  int batch_size = 64;
  double learning_rate = 1e-4;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean per-sample loss per epoch
};

/// Adam minibatch training with a fresh optimizer per call. Shuffling uses
/// Fisher-Yates on the caller's stream, so identical (params, data, options,
/// rng) reproduce identical updated parameters bit for bit.
inline TrainReport train(NetworkParameters& params, const std::vector<TrainingExample>& data,
                         const TrainOptions& opt, Rng& rng) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (opt.epochs < 1 || opt.batch_size < 1 || opt.learning_rate <= 0.0)
    throw std::invalid_argument("train: bad options");
  AdamState adam = make_adam(params);
  NetworkParameters grads = zero_like(params);
  ForwardCache cache;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  report.epoch_loss.reserve(opt.epochs);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(i));
      std::swap(order[i - 1], order[j]);
    }
    double loss_sum = 0.0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      const std::size_t count =
          std::min<std::size_t>(opt.batch_size, order.size() - cursor);
      for_each_tensor(grads, [](Eigen::MatrixXd& t) { t.setZero(); });
      for (std::size_t i = 0; i < count; ++i) {
        const auto& ex = data[order[cursor + i]];
        forward(params, ex.features, cache);
        loss_sum += sample_loss(cache, ex.pi, ex.z);
        backward(params, ex.features, cache, ex.pi, ex.z, grads);
      }
      const double inv = 1.0 / static_cast<double>(count);
      for_each_tensor(grads, [inv](Eigen::MatrixXd& t) { t *= inv; });
      adam_step(params, grads, adam, opt.learning_rate);
      cursor += count;
    }
    report.epoch_loss.push_back(loss_sum / static_cast<double>(data.size()));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[9] = "SLNETCKP";
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void ck_write(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
inline void ck_read(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
}
template <typename T>
void ck_write_pod(std::ostream& os, const T& v) {
  ck_write(os, &v, sizeof(T));
}
template <typename T>
T ck_read_pod(std::istream& is) {
  T v{};
  ck_read(is, &v, sizeof(T));
  return v;
}

}  // namespace detail

inline void save_checkpoint(std::ostream& os, const NetworkParameters& params) {
  using detail::ck_write;
  using detail::ck_write_pod;
  ck_write(os, kCheckpointMagic, 8);
  ck_write_pod(os, kCheckpointVersion);
  const auto& c = params.config;
  for (int v : {c.n_user, c.n_subband, c.m, c.n_actions, c.feature_dim, c.d_model,
                c.n_heads, c.n_blocks, c.ff_hidden, c.head_hidden,
                c.use_positional_encoding ? 1 : 0})
    ck_write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(v));
  ck_write_pod<double>(os, c.leaky_slope);
  const auto tensors = tensor_list(params);
  ck_write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto* t : tensors) {
    ck_write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(t->rows()));
    ck_write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(t->cols()));
    ck_write(os, t->data(), sizeof(double) * t->size());
  }
}

inline NetworkParameters load_checkpoint(std::istream& is) {
  using detail::ck_read;
  using detail::ck_read_pod;
  char magic[8];
  ck_read(is, magic, 8);
  if (std::string(magic, 8) != std::string(kCheckpointMagic, 8))
    throw std::runtime_error("checkpoint: bad magic");
  if (ck_read_pod<std::uint32_t>(is) != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version");
  NetConfig cfg;
  auto u = [&is] { return static_cast<int>(ck_read_pod<std::uint32_t>(is)); };
  cfg.n_user = u();
  cfg.n_subband = u();
  cfg.m = u();
  cfg.n_actions = u();
  cfg.feature_dim = u();
  cfg.d_model = u();
  cfg.n_heads = u();
  cfg.n_blocks = u();
  cfg.ff_hidden = u();
  cfg.head_hidden = u();
  cfg.use_positional_encoding = u() != 0;
  cfg.leaky_slope = ck_read_pod<double>(is);
  cfg.validate();

  Rng dummy(0);
  NetworkParameters params = init_parameters(cfg, dummy);
  const auto tensors = tensor_list(params);
  if (ck_read_pod<std::uint32_t>(is) != tensors.size())
    throw std::runtime_error("checkpoint: tensor count mismatch");
  for (auto* t : tensors) {
    const auto rows = static_cast<Eigen::Index>(ck_read_pod<std::uint64_t>(is));
    const auto cols = static_cast<Eigen::Index>(ck_read_pod<std::uint64_t>(is));
    if (rows != t->rows() || cols != t->cols())
      throw std::runtime_error("checkpoint: tensor shape mismatch");
    ck_read(is, t->data(), sizeof(double) * t->size());
  }
  return params;
}

inline void save_checkpoint(const std::string& path, const NetworkParameters& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  save_checkpoint(os, params);
}

inline NetworkParameters load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return load_checkpoint(is);
}

}  // namespace schedlab
