#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "aisr/errors.hpp"
#include "aisr/rng.hpp"

namespace aisr::nn {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

enum class Activation { identity, leaky_relu, sigmoid };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

template <class S>
struct DenseLayer {
  MatX<S> weights;  // out x in
  VecX<S> bias;     // out
  Activation act = Activation::identity;
  S leaky_slope = S(0.2);
};

template <class S>
struct Mlp {
  std::vector<DenseLayer<S>> layers;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weights.cols()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weights.rows()); }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size()) + static_cast<std::size_t>(l.bias.size());
    return n;
  }
};

// Glorot-uniform weights, zero biases; hidden activations as given, last layer
// takes `output_act`.
template <class S>
Mlp<S> make_mlp(const std::vector<int>& widths, Activation hidden_act, Activation output_act,
                Rng& rng, S leaky_slope = S(0.2)) {
  if (widths.size() < 2) throw ShapeError("make_mlp: need at least input and output widths");
  Mlp<S> m;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer<S> layer;
    const int in = widths[l], out = widths[l + 1];
    if (in <= 0 || out <= 0) throw ShapeError("make_mlp: widths must be positive");
    const double bound = std::sqrt(6.0 / (in + out));
    layer.weights.resize(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.weights(r, c) = static_cast<S>(rng.uniform(-bound, bound));
    layer.bias = VecX<S>::Zero(out);
    layer.act = (l + 2 == widths.size()) ? output_act : hidden_act;
    layer.leaky_slope = leaky_slope;
    m.layers.push_back(std::move(layer));
  }
  return m;
}

template <class S>
MatX<S> apply_activation(const DenseLayer<S>& layer, const MatX<S>& z) {
  switch (layer.act) {
    case Activation::identity:
      return z;
    case Activation::leaky_relu: {
      const S slope = layer.leaky_slope;
      return z.unaryExpr([slope](S v) { return v >= S(0) ? v : slope * v; });
    }
    case Activation::sigmoid:
      return z.unaryExpr([](S v) {
        if (v >= S(0)) return S(1) / (S(1) + std::exp(-v));
        const S e = std::exp(v);
        return e / (S(1) + e);
      });
  }
  throw ShapeError("apply_activation: unknown activation");
}

// Cached activations from one forward pass; consumed by backward().
template <class S>
struct Tape {
  const Mlp<S>* model = nullptr;
  std::vector<MatX<S>> acts;    // acts[0] = input, acts[l+1] = output of layer l
  std::vector<MatX<S>> preact;  // preact[l] = W acts[l] + b
};

// Columns are samples. Fills the tape when given.
template <class S>
MatX<S> forward(const Mlp<S>& m, const MatX<S>& input, Tape<S>* tape = nullptr) {
  if (input.rows() != m.input_dim())
    throw ShapeError("forward: input has " + std::to_string(input.rows()) + " rows, model expects " +
                     std::to_string(m.input_dim()));
  if (tape) {
    tape->model = &m;
    tape->acts.clear();
    tape->preact.clear();
    tape->acts.push_back(input);
  }
  MatX<S> a = input;
  for (const auto& layer : m.layers) {
    MatX<S> z = (layer.weights * a).colwise() + layer.bias;
    a = apply_activation(layer, z);
    if (tape) {
      tape->preact.push_back(std::move(z));
      tape->acts.push_back(a);
    }
  }
  return a;
}

template <class S>
struct Gradients {
  std::vector<MatX<S>> d_weights;
  std::vector<VecX<S>> d_bias;
};

template <class S>
Gradients<S> make_gradients(const Mlp<S>& m) {
  Gradients<S> g;
  for (const auto& l : m.layers) {
    g.d_weights.push_back(MatX<S>::Zero(l.weights.rows(), l.weights.cols()));
    g.d_bias.push_back(VecX<S>::Zero(l.bias.size()));
  }
  return g;
}

// Reverse pass. Returns dL/d(input); writes parameter gradients when `grads`
// is non-null (pass null to chain through frozen networks cheaply).
template <class S>
MatX<S> backward(const Mlp<S>& m, const Tape<S>& tape, const MatX<S>& d_output,
                 Gradients<S>* grads) {
  if (tape.model != &m || tape.preact.size() != m.layers.size())
    throw ShapeError("backward: tape does not belong to this model");
  if (d_output.rows() != m.output_dim() || d_output.cols() != tape.acts.back().cols())
    throw ShapeError("backward: output gradient shape mismatch");
  MatX<S> d = d_output;
  for (int l = static_cast<int>(m.layers.size()) - 1; l >= 0; --l) {
    const auto& layer = m.layers[static_cast<std::size_t>(l)];
    const auto& z = tape.preact[static_cast<std::size_t>(l)];
    MatX<S> dz;
    switch (layer.act) {
      case Activation::identity:
        dz = std::move(d);
        break;
      case Activation::leaky_relu: {
        const S slope = layer.leaky_slope;
        dz = d.binaryExpr(z, [slope](S g, S zv) { return zv >= S(0) ? g : slope * g; });
        break;
      }
      case Activation::sigmoid: {
        const auto& out = tape.acts[static_cast<std::size_t>(l) + 1];
        dz = d.cwiseProduct(
            out.unaryExpr([](S s) { return s * (S(1) - s); }));
        break;
      }
    }
    if (grads) {
      grads->d_weights[static_cast<std::size_t>(l)].noalias() =
          dz * tape.acts[static_cast<std::size_t>(l)].transpose();
      grads->d_bias[static_cast<std::size_t>(l)] = dz.rowwise().sum();
    }
    d.noalias() = layer.weights.transpose() * dz;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Losses. Batch matrices are element-wise reduced by the mean over ALL
// entries; gradients are w.r.t. the prediction argument.

template <class S>
inline S clamp_probability(S p) {
  const S eps = S(1e-7);
  return std::min(std::max(p, eps), S(1) - eps);
}

template <class S>
S loss_bce(const MatX<S>& target, const MatX<S>& pred, MatX<S>* grad = nullptr) {
  if (target.rows() != pred.rows() || target.cols() != pred.cols())
    throw ShapeError("loss_bce: shape mismatch");
  const S n = static_cast<S>(pred.size());
  S total = S(0);
  if (grad) grad->resize(pred.rows(), pred.cols());
  for (Eigen::Index c = 0; c < pred.cols(); ++c) {
    for (Eigen::Index r = 0; r < pred.rows(); ++r) {
      const S y = target(r, c);
      const S p = clamp_probability(pred(r, c));
      total -= y * std::log(p) + (S(1) - y) * std::log(S(1) - p);
      if (grad) (*grad)(r, c) = (p - y) / (p * (S(1) - p)) / n;
    }
  }
  return total / n;
}

template <class S>
S loss_mse(const MatX<S>& target, const MatX<S>& pred, MatX<S>* grad = nullptr) {
  if (target.rows() != pred.rows() || target.cols() != pred.cols())
    throw ShapeError("loss_mse: shape mismatch");
  const S n = static_cast<S>(pred.size());
  const MatX<S> diff = pred - target;
  if (grad) *grad = diff * (S(2) / n);
  return diff.squaredNorm() / n;
}

template <class S>
S loss_mae(const MatX<S>& target, const MatX<S>& pred, MatX<S>* grad = nullptr) {
  if (target.rows() != pred.rows() || target.cols() != pred.cols())
    throw ShapeError("loss_mae: shape mismatch");
  const S n = static_cast<S>(pred.size());
  if (grad) grad->resize(pred.rows(), pred.cols());
  S total = S(0);
  for (Eigen::Index c = 0; c < pred.cols(); ++c) {
    for (Eigen::Index r = 0; r < pred.rows(); ++r) {
      const S d = pred(r, c) - target(r, c);
      total += std::abs(d);
      if (grad) (*grad)(r, c) = (d > S(0) ? S(1) : (d < S(0) ? S(-1) : S(0))) / n;
    }
  }
  return total / n;
}

// mu, log_var: latent dim x batch.
template <class S>
struct GaussianLatentParams {
  MatX<S> mu;
  MatX<S> log_var;
};

// Closed-form KL(N(mu, sigma^2) || N(0, I)) summed over latent dims and
// averaged over the batch: -1/2 sum_p (1 + log s^2 - mu^2 - s^2).
template <class S>
S loss_kl(const GaussianLatentParams<S>& params, MatX<S>* d_mu = nullptr,
          MatX<S>* d_log_var = nullptr) {
  if (params.mu.rows() != params.log_var.rows() || params.mu.cols() != params.log_var.cols())
    throw ShapeError("loss_kl: mu / log_var shape mismatch");
  const S batch = static_cast<S>(params.mu.cols());
  S total = S(0);
  if (d_mu) d_mu->resize(params.mu.rows(), params.mu.cols());
  if (d_log_var) d_log_var->resize(params.mu.rows(), params.mu.cols());
  for (Eigen::Index c = 0; c < params.mu.cols(); ++c) {
    for (Eigen::Index r = 0; r < params.mu.rows(); ++r) {
      const S mu = params.mu(r, c);
      const S lv = params.log_var(r, c);
      const S var = std::exp(lv);
      total += S(-0.5) * (S(1) + lv - mu * mu - var);
      if (d_mu) (*d_mu)(r, c) = mu / batch;
      if (d_log_var) (*d_log_var)(r, c) = S(0.5) * (var - S(1)) / batch;
    }
  }
  return total / batch;
}

// Per-sample MAE + alpha * KL, averaged over the batch (the inverse-network
// objective; alpha balances reconstruction against the latent prior).
template <class S>
S loss_inn(const MatX<S>& target, const MatX<S>& pred, const GaussianLatentParams<S>& params,
           S alpha, MatX<S>* d_pred = nullptr, MatX<S>* d_mu = nullptr,
           MatX<S>* d_log_var = nullptr) {
  if (alpha < S(0)) throw ConfigError("loss_inn: alpha must be >= 0");
  const S mae = loss_mae(target, pred, d_pred);
  const S kl = loss_kl(params, d_mu, d_log_var);
  if (d_mu) *d_mu *= alpha;
  if (d_log_var) *d_log_var *= alpha;
  return mae + alpha * kl;
}

// z = mu + exp(log_var / 2) . eps
template <class S>
MatX<S> reparameterize(const GaussianLatentParams<S>& params, const MatX<S>& eps) {
  if (eps.rows() != params.mu.rows() || eps.cols() != params.mu.cols())
    throw ShapeError("reparameterize: eps shape mismatch");
  return params.mu + (params.log_var * S(0.5)).array().exp().matrix().cwiseProduct(eps);
}

// Gradients of z through the reparameterization: dz/dmu = I, dz/dlog_var = z_sigma_part/2.
template <class S>
void reparameterize_backward(const GaussianLatentParams<S>& params, const MatX<S>& eps,
                             const MatX<S>& d_z, MatX<S>& d_mu, MatX<S>& d_log_var) {
  d_mu = d_z;
  d_log_var = d_z.cwiseProduct(
      (params.log_var * S(0.5)).array().exp().matrix().cwiseProduct(eps) * S(0.5));
}

// ---------------------------------------------------------------------------
// Adam

template <class S>
struct AdamState {
  S beta1 = S(0.9), beta2 = S(0.999), eps = S(1e-8);
  long step = 0;
  std::vector<MatX<S>> m_w, v_w;
  std::vector<VecX<S>> m_b, v_b;
};

template <class S>
AdamState<S> make_adam(const Mlp<S>& model, S beta1 = S(0.9), S beta2 = S(0.999),
                       S eps = S(1e-8)) {
  AdamState<S> st;
  st.beta1 = beta1;
  st.beta2 = beta2;
  st.eps = eps;
  for (const auto& l : model.layers) {
    st.m_w.push_back(MatX<S>::Zero(l.weights.rows(), l.weights.cols()));
    st.v_w.push_back(MatX<S>::Zero(l.weights.rows(), l.weights.cols()));
    st.m_b.push_back(VecX<S>::Zero(l.bias.size()));
    st.v_b.push_back(VecX<S>::Zero(l.bias.size()));
  }
  return st;
}

template <class S>
void adam_step(Mlp<S>& model, AdamState<S>& st, const Gradients<S>& grads, S lr) {
  if (st.m_w.size() != model.layers.size() || grads.d_weights.size() != model.layers.size())
    throw ShapeError("adam_step: state/gradient layer count mismatch");
  st.step += 1;
  const S c1 = S(1) - std::pow(st.beta1, static_cast<S>(st.step));
  const S c2 = S(1) - std::pow(st.beta2, static_cast<S>(st.step));
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
      m = st.beta1 * m + (S(1) - st.beta1) * g;
      v = st.beta2 * v + (S(1) - st.beta2) * g.cwiseProduct(g);
      param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + st.eps);
    };
    update(model.layers[l].weights, st.m_w[l], st.v_w[l], grads.d_weights[l]);
    update(model.layers[l].bias, st.m_b[l], st.v_b[l], grads.d_bias[l]);
  }
}

template <class S>
bool all_finite(const Mlp<S>& model) {
  for (const auto& l : model.layers)
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

}  // namespace aisr::nn
