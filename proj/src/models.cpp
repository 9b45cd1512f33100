#include "aisr/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aisr/dataset_io.hpp"
#include "aisr/errors.hpp"
#include "aisr/metrics.hpp"

namespace aisr::models {

using nn::Activation;
using nn::Mlp;
using nn::Tape;

void TrainConfig::validate() const {
  if (learning_rate <= 0.0 || batch_size <= 0 || epochs <= 0)
    throw ConfigError("train config: learning rate, batch size and epochs must be positive");
  if (kl_weight < 0.0) throw ConfigError("train config: kl weight must be >= 0");
  if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0 || adam_eps <= 0.0)
    throw ConfigError("train config: invalid Adam parameters");
}

std::vector<int> aae_encoder_widths() { return {kImageDim, 1000, 500, kLatentDim}; }
std::vector<int> aae_generator_widths() { return {kLatentDim, 500, 1000, kImageDim}; }
std::vector<int> aae_discriminator_widths() { return {kLatentDim, 500, 500, 1}; }

std::vector<int> fnn_widths(int output_dim) {
  return {kImageDim, 1000, 1000, 800, 800, 800, 800, 600, 600, 600, output_dim};
}

std::vector<int> fnn_halfplane_widths(int output_dim) {
  return {kImageDim, 1000, 1000, 800, 800, 600, 600, output_dim};
}

std::vector<int> inn_trunk_widths(int input_dim) {
  return {input_dim, 800, 800, 500, 500, 500, 400, kLatentDim};
}

std::vector<int> inn_trunk_widths_single_freq() {
  return {kAnglesPerFreq, 800, 500, 500, 500, 400, kLatentDim};
}

std::vector<int> inn_trunk_widths_halfplane(int input_dim) {
  return {input_dim, 800, 800, 500, 500, 400, kLatentDim};
}

// ---------------------------------------------------------------------------

Standardization compute_standardization(const FMat& farfields, int block_len) {
  if (farfields.rows() % block_len != 0 || farfields.cols() == 0)
    throw ShapeError("compute_standardization: bad matrix shape");
  const int blocks = static_cast<int>(farfields.rows()) / block_len;
  Standardization st;
  st.block_len = block_len;
  st.mean.resize(static_cast<std::size_t>(blocks));
  st.stddev.resize(static_cast<std::size_t>(blocks));
  for (int b = 0; b < blocks; ++b) {
    double sum = 0.0, sum2 = 0.0;
    const auto count = static_cast<double>(block_len) * static_cast<double>(farfields.cols());
    for (Eigen::Index c = 0; c < farfields.cols(); ++c)
      for (int r = 0; r < block_len; ++r) {
        const double v = farfields(b * block_len + r, c);
        sum += v;
        sum2 += v * v;
      }
    const double mean = sum / count;
    const double var = std::max(sum2 / count - mean * mean, 1e-24);
    st.mean[static_cast<std::size_t>(b)] = mean;
    st.stddev[static_cast<std::size_t>(b)] = std::sqrt(var);
  }
  return st;
}

namespace {

int source_index(std::span<const int> src, Eigen::Index row) {
  return src.empty() ? static_cast<int>(row) : src[static_cast<std::size_t>(row)];
}

}  // namespace

void standardize_columns(FMat& values, const Standardization& stats,
                         std::span<const int> source_indices) {
  if (!source_indices.empty() &&
      static_cast<Eigen::Index>(source_indices.size()) != values.rows())
    throw ShapeError("standardize_columns: index/row mismatch");
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    const auto b = static_cast<std::size_t>(source_index(source_indices, r) / stats.block_len);
    const auto mean = static_cast<float>(stats.mean.at(b));
    const auto inv = static_cast<float>(1.0 / stats.stddev.at(b));
    for (Eigen::Index c = 0; c < values.cols(); ++c) values(r, c) = (values(r, c) - mean) * inv;
  }
}

void destandardize_columns(FMat& values, const Standardization& stats,
                           std::span<const int> source_indices) {
  if (!source_indices.empty() &&
      static_cast<Eigen::Index>(source_indices.size()) != values.rows())
    throw ShapeError("destandardize_columns: index/row mismatch");
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    const auto b = static_cast<std::size_t>(source_index(source_indices, r) / stats.block_len);
    const auto mean = static_cast<float>(stats.mean.at(b));
    const auto sd = static_cast<float>(stats.stddev.at(b));
    for (Eigen::Index c = 0; c < values.cols(); ++c) values(r, c) = values(r, c) * sd + mean;
  }
}

// ---------------------------------------------------------------------------

SelectionMask angle_range_mask(double lo_deg, double hi_deg, int angles_per_freq, int freq_count) {
  if (lo_deg >= hi_deg) throw ConfigError("angle_range_mask: empty range");
  SelectionMask mask;
  mask.freq_count = freq_count;
  std::vector<int> kept_angles;
  for (int m = 0; m < angles_per_freq; ++m) {
    const double deg = 360.0 * m / angles_per_freq;
    if (deg >= lo_deg - 1e-12 && deg <= hi_deg + 1e-12) kept_angles.push_back(m);
  }
  if (kept_angles.empty()) throw ConfigError("angle_range_mask: no angles in range");
  mask.kept_per_freq = static_cast<int>(kept_angles.size());
  for (int f = 0; f < freq_count; ++f)
    for (const int m : kept_angles) mask.indices.push_back(f * angles_per_freq + m);
  return mask;
}

SelectionMask frequency_prefix_mask(int k, int angles_per_freq, int freq_count) {
  if (k < 1 || k > freq_count) throw ConfigError("frequency_prefix_mask: k out of range");
  SelectionMask mask;
  mask.freq_count = k;
  mask.kept_per_freq = angles_per_freq;
  for (int i = 0; i < k * angles_per_freq; ++i) mask.indices.push_back(i);
  return mask;
}

std::vector<int> full_farfield_indices(int len) {
  std::vector<int> idx(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

std::vector<double> apply_mask(std::span<const double> values, const SelectionMask& mask) {
  std::vector<double> out;
  out.reserve(mask.indices.size());
  for (const int i : mask.indices) out.push_back(values[static_cast<std::size_t>(i)]);
  return out;
}

FMat apply_mask_columns(const FMat& values, const SelectionMask& mask) {
  FMat out(static_cast<Eigen::Index>(mask.indices.size()), values.cols());
  for (std::size_t r = 0; r < mask.indices.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = values.row(mask.indices[r]);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

FMat normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  FMat m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = static_cast<float>(rng.normal());
  return m;
}

std::vector<int> epoch_order(int n, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  rng.shuffle(idx);
  return idx;
}

FMat gather_columns(const FMat& data, std::span<const int> order, int begin, int end) {
  FMat out(data.rows(), end - begin);
  for (int i = begin; i < end; ++i) out.col(i - begin) = data.col(order[static_cast<std::size_t>(i)]);
  return out;
}

void check_finite(double loss, const char* stage, int epoch) {
  if (!std::isfinite(loss))
    throw NumericError(std::string(stage) + ": loss diverged at epoch " + std::to_string(epoch));
}

}  // namespace

std::pair<AaeModel, AaeHistory> train_aae(const FMat& images_train, const TrainConfig& cfg) {
  cfg.validate();
  if (images_train.rows() != kImageDim || images_train.cols() == 0)
    throw ShapeError("train_aae: images must be 4096 x N with N > 0");

  Rng init_rng(Rng::derive(cfg.seed, 1));
  AaeModel aae;
  aae.encoder = nn::make_mlp<float>(aae_encoder_widths(), Activation::leaky_relu,
                                    Activation::identity, init_rng);
  aae.generator = nn::make_mlp<float>(aae_generator_widths(), Activation::leaky_relu,
                                      Activation::sigmoid, init_rng);
  aae.discriminator = nn::make_mlp<float>(aae_discriminator_widths(), Activation::leaky_relu,
                                          Activation::sigmoid, init_rng);

  auto adam_enc = nn::make_adam<float>(aae.encoder, static_cast<float>(cfg.beta1),
                                       static_cast<float>(cfg.beta2), static_cast<float>(cfg.adam_eps));
  auto adam_gen = nn::make_adam<float>(aae.generator, static_cast<float>(cfg.beta1),
                                       static_cast<float>(cfg.beta2), static_cast<float>(cfg.adam_eps));
  auto adam_dis = nn::make_adam<float>(aae.discriminator, static_cast<float>(cfg.beta1),
                                       static_cast<float>(cfg.beta2), static_cast<float>(cfg.adam_eps));
  auto g_enc = nn::make_gradients(aae.encoder);
  auto g_gen = nn::make_gradients(aae.generator);
  auto g_dis = nn::make_gradients(aae.discriminator);

  const auto lr = static_cast<float>(cfg.learning_rate);
  const int n = static_cast<int>(images_train.cols());
  Rng order_rng(Rng::derive(cfg.seed, 2));
  Rng prior_rng(Rng::derive(cfg.seed, 3));

  AaeHistory hist;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> order = epoch_order(n, order_rng);
    double sum_recon = 0.0, sum_disc = 0.0, sum_adv = 0.0;
    for (int begin = 0; begin < n; begin += cfg.batch_size) {
      const int end = std::min(begin + cfg.batch_size, n);
      const int bs = end - begin;
      const FMat x = gather_columns(images_train, order, begin, end);

      // Reconstruction: update encoder + generator on BCE(x, G(E(x))).
      Tape<float> t_enc, t_gen;
      const FMat z = nn::forward(aae.encoder, x, &t_enc);
      const FMat xhat = nn::forward(aae.generator, z, &t_gen);
      FMat d_xhat;
      const float recon = nn::loss_bce(x, xhat, &d_xhat);
      const FMat d_z = nn::backward(aae.generator, t_gen, d_xhat, &g_gen);
      nn::backward(aae.encoder, t_enc, d_z, &g_enc);
      nn::adam_step(aae.generator, adam_gen, g_gen, lr);
      nn::adam_step(aae.encoder, adam_enc, g_enc, lr);

      // Discriminator: label prior samples 1, encoded latents 0. The encoder
      // forward here is also reused by the regularization phase below (the
      // encoder does not change in between).
      const FMat z_prior = normal_matrix(kLatentDim, bs, prior_rng);
      Tape<float> t_enc2;
      const FMat z_fake = nn::forward(aae.encoder, x, &t_enc2);
      FMat z_both(kLatentDim, 2 * bs);
      z_both.leftCols(bs) = z_prior;
      z_both.rightCols(bs) = z_fake;
      FMat labels(1, 2 * bs);
      labels.leftCols(bs).setOnes();
      labels.rightCols(bs).setZero();
      Tape<float> t_dis;
      const FMat d_out = nn::forward(aae.discriminator, z_both, &t_dis);
      FMat d_grad;
      const float disc = nn::loss_bce(labels, d_out, &d_grad);
      nn::backward(aae.discriminator, t_dis, d_grad, &g_dis);
      nn::adam_step(aae.discriminator, adam_dis, g_dis, lr);

      // Regularization: update the encoder so D(E(x)) looks like the prior.
      Tape<float> t_dis2;
      const FMat d2 = nn::forward(aae.discriminator, z_fake, &t_dis2);
      FMat ones(1, bs);
      ones.setOnes();
      FMat d_d2;
      const float adv = nn::loss_bce(ones, d2, &d_d2);
      const FMat d_z2 = nn::backward(aae.discriminator, t_dis2, d_d2, nullptr);
      nn::backward(aae.encoder, t_enc2, d_z2, &g_enc);
      nn::adam_step(aae.encoder, adam_enc, g_enc, lr);

      sum_recon += static_cast<double>(recon) * bs;
      sum_disc += static_cast<double>(disc) * bs;
      sum_adv += static_cast<double>(adv) * bs;
    }
    hist.reconstruction.push_back(sum_recon / n);
    hist.discriminator.push_back(sum_disc / n);
    hist.adversarial.push_back(sum_adv / n);
    check_finite(hist.reconstruction.back(), "train_aae", epoch);
    check_finite(hist.discriminator.back(), "train_aae", epoch);
  }
  if (!nn::all_finite(aae.encoder) || !nn::all_finite(aae.generator) ||
      !nn::all_finite(aae.discriminator))
    throw NumericError("train_aae: non-finite parameters after training");
  return {std::move(aae), std::move(hist)};
}

std::vector<float> reconstruct(const AaeModel& aae, std::span<const float> image) {
  FMat x(kImageDim, 1);
  if (image.size() != static_cast<std::size_t>(kImageDim))
    throw ShapeError("reconstruct: image must have 4096 values");
  for (int i = 0; i < kImageDim; ++i) x(i, 0) = image[static_cast<std::size_t>(i)];
  const FMat out = nn::forward(aae.generator, nn::forward(aae.encoder, x));
  return {out.data(), out.data() + kImageDim};
}

std::vector<float> generate(const Mlp<float>& generator, std::span<const float> z) {
  if (static_cast<int>(z.size()) != generator.input_dim())
    throw ShapeError("generate: latent size mismatch");
  FMat zm(generator.input_dim(), 1);
  for (std::size_t i = 0; i < z.size(); ++i) zm(static_cast<Eigen::Index>(i), 0) = z[i];
  const FMat out = nn::forward(generator, zm);
  return {out.data(), out.data() + out.rows()};
}

geometry::BinaryImage threshold_image(std::span<const float> values, double domain_size,
                                      double threshold) {
  geometry::BinaryImage img;
  img.n = 64;
  img.domain_size = domain_size;
  img.pixels.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    img.pixels[i] = values[i] >= threshold ? 1 : 0;
  return img;
}

// ---------------------------------------------------------------------------

std::pair<FnnModel, FnnHistory> train_fnn(const FMat& images_train, const FMat& farfields_train,
                                          const FMat& images_val, const FMat& farfields_val,
                                          const std::vector<int>& widths,
                                          const std::vector<int>& output_indices,
                                          const Standardization& stats, const TrainConfig& cfg) {
  cfg.validate();
  if (images_train.cols() != farfields_train.cols() || images_val.cols() != farfields_val.cols())
    throw ShapeError("train_fnn: image/far-field sample counts differ");

  FnnModel fnn;
  fnn.stats = stats;
  fnn.output_indices = output_indices;
  Rng init_rng(Rng::derive(cfg.seed, 11));
  fnn.net = nn::make_mlp<float>(widths, Activation::leaky_relu, Activation::identity, init_rng);
  if (fnn.net.output_dim() != static_cast<int>(output_indices.size()))
    throw ShapeError("train_fnn: output width does not match output index count");

  auto gather_targets = [&](const FMat& raw) {
    FMat t(static_cast<Eigen::Index>(output_indices.size()), raw.cols());
    for (std::size_t r = 0; r < output_indices.size(); ++r)
      t.row(static_cast<Eigen::Index>(r)) = raw.row(output_indices[r]);
    standardize_columns(t, stats, output_indices);
    return t;
  };
  const FMat y_train = gather_targets(farfields_train);
  const FMat y_val = gather_targets(farfields_val);

  auto adam = nn::make_adam<float>(fnn.net, static_cast<float>(cfg.beta1),
                                   static_cast<float>(cfg.beta2), static_cast<float>(cfg.adam_eps));
  auto grads = nn::make_gradients(fnn.net);
  const auto lr = static_cast<float>(cfg.learning_rate);
  const int n = static_cast<int>(images_train.cols());
  Rng order_rng(Rng::derive(cfg.seed, 12));

  FnnHistory hist;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> order = epoch_order(n, order_rng);
    double sum_mse = 0.0;
    for (int begin = 0; begin < n; begin += cfg.batch_size) {
      const int end = std::min(begin + cfg.batch_size, n);
      const FMat x = gather_columns(images_train, order, begin, end);
      const FMat y = gather_columns(y_train, order, begin, end);
      Tape<float> tape;
      const FMat yhat = nn::forward(fnn.net, x, &tape);
      FMat d_yhat;
      const float mse = nn::loss_mse(y, yhat, &d_yhat);
      nn::backward(fnn.net, tape, d_yhat, &grads);
      nn::adam_step(fnn.net, adam, grads, lr);
      sum_mse += static_cast<double>(mse) * (end - begin);
    }
    hist.train_mse.push_back(sum_mse / n);
    check_finite(hist.train_mse.back(), "train_fnn", epoch);
    if (images_val.cols() > 0) {
      const FMat yhat = nn::forward(fnn.net, images_val);
      hist.val_mse.push_back(static_cast<double>(nn::loss_mse(y_val, yhat)));
    } else {
      hist.val_mse.push_back(0.0);
    }
  }
  if (!nn::all_finite(fnn.net)) throw NumericError("train_fnn: non-finite parameters");
  return {std::move(fnn), std::move(hist)};
}

std::vector<double> predict(const FnnModel& fnn, std::span<const float> image) {
  if (image.size() != static_cast<std::size_t>(kImageDim))
    throw ShapeError("predict: image must have 4096 values");
  FMat x(kImageDim, 1);
  for (int i = 0; i < kImageDim; ++i) x(i, 0) = image[static_cast<std::size_t>(i)];
  FMat y = nn::forward(fnn.net, x);
  destandardize_columns(y, fnn.stats, fnn.output_indices);
  std::vector<double> out(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index r = 0; r < y.rows(); ++r) out[static_cast<std::size_t>(r)] = y(r, 0);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr float kLogVarMin = -20.0f;
constexpr float kLogVarMax = 10.0f;

struct InnForwardState {
  Tape<float> t_trunk, t_mu, t_lv, t_gen, t_fnn;
  FMat mu, lv_raw, lv, eps, z, gen_out, fnn_out;
};

void inn_forward_batch(const InnModel& inn, const Mlp<float>& generator, const Mlp<float>& fnn,
                       const FMat& inputs_std, Rng* eps_rng, InnForwardState& st) {
  const FMat h = nn::forward(inn.trunk, inputs_std, &st.t_trunk);
  st.mu = nn::forward(inn.mu_head, h, &st.t_mu);
  st.lv_raw = nn::forward(inn.log_var_head, h, &st.t_lv);
  st.lv = st.lv_raw.cwiseMax(kLogVarMin).cwiseMin(kLogVarMax);
  if (eps_rng) {
    st.eps = normal_matrix(st.mu.rows(), st.mu.cols(), *eps_rng);
    st.z = nn::reparameterize<float>({st.mu, st.lv}, st.eps);
  } else {
    st.eps = FMat::Zero(st.mu.rows(), st.mu.cols());
    st.z = st.mu;
  }
  st.gen_out = nn::forward(generator, st.z, &st.t_gen);
  st.fnn_out = nn::forward(fnn, st.gen_out, &st.t_fnn);
}

// Positions of the INN input rows within the decoder FNN's output rows; the
// INN may consume a subset of what the decoder predicts (frequency ablation).
std::vector<int> decoder_row_selection(const std::vector<int>& fnn_outputs,
                                       const std::vector<int>& inn_inputs) {
  std::vector<int> sel;
  sel.reserve(inn_inputs.size());
  for (const int want : inn_inputs) {
    const auto it = std::find(fnn_outputs.begin(), fnn_outputs.end(), want);
    if (it == fnn_outputs.end())
      throw ShapeError("train_inn: decoder does not predict far-field row " + std::to_string(want));
    sel.push_back(static_cast<int>(it - fnn_outputs.begin()));
  }
  return sel;
}

FMat select_rows(const FMat& m, const std::vector<int>& rows) {
  FMat out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
  return out;
}

}  // namespace

std::pair<InnModel, InnHistory> train_inn(const FMat& farfields_train_raw,
                                          const Mlp<float>& generator, const FnnModel& fnn,
                                          const std::vector<int>& trunk_widths,
                                          const std::vector<int>& input_indices,
                                          const Standardization& stats, const TrainConfig& cfg) {
  cfg.validate();
  const std::vector<int> sel = decoder_row_selection(fnn.output_indices, input_indices);
  if (generator.input_dim() != kLatentDim)
    throw ShapeError("train_inn: generator latent width mismatch");

  InnModel inn;
  inn.stats = stats;
  inn.input_indices = input_indices;
  Rng init_rng(Rng::derive(cfg.seed, 21));
  inn.trunk =
      nn::make_mlp<float>(trunk_widths, Activation::leaky_relu, Activation::leaky_relu, init_rng);
  inn.mu_head = nn::make_mlp<float>({kLatentDim, kLatentDim}, Activation::identity,
                                    Activation::identity, init_rng);
  inn.log_var_head = nn::make_mlp<float>({kLatentDim, kLatentDim}, Activation::identity,
                                         Activation::identity, init_rng);
  if (inn.trunk.input_dim() != static_cast<int>(input_indices.size()))
    throw ShapeError("train_inn: trunk input width does not match mask size");

  // Freeze contract on the decoder.
  const std::uint64_t gen_hash = io::parameter_hash(generator);
  const std::uint64_t fnn_hash = io::parameter_hash(fnn.net);

  FMat inputs(static_cast<Eigen::Index>(input_indices.size()), farfields_train_raw.cols());
  for (std::size_t r = 0; r < input_indices.size(); ++r)
    inputs.row(static_cast<Eigen::Index>(r)) = farfields_train_raw.row(input_indices[r]);
  standardize_columns(inputs, stats, input_indices);

  auto adam_trunk = nn::make_adam<float>(inn.trunk, static_cast<float>(cfg.beta1),
                                         static_cast<float>(cfg.beta2), static_cast<float>(cfg.adam_eps));
  auto adam_mu = nn::make_adam<float>(inn.mu_head, static_cast<float>(cfg.beta1),
                                      static_cast<float>(cfg.beta2), static_cast<float>(cfg.adam_eps));
  auto adam_lv = nn::make_adam<float>(inn.log_var_head, static_cast<float>(cfg.beta1),
                                      static_cast<float>(cfg.beta2), static_cast<float>(cfg.adam_eps));
  auto g_trunk = nn::make_gradients(inn.trunk);
  auto g_mu = nn::make_gradients(inn.mu_head);
  auto g_lv = nn::make_gradients(inn.log_var_head);

  const auto lr = static_cast<float>(cfg.learning_rate);
  const auto alpha = static_cast<float>(cfg.kl_weight);
  const int n = static_cast<int>(inputs.cols());
  Rng order_rng(Rng::derive(cfg.seed, 22));
  Rng eps_rng(Rng::derive(cfg.seed, 23));

  InnHistory hist;
  InnForwardState st;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> order = epoch_order(n, order_rng);
    double sum_total = 0.0, sum_mae = 0.0, sum_kl = 0.0;
    for (int begin = 0; begin < n; begin += cfg.batch_size) {
      const int end = std::min(begin + cfg.batch_size, n);
      const int bs = end - begin;
      const FMat f = gather_columns(inputs, order, begin, end);

      inn_forward_batch(inn, generator, fnn.net, f, &eps_rng, st);

      FMat d_sel, d_mu_kl, d_lv_kl;
      const FMat fnn_sel = select_rows(st.fnn_out, sel);
      const float mae = nn::loss_mae(f, fnn_sel, &d_sel);
      const float kl =
          nn::loss_kl<float>({st.mu, st.lv}, &d_mu_kl, &d_lv_kl);
      d_mu_kl *= alpha;
      d_lv_kl *= alpha;

      // Scatter the selected-row gradient back onto the full decoder output.
      FMat d_fnn_out = FMat::Zero(st.fnn_out.rows(), st.fnn_out.cols());
      for (std::size_t r = 0; r < sel.size(); ++r)
        d_fnn_out.row(sel[r]) = d_sel.row(static_cast<Eigen::Index>(r));

      // Chain through the frozen decoder (no parameter gradients there).
      const FMat d_gen_out = nn::backward(fnn.net, st.t_fnn, d_fnn_out, nullptr);
      const FMat d_z = nn::backward(generator, st.t_gen, d_gen_out, nullptr);

      FMat d_mu_rep, d_lv_rep;
      nn::reparameterize_backward<float>({st.mu, st.lv}, st.eps, d_z, d_mu_rep, d_lv_rep);
      FMat d_mu = d_mu_rep + d_mu_kl;
      FMat d_lv = d_lv_rep + d_lv_kl;
      // Zero gradient where the log-var clamp is active.
      d_lv = d_lv.binaryExpr(st.lv_raw, [](float g, float raw) {
        return (raw > kLogVarMin && raw < kLogVarMax) ? g : 0.0f;
      });

      const FMat d_h_mu = nn::backward(inn.mu_head, st.t_mu, d_mu, &g_mu);
      const FMat d_h_lv = nn::backward(inn.log_var_head, st.t_lv, d_lv, &g_lv);
      nn::backward(inn.trunk, st.t_trunk, FMat(d_h_mu + d_h_lv), &g_trunk);

      nn::adam_step(inn.trunk, adam_trunk, g_trunk, lr);
      nn::adam_step(inn.mu_head, adam_mu, g_mu, lr);
      nn::adam_step(inn.log_var_head, adam_lv, g_lv, lr);

      sum_total += (static_cast<double>(mae) + cfg.kl_weight * static_cast<double>(kl)) * bs;
      sum_mae += static_cast<double>(mae) * bs;
      sum_kl += static_cast<double>(kl) * bs;
    }
    hist.total.push_back(sum_total / n);
    hist.mae.push_back(sum_mae / n);
    hist.kl.push_back(sum_kl / n);
    check_finite(hist.total.back(), "train_inn", epoch);
  }

  if (io::parameter_hash(generator) != gen_hash || io::parameter_hash(fnn.net) != fnn_hash)
    throw NumericError("train_inn: frozen decoder parameters changed");
  if (!nn::all_finite(inn.trunk) || !nn::all_finite(inn.mu_head) || !nn::all_finite(inn.log_var_head))
    throw NumericError("train_inn: non-finite parameters");
  return {std::move(inn), std::move(hist)};
}

nn::GaussianLatentParams<float> inn_latent_params(const InnModel& inn, const FMat& inputs_std) {
  const FMat h = nn::forward(inn.trunk, inputs_std);
  nn::GaussianLatentParams<float> params;
  params.mu = nn::forward(inn.mu_head, h);
  params.log_var = nn::forward(inn.log_var_head, h).cwiseMax(kLogVarMin).cwiseMin(kLogVarMax);
  return params;
}

Inversion invert(const InnModel& inn, const Mlp<float>& generator,
                 std::span<const double> farfield_raw, InvertMode mode, std::uint64_t sample_seed) {
  if (farfield_raw.size() != static_cast<std::size_t>(kFarFieldDim))
    throw ShapeError("invert: far field must have 435 values");
  const std::vector<int>& idx = inn.input_indices;
  FMat f(static_cast<Eigen::Index>(idx.size()), 1);
  for (std::size_t r = 0; r < idx.size(); ++r)
    f(static_cast<Eigen::Index>(r), 0) = static_cast<float>(farfield_raw[static_cast<std::size_t>(idx[r])]);
  standardize_columns(f, inn.stats, idx);
  const auto params = inn_latent_params(inn, f);
  FMat z = params.mu;
  if (mode == InvertMode::sample) {
    Rng rng(Rng::derive(sample_seed, 31));
    const FMat eps = normal_matrix(z.rows(), 1, rng);
    z = nn::reparameterize<float>(params, eps);
  }
  Inversion inv;
  inv.latent.assign(z.data(), z.data() + z.rows());
  inv.image_real = generate(generator, inv.latent);
  return inv;
}

// ---------------------------------------------------------------------------

AaeEval evaluate_aae(const AaeModel& aae, const FMat& images) {
  AaeEval ev;
  const FMat recon = nn::forward(aae.generator, nn::forward(aae.encoder, images));
  for (Eigen::Index c = 0; c < images.cols(); ++c) {
    std::vector<double> target(kImageDim), pred(kImageDim), pred_bin(kImageDim);
    for (int r = 0; r < kImageDim; ++r) {
      target[static_cast<std::size_t>(r)] = images(r, c);
      pred[static_cast<std::size_t>(r)] = recon(r, c);
      pred_bin[static_cast<std::size_t>(r)] = recon(r, c) >= 0.5f ? 1.0 : 0.0;
    }
    ev.ssim.push_back(metrics::ssim(target, pred_bin));
    ev.bce.push_back(metrics::bce_error(target, pred));
  }
  return ev;
}

std::vector<double> evaluate_fnn(const FnnModel& fnn, const FMat& images, const FMat& farfields_raw) {
  if (images.cols() != farfields_raw.cols()) throw ShapeError("evaluate_fnn: sample count mismatch");
  FMat pred = nn::forward(fnn.net, images);
  destandardize_columns(pred, fnn.stats, fnn.output_indices);
  std::vector<double> errs;
  const auto& idx = fnn.output_indices;
  for (Eigen::Index c = 0; c < images.cols(); ++c) {
    std::vector<double> target(idx.size()), p(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      target[r] = farfields_raw(idx[r], c);
      p[r] = pred(static_cast<Eigen::Index>(r), c);
    }
    errs.push_back(metrics::relative_abs_error(target, p));
  }
  return errs;
}

InnEval evaluate_inn(const InnModel& inn, const Mlp<float>& generator, const FnnModel& fnn,
                     const FMat& farfields_raw, const FMat& images) {
  if (farfields_raw.cols() != images.cols()) throw ShapeError("evaluate_inn: sample count mismatch");
  const auto& idx = inn.input_indices;
  const std::vector<int> sel = decoder_row_selection(fnn.output_indices, idx);
  FMat inputs(static_cast<Eigen::Index>(idx.size()), farfields_raw.cols());
  for (std::size_t r = 0; r < idx.size(); ++r)
    inputs.row(static_cast<Eigen::Index>(r)) = farfields_raw.row(idx[r]);
  standardize_columns(inputs, inn.stats, idx);

  const auto params = inn_latent_params(inn, inputs);
  const FMat gen_out = nn::forward(generator, params.mu);
  FMat fnn_out = select_rows(nn::forward(fnn.net, gen_out), sel);
  destandardize_columns(fnn_out, fnn.stats, idx);

  InnEval ev;
  for (Eigen::Index c = 0; c < images.cols(); ++c) {
    std::vector<double> f_target(idx.size()), f_pred(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      f_target[r] = farfields_raw(idx[r], c);
      f_pred[r] = fnn_out(static_cast<Eigen::Index>(r), c);
    }
    ev.rel_err.push_back(metrics::relative_abs_error(f_target, f_pred));
    std::vector<double> target(kImageDim), pred(kImageDim), pred_bin(kImageDim);
    for (int r = 0; r < kImageDim; ++r) {
      target[static_cast<std::size_t>(r)] = images(r, c);
      pred[static_cast<std::size_t>(r)] = gen_out(r, c);
      pred_bin[static_cast<std::size_t>(r)] = gen_out(r, c) >= 0.5f ? 1.0 : 0.0;
    }
    ev.ssim.push_back(metrics::ssim(target, pred_bin));
    ev.bce.push_back(metrics::bce_error(target, pred));
  }
  return ev;
}

}  // namespace aisr::models
