#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "aisr/geometry.hpp"
#include "aisr/nn.hpp"

namespace aisr::models {

using FMat = nn::MatX<float>;

inline constexpr int kLatentDim = 100;
inline constexpr int kImageDim = 64 * 64;
inline constexpr int kFarFieldDim = 435;
inline constexpr int kAnglesPerFreq = 87;

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 32;
  int epochs = 200;
  double kl_weight = 1e-5;  // alpha, INN only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Architectures. FNN and INN widths follow the published node counts; the AAE
// internals mirror the FNN taper.

std::vector<int> aae_encoder_widths();        // 4096-1000-500-100
std::vector<int> aae_generator_widths();      // 100-500-1000-4096
std::vector<int> aae_discriminator_widths();  // 100-500-500-1
std::vector<int> fnn_widths(int output_dim = kFarFieldDim);
std::vector<int> fnn_halfplane_widths(int output_dim);
std::vector<int> inn_trunk_widths(int input_dim);             // in-800-800-500-500-500-400-100
std::vector<int> inn_trunk_widths_single_freq();              // 87-800-500-500-500-400-100
std::vector<int> inn_trunk_widths_halfplane(int input_dim);   // in-800-800-500-500-400-100

// ---------------------------------------------------------------------------
// Far-field standardization: per-frequency-block z-score statistics computed
// on the training split of the raw 435-vectors and reused by every network.

struct Standardization {
  int block_len = kAnglesPerFreq;
  std::vector<double> mean;    // one per frequency block
  std::vector<double> stddev;  // > 0
};

// farfields: 435 x N (raw amplitudes), train-split columns only.
Standardization compute_standardization(const FMat& farfields, int block_len = kAnglesPerFreq);

// `source_indices[i]` gives the index of row i in the original 435 layout
// (empty span = identity); each element is shifted/scaled by its block stats.
void standardize_columns(FMat& values, const Standardization& stats,
                         std::span<const int> source_indices = {});
void destandardize_columns(FMat& values, const Standardization& stats,
                           std::span<const int> source_indices = {});

// ---------------------------------------------------------------------------
// Angular / frequency masks over the flattened frequency-major far field.

struct SelectionMask {
  std::vector<int> indices;  // into the 435-vector, strictly increasing
  int kept_per_freq = kAnglesPerFreq;
  int freq_count = 5;
};

// Keeps angles theta in [lo_deg, hi_deg] (degrees, inclusive) for every block.
SelectionMask angle_range_mask(double lo_deg, double hi_deg, int angles_per_freq = kAnglesPerFreq,
                               int freq_count = 5);
// Keeps the first k frequency blocks in full.
SelectionMask frequency_prefix_mask(int k, int angles_per_freq = kAnglesPerFreq,
                                    int freq_count = 5);
std::vector<int> full_farfield_indices(int len = kFarFieldDim);  // 0..len-1
std::vector<double> apply_mask(std::span<const double> values, const SelectionMask& mask);
FMat apply_mask_columns(const FMat& values, const SelectionMask& mask);

// ---------------------------------------------------------------------------
// AAE

struct AaeModel {
  nn::Mlp<float> encoder, generator, discriminator;
};

struct AaeHistory {
  std::vector<double> reconstruction;  // BCE of generator(encoder(x)) vs x
  std::vector<double> discriminator;   // BCE of prior-vs-encoded classification
  std::vector<double> adversarial;     // BCE of encoder fooling the discriminator
};

std::pair<AaeModel, AaeHistory> train_aae(const FMat& images_train, const TrainConfig& cfg);

std::vector<float> reconstruct(const AaeModel& aae, std::span<const float> image);
std::vector<float> generate(const nn::Mlp<float>& generator, std::span<const float> z);
geometry::BinaryImage threshold_image(std::span<const float> values, double domain_size = 2.0,
                                      double threshold = 0.5);

// ---------------------------------------------------------------------------
// FNN

struct FnnModel {
  nn::Mlp<float> net;
  Standardization stats;
  std::vector<int> output_indices;  // rows of the 435 layout this net predicts (empty = all)
};

struct FnnHistory {
  std::vector<double> train_mse;
  std::vector<double> val_mse;
};

// farfields_* are raw-amplitude 435 x N; targets are masked through
// `output_indices` and standardized internally.
std::pair<FnnModel, FnnHistory> train_fnn(const FMat& images_train, const FMat& farfields_train,
                                          const FMat& images_val, const FMat& farfields_val,
                                          const std::vector<int>& widths,
                                          const std::vector<int>& output_indices,
                                          const Standardization& stats, const TrainConfig& cfg);

// Raw-amplitude prediction (de-standardized), length = output_indices count.
std::vector<double> predict(const FnnModel& fnn, std::span<const float> image);

// ---------------------------------------------------------------------------
// INN

struct InnModel {
  nn::Mlp<float> trunk;
  nn::Mlp<float> mu_head;       // single 100 -> 100 linear layer
  nn::Mlp<float> log_var_head;  // single 100 -> 100 linear layer
  Standardization stats;
  std::vector<int> input_indices;  // rows of the 435 layout fed to the trunk (empty = all)
};

struct InnHistory {
  std::vector<double> total;
  std::vector<double> mae;
  std::vector<double> kl;
};

// The generator and fnn are frozen: gradients flow through them, their
// parameters are hash-checked before/after. `fnn` must predict exactly the
// rows listed in `input_indices` of the INN (its output is compared with the
// INN input in standardized space).
std::pair<InnModel, InnHistory> train_inn(const FMat& farfields_train_raw,
                                          const nn::Mlp<float>& generator, const FnnModel& fnn,
                                          const std::vector<int>& trunk_widths,
                                          const std::vector<int>& input_indices,
                                          const Standardization& stats, const TrainConfig& cfg);

enum class InvertMode { mean, sample };

struct Inversion {
  std::vector<float> latent;       // z
  std::vector<float> image_real;   // generator output in [0,1]
};

Inversion invert(const InnModel& inn, const nn::Mlp<float>& generator,
                 std::span<const double> farfield_raw, InvertMode mode = InvertMode::mean,
                 std::uint64_t sample_seed = 0);

// mu/log_var for a batch of standardized masked inputs.
nn::GaussianLatentParams<float> inn_latent_params(const InnModel& inn, const FMat& inputs_std);

// ---------------------------------------------------------------------------
// Evaluation

struct AaeEval {
  std::vector<double> ssim;  // thresholded reconstruction vs target
  std::vector<double> bce;   // real-valued reconstruction vs target
};
AaeEval evaluate_aae(const AaeModel& aae, const FMat& images);

std::vector<double> evaluate_fnn(const FnnModel& fnn, const FMat& images, const FMat& farfields_raw);

struct InnEval {
  std::vector<double> rel_err;  // decoder far-field reconstruction vs input (raw units)
  std::vector<double> ssim;     // thresholded generated shape vs target
  std::vector<double> bce;      // real-valued generated shape vs target
};
InnEval evaluate_inn(const InnModel& inn, const nn::Mlp<float>& generator, const FnnModel& fnn,
                     const FMat& farfields_raw, const FMat& images);

}  // namespace aisr::models
