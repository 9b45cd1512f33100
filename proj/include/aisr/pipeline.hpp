#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aisr/config.hpp"
#include "aisr/dataset_io.hpp"
#include "aisr/models.hpp"

namespace aisr::pipeline {

// Artifact names inside cfg.out_dir.
namespace artifact {
inline constexpr const char* shapes = "shapes.aisd";
inline constexpr const char* farfields = "farfields.aisd";
inline constexpr const char* manifest = "manifest.json";
inline constexpr const char* aae_ckpt = "aae.ckpt";
inline constexpr const char* fnn_ckpt = "fnn.ckpt";
inline constexpr const char* inn_ckpt = "inn.ckpt";
inline constexpr const char* aae_history = "aae_history.csv";
inline constexpr const char* fnn_history = "fnn_history.csv";
inline constexpr const char* inn_history = "inn_history.csv";
inline constexpr const char* ablate_table = "ablate_freq.csv";
inline constexpr const char* halfplane_table = "halfplane/halfplane.csv";
}  // namespace artifact

// Checkpoint adapters (metadata carries standardization, masks and seeds).
void save_aae_model(const std::string& path, const models::AaeModel& aae,
                    const models::TrainConfig& cfg, std::uint64_t data_hash);
models::AaeModel load_aae_model(const std::string& path);
void save_fnn_model(const std::string& path, const models::FnnModel& fnn,
                    const models::TrainConfig& cfg, std::uint64_t data_hash);
models::FnnModel load_fnn_model(const std::string& path);
void save_inn_model(const std::string& path, const models::InnModel& inn,
                    const models::TrainConfig& cfg, std::uint64_t gen_hash, std::uint64_t fnn_hash);
models::InnModel load_inn_model(const std::string& path);

// Dataset helpers.
models::FMat images_to_matrix(const std::vector<geometry::BinaryImage>& images,
                              const std::vector<int>& indices);
models::FMat farfields_to_matrix(const std::vector<std::vector<float>>& records,
                                 const std::vector<int>& indices);

// Stage entry points; they throw on failure (commands map exceptions to codes).
void run_gen(const PipelineConfig& cfg);
void run_simulate(const PipelineConfig& cfg);
void run_train_aae(const PipelineConfig& cfg);
void run_train_fnn(const PipelineConfig& cfg);
void run_train_inn(const PipelineConfig& cfg);

struct EvalSummary {
  double aae_ssim_mean = 0.0;
  double aae_bce_mean = 0.0;
  double fnn_rel_err_mean = 0.0;
  double inn_rel_err_mean = 0.0;
  double inn_ssim_mean = 0.0;
  double inn_bce_mean = 0.0;
};
EvalSummary run_eval(const PipelineConfig& cfg);

struct AblationRow {
  int k = 0;
  double bce_mean = 0.0;
  double ssim_mean = 0.0;
  double rel_err_mean = 0.0;
};
std::vector<AblationRow> run_frequency_ablation(const PipelineConfig& cfg,
                                                const std::vector<int>& ks);

struct HalfplaneResult {
  int masked_input_width = 0;
  double fnn_rel_err_mean = 0.0;
  double inn_ssim_mean = 0.0;
  double inn_bce_mean = 0.0;
  double inn_rel_err_mean = 0.0;
  double full_ssim_mean = 0.0;  // from the full-range INN for comparison
};
HalfplaneResult run_halfplane(const PipelineConfig& cfg);

// CLI commands: return process exit codes (0 ok, 2 config, 3 missing artifact,
// 4 numeric/data failure).
int cmd_gen(const PipelineConfig& cfg);
int cmd_simulate(const PipelineConfig& cfg);
int cmd_train(const std::string& stage, const PipelineConfig& cfg);
int cmd_eval(const PipelineConfig& cfg);
int cmd_ablate_frequencies(const PipelineConfig& cfg);
int cmd_halfplane(const PipelineConfig& cfg);
struct MieCliOptions {
  std::string material = "steel";  // steel | aluminum | fluid
  double radius = 0.5;
  double frequency = 1000.0;
  double ka_min = 0.1, ka_max = 5.0;
  int ka_steps = 200;
  std::string out_dir = ".";
};
int cmd_mie(const MieCliOptions& opts);
int cmd_invert(const PipelineConfig& cfg, const std::string& farfield_csv, const std::string& mode,
               std::uint64_t sample_seed);

}  // namespace aisr::pipeline
