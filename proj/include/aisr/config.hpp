#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aisr/geometry.hpp"
#include "aisr/materials.hpp"
#include "aisr/models.hpp"
#include "aisr/scatter.hpp"

namespace aisr::pipeline {

struct PipelineConfig {
  // shapes
  geometry::ShapeConfig shapes;
  int shape_count = 2000;
  std::uint64_t shape_seed = 42;

  // solver
  scatter::SolveOptions solver;
  FluidMaterial background = materials::water();
  FluidMaterial object = materials::steel_as_fluid();
  std::vector<double> frequencies_hz = scatter::kFrequenciesHz;

  // split
  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
  std::uint64_t split_seed = 7;

  // training
  models::TrainConfig aae;      // epochs default 200
  models::TrainConfig fnn;      // epochs default 300
  models::TrainConfig inn;      // epochs default 300
  int variant_epochs = 300;     // ablation / half-plane INN+FNN variants
  double angular_lo_deg = 0.0;  // half-plane study range
  double angular_hi_deg = 180.0;

  // paths
  std::string out_dir = "out";

  int jobs = 1;

  void validate() const;
};

PipelineConfig default_config();
PipelineConfig load_config(const std::string& path);
void save_config(const std::string& path, const PipelineConfig& cfg);
std::string config_to_json(const PipelineConfig& cfg);

}  // namespace aisr::pipeline
