#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aisr/geometry.hpp"
#include "aisr/nn.hpp"

namespace aisr::io {

// ---------------------------------------------------------------------------
// Shards: "AISD" magic, u16 version, u16 kind, u32 count, payload, CRC32.
// Shapes: count x 4096 bytes of {0,1}. Far fields: count x 435 f32 LE.

enum class RecordKind : std::uint16_t { shapes = 1, farfields = 2 };

inline constexpr int kImagePixels = 64 * 64;
inline constexpr int kFarFieldLen = 435;

void save_shapes(const std::string& path, const std::vector<geometry::BinaryImage>& images);
std::vector<geometry::BinaryImage> load_shapes(const std::string& path, double domain_size = 2.0);

void save_farfields(const std::string& path, const std::vector<std::vector<float>>& records);
std::vector<std::vector<float>> load_farfields(const std::string& path);

// ---------------------------------------------------------------------------
// Checkpoints: u32 header length + JSON header + f32 LE parameter block in
// declared layer order (weights row-major, then bias, per layer, per net).

struct NetSpec {
  std::string name;
  std::vector<int> widths;
  std::vector<std::string> activations;  // one per layer
  float leaky_slope = 0.2f;
};

struct Checkpoint {
  std::string kind;  // "aae", "fnn", "inn", ...
  std::vector<NetSpec> specs;
  std::vector<nn::Mlp<float>> nets;  // same order as specs
  nlohmann::json meta();             // parsed copy of the free-form metadata
  std::string meta_text = "{}";
};

NetSpec spec_of(const std::string& name, const nn::Mlp<float>& net);
nn::Mlp<float> net_from_spec(const NetSpec& spec);  // zero-initialized

void save_checkpoint(const std::string& path, const std::string& kind,
                     const std::vector<std::string>& names,
                     const std::vector<const nn::Mlp<float>*>& nets,
                     const nlohmann::json& meta);
Checkpoint load_checkpoint(const std::string& path, const std::string& expected_kind);

std::size_t expected_parameter_count(const std::vector<int>& widths);

// Parameter bytes of a network in checkpoint order; feeds the freeze hash.
std::vector<float> flatten_parameters(const nn::Mlp<float>& net);
std::uint64_t parameter_hash(const nn::Mlp<float>& net);

// ---------------------------------------------------------------------------
// Manifest: dataset id, shard paths, split index lists, seeds, solver snapshot.

struct Manifest {
  std::string dataset_id;
  std::string shapes_shard;
  std::string farfields_shard;
  std::uint64_t generator_seed = 0;
  std::uint64_t split_seed = 0;
  std::array<double, 3> ratios{0.8, 0.1, 0.1};
  std::vector<int> train, val, test;
  std::string solver_settings = "{}";  // JSON snapshot
};

Manifest build_manifest(int record_count, std::uint64_t split_seed,
                        const std::array<double, 3>& ratios);
void save_manifest(const std::string& path, const Manifest& m);
Manifest load_manifest(const std::string& path);

// write-temp-then-rename
void atomic_write(const std::string& path, const std::string& bytes);

}  // namespace aisr::io
