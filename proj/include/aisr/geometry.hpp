#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace aisr::geometry {

struct Harmonic {
  int order = 1;          // >= 1
  double amplitude = 0.0;  // m
  double phase = 0.0;      // rad
};

// Star-shaped boundary r(theta) = base_radius + sum_k amplitude_k * cos(order_k * theta + phase_k).
struct BoundaryCurve {
  double base_radius = 0.0;  // m
  std::vector<Harmonic> harmonics;
  std::array<double, 2> center{0.0, 0.0};  // m, domain coordinates

  double radius(double theta) const;
  double min_radius(int samples = 4096) const;
  double total_amplitude() const;  // sum |amplitude_k|
};

struct ShapeConfig {
  double domain_size = 2.0;       // physical side length, m
  int harmonics_min = 2;          // harmonic count range
  int harmonics_max = 8;
  int order_max = 8;              // harmonic orders drawn from [1, order_max]
  double base_radius_min = 0.30;  // m
  double base_radius_max = 0.65;  // m
  double amplitude_cap = 0.18;    // bound on total harmonic amplitude, m
  double fill_min = 0.02;         // accepted fill-fraction band for dataset shapes
  double fill_max = 0.60;

  void validate() const;  // throws ConfigError
};

struct BinaryImage {
  int n = 64;
  double domain_size = 2.0;               // m
  std::vector<std::uint8_t> pixels;       // row-major n*n, each 0 or 1

  double pitch() const { return domain_size / n; }
  std::uint8_t at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * n + col]; }
  int count_set() const;
  double fill_fraction() const;
};

// Deterministic draw of a boundary curve; same (seed, cfg) always yields the
// same curve. Rejection-resamples the harmonic set until min r(theta) > 0.
BoundaryCurve sample_boundary(std::uint64_t seed, const ShapeConfig& cfg);

// Pixel (i,j) is set iff its center lies inside the curve (radius comparison).
BinaryImage rasterize(const BoundaryCurve& curve, int grid = 64, double domain_size = 2.0);

// Dataset draw: resamples (deterministically) until the rasterized image is
// 4-connected and inside the configured fill band.
BinaryImage sample_dataset_image(std::uint64_t seed, const ShapeConfig& cfg, int grid = 64);

bool connected4(const BinaryImage& img);

}  // namespace aisr::geometry
