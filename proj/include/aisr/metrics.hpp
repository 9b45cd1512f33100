#pragma once

#include <span>
#include <string>
#include <vector>

namespace aisr::metrics {

// Global-statistics SSIM (no windowing): sample mean/variance/covariance over
// the whole image with 1/(N-1) normalization, c1 = (0.01 L)^2, c2 = (0.03 L)^2,
// L = 1 for [0,1] images.
double ssim(std::span<const double> x, std::span<const double> y);

// Mean binary cross-entropy of a [0,1]-valued prediction against a binary
// target; predictions are clamped to [1e-7, 1 - 1e-7].
double bce_error(std::span<const double> target, std::span<const double> prediction);

// mean_i |F_i - Fhat_i| / (|F_i| + 1e-8).
double relative_abs_error(std::span<const double> target, std::span<const double> prediction);

struct MetricsReport {
  std::string split;
  std::string metric;
  std::vector<double> values;
  double mean = 0.0;
  double median = 0.0;
  std::vector<double> bin_edges;   // 33 edges for 32 bins
  std::vector<int> bin_counts;     // 32 counts
};

MetricsReport aggregate(std::span<const double> values, const std::string& split,
                        const std::string& metric, int bins = 32);

}  // namespace aisr::metrics
