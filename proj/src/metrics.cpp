#include "aisr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "aisr/errors.hpp"

namespace aisr::metrics {

double ssim(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw ShapeError("ssim: dimension mismatch");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cxy += dx * dy;
  }
  const double denom = x.size() > 1 ? n - 1.0 : 1.0;
  vx /= denom;
  vy /= denom;
  cxy /= denom;
  const double c1 = 0.01 * 0.01;  // (0.01 L)^2, L = 1
  const double c2 = 0.03 * 0.03;
  return (2.0 * mx * my + c1) * (2.0 * cxy + c2) /
         ((mx * mx + my * my + c1) * (vx + vy + c2));
}

double bce_error(std::span<const double> target, std::span<const double> prediction) {
  if (target.size() != prediction.size() || target.empty())
    throw ShapeError("bce_error: dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double p = std::clamp(prediction[i], 1e-7, 1.0 - 1e-7);
    total -= target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p);
  }
  return total / static_cast<double>(target.size());
}

double relative_abs_error(std::span<const double> target, std::span<const double> prediction) {
  if (target.size() != prediction.size() || target.empty())
    throw ShapeError("relative_abs_error: dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i)
    total += std::abs(target[i] - prediction[i]) / (std::abs(target[i]) + 1e-8);
  return total / static_cast<double>(target.size());
}

MetricsReport aggregate(std::span<const double> values, const std::string& split,
                        const std::string& metric, int bins) {
  if (values.empty()) throw ShapeError("aggregate: empty input");
  MetricsReport rep;
  rep.split = split;
  rep.metric = metric;
  rep.values.assign(values.begin(), values.end());

  double sum = 0.0;
  for (const double v : values) sum += v;
  rep.mean = sum / static_cast<double>(values.size());

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  rep.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);

  const double lo = sorted.front();
  const double hi = sorted.back();
  const double width = hi > lo ? (hi - lo) / bins : 1.0;
  rep.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) rep.bin_edges[static_cast<std::size_t>(b)] = lo + b * width;
  rep.bin_counts.assign(static_cast<std::size_t>(bins), 0);
  for (const double v : values) {
    int b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    rep.bin_counts[static_cast<std::size_t>(b)] += 1;
  }
  return rep;
}

}  // namespace aisr::metrics
