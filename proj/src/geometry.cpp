#include "aisr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aisr/errors.hpp"
#include "aisr/rng.hpp"

namespace aisr::geometry {

double BoundaryCurve::radius(double theta) const {
  double r = base_radius;
  for (const auto& h : harmonics) r += h.amplitude * std::cos(h.order * theta + h.phase);
  return r;
}

double BoundaryCurve::min_radius(int samples) const {
  double m = radius(0.0);
  for (int i = 1; i < samples; ++i) {
    m = std::min(m, radius(2.0 * M_PI * i / samples));
  }
  return m;
}

double BoundaryCurve::total_amplitude() const {
  double s = 0.0;
  for (const auto& h : harmonics) s += std::abs(h.amplitude);
  return s;
}

void ShapeConfig::validate() const {
  if (domain_size <= 0.0) throw ConfigError("shape config: domain_size must be positive");
  if (harmonics_min < 1 || harmonics_max < harmonics_min)
    throw ConfigError("shape config: invalid harmonic count range");
  if (order_max < harmonics_max)
    throw ConfigError("shape config: order_max must admit harmonics_max distinct orders");
  if (base_radius_min <= 0.0 || base_radius_max < base_radius_min)
    throw ConfigError("shape config: invalid base radius range");
  if (amplitude_cap < 0.0) throw ConfigError("shape config: amplitude_cap must be non-negative");
  if (amplitude_cap >= base_radius_min)
    throw ConfigError("shape config: amplitude cap must stay below the minimum base radius");
  if (base_radius_max + amplitude_cap > 0.5 * domain_size)
    throw ConfigError("shape config: shapes may not fit in the domain");
  if (fill_min < 0.0 || fill_max <= fill_min || fill_max > 1.0)
    throw ConfigError("shape config: invalid fill band");
}

int BinaryImage::count_set() const {
  return static_cast<int>(std::accumulate(pixels.begin(), pixels.end(), 0L));
}

double BinaryImage::fill_fraction() const {
  return static_cast<double>(count_set()) / (static_cast<double>(n) * n);
}

BoundaryCurve sample_boundary(std::uint64_t seed, const ShapeConfig& cfg) {
  cfg.validate();
  Rng rng(Rng::derive(seed, 0x5a5a));
  BoundaryCurve curve;
  curve.center = {0.0, 0.0};
  for (int attempt = 0; attempt < 256; ++attempt) {
    curve.base_radius = rng.uniform(cfg.base_radius_min, cfg.base_radius_max);
    curve.harmonics.clear();
    const int count = static_cast<int>(rng.uniform_int(cfg.harmonics_min, cfg.harmonics_max));

    // Distinct orders, amplitudes damped as 1/order so high orders stay gentle
    // enough to rasterize as connected regions.
    std::vector<int> orders(static_cast<std::size_t>(cfg.order_max));
    std::iota(orders.begin(), orders.end(), 1);
    rng.shuffle(orders);
    orders.resize(static_cast<std::size_t>(count));
    std::sort(orders.begin(), orders.end());

    double raw_total = 0.0;
    std::vector<double> raw(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
      raw[static_cast<std::size_t>(k)] = rng.uniform(0.2, 1.0) / orders[static_cast<std::size_t>(k)];
      raw_total += raw[static_cast<std::size_t>(k)];
    }
    const double target_total = cfg.amplitude_cap * rng.uniform(0.25, 1.0);
    const double scale = raw_total > 0.0 ? target_total / raw_total : 0.0;
    for (int k = 0; k < count; ++k) {
      Harmonic h;
      h.order = orders[static_cast<std::size_t>(k)];
      h.amplitude = raw[static_cast<std::size_t>(k)] * scale;
      h.phase = rng.uniform(0.0, 2.0 * M_PI);
      curve.harmonics.push_back(h);
    }
    if (curve.min_radius() > 1e-3) return curve;
  }
  throw NumericError("sample_boundary: failed to draw a positive-radius curve");
}

BinaryImage rasterize(const BoundaryCurve& curve, int grid, double domain_size) {
  BinaryImage img;
  img.n = grid;
  img.domain_size = domain_size;
  img.pixels.assign(static_cast<std::size_t>(grid) * grid, 0);
  const double h = domain_size / grid;
  const double half = 0.5 * domain_size;
  for (int i = 0; i < grid; ++i) {
    const double y = (i + 0.5) * h - half - curve.center[1];
    for (int j = 0; j < grid; ++j) {
      const double x = (j + 0.5) * h - half - curve.center[0];
      const double rho = std::hypot(x, y);
      const double theta = std::atan2(y, x);
      if (rho <= curve.radius(theta)) img.pixels[static_cast<std::size_t>(i) * grid + j] = 1;
    }
  }
  return img;
}

BinaryImage sample_dataset_image(std::uint64_t seed, const ShapeConfig& cfg, int grid) {
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    const BoundaryCurve curve = sample_boundary(Rng::derive(seed, attempt), cfg);
    BinaryImage img = rasterize(curve, grid, cfg.domain_size);
    const double fill = img.fill_fraction();
    if (img.count_set() >= 1 && fill >= cfg.fill_min && fill <= cfg.fill_max && connected4(img))
      return img;
  }
  throw NumericError("sample_dataset_image: no acceptable shape after 64 attempts");
}

bool connected4(const BinaryImage& img) {
  const int n = img.n;
  const int total = img.count_set();
  if (total == 0) return false;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n) * n, 0);
  std::vector<int> stack;
  int start = -1;
  for (int idx = 0; idx < n * n; ++idx) {
    if (img.pixels[static_cast<std::size_t>(idx)]) {
      start = idx;
      break;
    }
  }
  stack.push_back(start);
  seen[static_cast<std::size_t>(start)] = 1;
  int visited = 0;
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    ++visited;
    const int r = idx / n;
    const int c = idx % n;
    const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (const auto& rc : nbr) {
      if (rc[0] < 0 || rc[0] >= n || rc[1] < 0 || rc[1] >= n) continue;
      const int j = rc[0] * n + rc[1];
      if (img.pixels[static_cast<std::size_t>(j)] && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = 1;
        stack.push_back(j);
      }
    }
  }
  return visited == total;
}

}  // namespace aisr::geometry
