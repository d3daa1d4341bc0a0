#include "paray/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "paray/ubp.hpp"

namespace paray {

SubsetIndices random_subset(int n_total, int m, std::uint64_t seed) {
  if (n_total < 1 || m < 1 || m > n_total)
    throw std::invalid_argument("random_subset: need 1 <= m <= n_total, got m=" +
                                std::to_string(m) + ", n_total=" + std::to_string(n_total));
  std::vector<int> pool(n_total);
  std::iota(pool.begin(), pool.end(), 0);
  Rng rng(seed);
  for (int i = 0; i < m; ++i) {
    const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_total - i)));
    std::swap(pool[i], pool[j]);
  }
  SubsetIndices s;
  s.indices.assign(pool.begin(), pool.begin() + m);
  std::sort(s.indices.begin(), s.indices.end());
  s.n_total = n_total;
  s.seed = seed;
  return s;
}

std::pair<RawPAData, DetectorArray> subset_raw(const RawPAData& raw,
                                               const DetectorArray& array,
                                               const SubsetIndices& s) {
  if (s.n_total != raw.n_channels || raw.n_channels != array.size())
    throw std::invalid_argument("subset_raw: subset drawn for " + std::to_string(s.n_total) +
                                " channels but data has " + std::to_string(raw.n_channels));
  RawPAData out;
  out.n_channels = static_cast<int>(s.indices.size());
  out.n_samples = raw.n_samples;
  out.dt = raw.dt;
  out.t0 = raw.t0;
  out.sound_speed = raw.sound_speed;
  out.samples.resize(static_cast<std::size_t>(out.n_channels) * out.n_samples);

  DetectorArray sub;
  sub.patch_area = array.patch_area;
  sub.radius = array.radius;
  for (int row = 0; row < out.n_channels; ++row) {
    const int idx = s.indices[row];
    std::copy_n(raw.channel(idx), raw.n_samples, out.channel(row));
    sub.positions.push_back(array.positions[idx]);
    sub.normals.push_back(array.normals[idx]);
  }
  return {std::move(out), std::move(sub)};
}

CVMap cv_analysis(const RawPAData& raw, const DetectorArray& array,
                  const VolumeGrid& grid, Axis axis, int index, int m,
                  int n_trials, std::uint64_t seed, int threads) {
  if (n_trials < 2)
    throw std::invalid_argument("cv_analysis: n_trials must be >= 2");

  std::vector<double> sum, sumsq;
  CVMap map;
  for (int trial = 0; trial < n_trials; ++trial) {
    const SubsetIndices s = random_subset(raw.n_channels, m, seed + trial);
    auto [sraw, sarr] = subset_raw(raw, array, s);
    const Image2D img = reconstruct_slice(sraw, sarr, grid, axis, index, threads);
    if (trial == 0) {
      map.rows = img.rows;
      map.cols = img.cols;
      map.pixel_spacing = img.pixel_spacing;
      sum.assign(img.pixel_count(), 0.0);
      sumsq.assign(img.pixel_count(), 0.0);
    }
    for (std::size_t p = 0; p < img.values.size(); ++p) {
      const double v = img.values[p];
      sum[p] += v;
      sumsq[p] += v * v;
    }
  }

  map.n_samples = n_trials;
  const std::size_t n = map.pixel_count();
  map.cv.assign(n, std::numeric_limits<float>::quiet_NaN());
  map.mean.assign(n, 0.0f);
  map.defined.assign(n, 0);

  double max_abs_mean = 0.0;
  std::vector<double> mu(n), sigma(n);
  for (std::size_t p = 0; p < n; ++p) {
    mu[p] = sum[p] / n_trials;
    sigma[p] = std::sqrt(std::max(0.0, sumsq[p] / n_trials - mu[p] * mu[p]));
    max_abs_mean = std::max(max_abs_mean, std::abs(mu[p]));
  }
  const double eps = 1e-6 * max_abs_mean;
  for (std::size_t p = 0; p < n; ++p) {
    map.mean[p] = static_cast<float>(mu[p]);
    if (max_abs_mean > 0.0 && std::abs(mu[p]) >= eps) {
      map.cv[p] = static_cast<float>(sigma[p] / std::abs(mu[p]) * 100.0);
      map.defined[p] = 1;
    }
  }
  return map;
}

}  // namespace paray
