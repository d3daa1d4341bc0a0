#include "paray/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace paray {
namespace {

void check_same_shape(const Image2D& a, const Image2D& b, const char* what) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument(std::string(what) + ": image shapes differ");
}

RegionMask dilate(const RegionMask& in, int steps) {
  RegionMask cur = in;
  for (int s = 0; s < steps; ++s) {
    RegionMask next = cur;
    for (int r = 0; r < cur.rows; ++r)
      for (int c = 0; c < cur.cols; ++c) {
        if (cur.mask[static_cast<std::size_t>(r) * cur.cols + c]) continue;
        bool hit = false;
        for (int dr = -1; dr <= 1 && !hit; ++dr)
          for (int dc = -1; dc <= 1 && !hit; ++dc) {
            const int rr = r + dr, cc = c + dc;
            if (rr >= 0 && rr < cur.rows && cc >= 0 && cc < cur.cols &&
                cur.mask[static_cast<std::size_t>(rr) * cur.cols + cc])
              hit = true;
          }
        if (hit) next.mask[static_cast<std::size_t>(r) * cur.cols + c] = 1;
      }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

std::size_t RegionMask::count() const {
  std::size_t n = 0;
  for (std::uint8_t m : mask) n += m;
  return n;
}

double scaled_mse(const Image2D& reference, const Image2D& test) {
  check_same_shape(reference, test, "psnr");
  const auto [mn_it, mx_it] =
      std::minmax_element(reference.values.begin(), reference.values.end());
  const double mn = *mn_it, mx = *mx_it;
  if (!(mx > mn))
    throw std::invalid_argument("psnr: reference image is constant");
  const double scale = 1.0 / (mx - mn);
  double acc = 0.0;
  for (std::size_t p = 0; p < reference.values.size(); ++p) {
    const double a = (reference.values[p] - mn) * scale;
    const double b = (test.values[p] - mn) * scale;
    acc += (a - b) * (a - b);
  }
  return acc / static_cast<double>(reference.values.size());
}

double psnr(const Image2D& reference, const Image2D& test) {
  const double mse = scaled_mse(reference, test);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double cnr(const Image2D& image, const RegionMask& signal,
           const RegionMask& background) {
  if (signal.rows != image.rows || signal.cols != image.cols ||
      background.rows != image.rows || background.cols != image.cols)
    throw std::invalid_argument("cnr: mask shapes differ from image");
  double ssum = 0.0, bsum = 0.0, bsumsq = 0.0;
  std::size_t sn = 0, bn = 0;
  for (std::size_t p = 0; p < image.values.size(); ++p) {
    if (signal.mask[p] && background.mask[p])
      throw std::invalid_argument("cnr: signal and background masks overlap");
    if (signal.mask[p]) {
      ssum += image.values[p];
      ++sn;
    } else if (background.mask[p]) {
      bsum += image.values[p];
      bsumsq += static_cast<double>(image.values[p]) * image.values[p];
      ++bn;
    }
  }
  if (sn == 0 || bn == 0)
    throw std::invalid_argument("cnr: empty signal or background mask");
  const double mu_s = ssum / sn;
  const double mu_b = bsum / bn;
  const double var_b = std::max(0.0, bsumsq / bn - mu_b * mu_b);
  if (var_b == 0.0)
    throw UndefinedMetricError("cnr: background has zero variance");
  return std::abs(mu_s - mu_b) / std::sqrt(var_b);
}

std::pair<RegionMask, RegionMask> default_masks(const Image2D& ground_truth) {
  RegionMask support;
  support.rows = ground_truth.rows;
  support.cols = ground_truth.cols;
  support.mask.assign(ground_truth.pixel_count(), 0);
  for (std::size_t p = 0; p < ground_truth.values.size(); ++p)
    if (ground_truth.values[p] != 0.0f) support.mask[p] = 1;
  if (support.count() == 0)
    throw std::invalid_argument("default_masks: ground truth has empty support");

  RegionMask signal = dilate(support, 1);
  const RegionMask excluded = dilate(signal, 2);
  RegionMask background = excluded;
  for (std::size_t p = 0; p < background.mask.size(); ++p)
    background.mask[p] = excluded.mask[p] ? 0 : 1;
  if (background.count() == 0)
    throw std::invalid_argument("default_masks: background mask is empty");
  return {std::move(signal), std::move(background)};
}

}  // namespace paray
