#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include "paray/types.hpp"

namespace paray {

// Thrown when a metric is mathematically undefined for the given inputs
// (e.g. CNR with zero background variance).
class UndefinedMetricError : public std::runtime_error {
 public:
  explicit UndefinedMetricError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RegionMask {
  int rows = 0, cols = 0;
  std::vector<std::uint8_t> mask;  // 1 = inside

  std::size_t count() const;
};

struct MetricsReport {
  double psnr_db = 0.0;
  double mse = 0.0;
  double cnr = 0.0;
  bool has_cnr = false;
  std::string reference_id, test_id;
};

// PSNR cap used when serializing the +infinity (identical images) sentinel.
inline constexpr double kPsnrCapDb = 200.0;

// Both images are scaled to [0,1] by the *reference's* (min, max) so that
// different methods are compared on a common scale; psnr = 10*log10(1/mse).
// Identical images give +infinity.
double psnr(const Image2D& reference, const Image2D& test);

// Mean squared error on the same reference-scaled values psnr uses.
double scaled_mse(const Image2D& reference, const Image2D& test);

// |mean(signal) - mean(background)| / stddev(background), population stddev.
double cnr(const Image2D& image, const RegionMask& signal,
           const RegionMask& background);

// signal = support of the ground truth dilated by 1 pixel (8-neighborhood);
// background = complement of the signal mask dilated by 2 more pixels.
std::pair<RegionMask, RegionMask> default_masks(const Image2D& ground_truth);

}  // namespace paray
