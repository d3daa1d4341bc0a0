#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "paray/geometry.hpp"
#include "paray/types.hpp"

namespace paray {

// A randomly selected detector index set, stored strictly increasing.
struct SubsetIndices {
  std::vector<int> indices;
  int n_total = 0;
  std::uint64_t seed = 0;
};

// m distinct indices in [0, n_total), drawn uniformly without replacement by
// a seeded Fisher-Yates partial shuffle; deterministic for fixed arguments.
SubsetIndices random_subset(int n_total, int m, std::uint64_t seed);

// Restricts channels and array elements to s.indices, order preserved.
// patch_area is left unchanged; the back-projection normalization cancels it.
std::pair<RawPAData, DetectorArray> subset_raw(const RawPAData& raw,
                                               const DetectorArray& array,
                                               const SubsetIndices& s);

// Per-pixel coefficient of variation across perturbed reconstructions of one
// grid plane. cv = sigma/|mean| * 100 (population sigma); pixels with
// |mean| < 1e-6 * max|mean| are flagged undefined (cv stored as NaN).
struct CVMap {
  int rows = 0, cols = 0;
  std::vector<float> cv;       // percent; NaN where undefined
  std::vector<float> mean;
  std::vector<std::uint8_t> defined;
  int n_samples = 0;
  double pixel_spacing = 0.0;  // mm

  std::size_t pixel_count() const { return static_cast<std::size_t>(rows) * cols; }
};

// Reconstructs n_trials random-subset slices (per-trial seed = seed + trial)
// and reduces them in fixed trial order, so the result does not depend on the
// thread count used inside each reconstruction.
CVMap cv_analysis(const RawPAData& raw, const DetectorArray& array,
                  const VolumeGrid& grid, Axis axis, int index, int m,
                  int n_trials, std::uint64_t seed, int threads = 0);

}  // namespace paray
