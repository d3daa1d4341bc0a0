#pragma once

#include <vector>

#include "paray/geometry.hpp"
#include "paray/types.hpp"

namespace paray {

// Filtered trace b(t) = 2 p - 2 (c t) dp/d(ct), central differences inside,
// one-sided at the endpoints. Trace must have at least 3 samples.
std::vector<double> backprojection_term(const float* trace, int n, double dt,
                                        double sound_speed, double t0 = 0.0);

// Universal back-projection onto a full grid. Per voxel, detector weights are
// solid angles patch_area * (n0 . (r - r0)) / |r - r0|^3; detectors behind the
// voxel (weight <= 0) are skipped and the weighted sum is normalized by the
// total weight at that voxel. b is sampled with linear interpolation in time.
Volume reconstruct(const RawPAData& raw, const DetectorArray& array,
                   const VolumeGrid& grid, int threads = 0);

// Serial reference path; bitwise identical to reconstruct.
Volume reconstruct_serial(const RawPAData& raw, const DetectorArray& array,
                          const VolumeGrid& grid);

// Same math as reconstruct, restricted to one grid plane. Row/column layout:
// axis Z -> (row=y, col=x), axis Y -> (row=z, col=x), axis X -> (row=z, col=y).
Image2D reconstruct_slice(const RawPAData& raw, const DetectorArray& array,
                          const VolumeGrid& grid, Axis axis, int index,
                          int threads = 0);

// Per-pixel value with maximum magnitude along the projected axis, sign kept.
Image2D map_projection(const Volume& volume, Axis axis);

// Extracts one plane of an existing volume (same layout as reconstruct_slice).
Image2D extract_slice(const Volume& volume, Axis axis, int index);

}  // namespace paray
