#pragma once

#include <vector>

#include "paray/types.hpp"

namespace paray {

// Detector positions on (part of) a sphere centered at the origin, with
// inward-pointing unit normals and a per-element surface patch area.
struct DetectorArray {
  std::vector<Vec3> positions;  // mm
  std::vector<Vec3> normals;    // unit, inward
  double patch_area = 0.0;      // mm^2 per element
  double radius = 0.0;          // mm

  int size() const { return static_cast<int>(positions.size()); }
};

// n detectors on a full sphere via the spherical Fibonacci lattice
// (offset mapping z_i from (i+0.5)/n, azimuth_i = 2*pi*i/phi^2).
DetectorArray fibonacci_sphere_array(int n, double radius);

// Keeps elements at indices round(j*N/k), j = 0..k-1; patch_area rescaled
// to 4*pi*r^2/k.
DetectorArray subsample_uniform(const DetectorArray& array, int k);

// Keeps elements with z <= 0. Patch area is left unchanged.
DetectorArray filter_to_hemisphere(const DetectorArray& array);

// Cubic grid covering center +- half_extent with voxel-center convention:
// dims = round(2*half_extent/spacing), origin = center - half_extent + spacing/2.
VolumeGrid make_grid(const Vec3& center, double half_extent, double spacing);

}  // namespace paray
