#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "paray/common.hpp"

namespace paray {

enum class Axis { X = 0, Y = 1, Z = 2 };

// Regular voxel grid with voxel-center coordinates:
// world(i,j,k) = origin + spacing * (i,j,k).
struct VolumeGrid {
  Vec3 origin;
  double spacing = 0.0;  // mm
  std::array<int, 3> dims = {0, 0, 0};

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  // x-fastest linear index.
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
  }
  Vec3 voxel_center(int i, int j, int k) const {
    return {origin.x + spacing * i, origin.y + spacing * j, origin.z + spacing * k};
  }
};

// Scalar field on a VolumeGrid. Used both for phantoms (initial pressure)
// and for reconstructions.
struct Volume {
  VolumeGrid grid;
  std::vector<float> values;  // size == grid.voxel_count()

  float at(int i, int j, int k) const { return values[grid.index(i, j, k)]; }
  float& at(int i, int j, int k) { return values[grid.index(i, j, k)]; }
};

using SourceVolume = Volume;

// Row-major single-channel image.
struct Image2D {
  int rows = 0, cols = 0;
  std::vector<float> values;  // size == rows * cols
  double pixel_spacing = 0.0;  // mm

  float at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  float& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(rows) * cols; }
};

// Channel x time-sample pressure matrix.
struct RawPAData {
  int n_channels = 0;
  int n_samples = 0;
  std::vector<float> samples;  // row-major, channel-major
  double dt = 0.0;             // s
  double t0 = 0.0;             // s
  double sound_speed = 0.0;    // mm/s

  const float* channel(int i) const { return samples.data() + static_cast<std::size_t>(i) * n_samples; }
  float* channel(int i) { return samples.data() + static_cast<std::size_t>(i) * n_samples; }
};

}  // namespace paray
