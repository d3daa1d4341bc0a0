#include "paray/ubp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace paray {
namespace {

struct BTerms {
  std::vector<std::vector<double>> per_channel;
};

BTerms all_bterms(const RawPAData& raw) {
  BTerms b;
  b.per_channel.resize(raw.n_channels);
  for (int i = 0; i < raw.n_channels; ++i)
    b.per_channel[i] =
        backprojection_term(raw.channel(i), raw.n_samples, raw.dt, raw.sound_speed, raw.t0);
  return b;
}

// UBP value at one point; summation order over detectors is fixed, so the
// result is independent of how points are distributed over threads.
double ubp_value(const Vec3& r, const DetectorArray& array, const BTerms& b,
                 const RawPAData& raw) {
  const double c = raw.sound_speed;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < array.size(); ++i) {
    const Vec3 rv = r - array.positions[i];
    const double dist = rv.norm();
    if (dist <= 0.0) continue;
    const double w = array.patch_area * array.normals[i].dot(rv) / (dist * dist * dist);
    if (w <= 0.0) continue;
    const double tau = (dist / c - raw.t0) / raw.dt;
    const int i0 = static_cast<int>(tau);
    const double frac = tau - i0;
    const std::vector<double>& bt = b.per_channel[i];
    const double bi = bt[i0] * (1.0 - frac) + bt[i0 + 1] * frac;
    num += w * bi;
    den += w;
  }
  return den > 0.0 ? num / den : 0.0;
}

void check_window(const RawPAData& raw, const DetectorArray& array, const VolumeGrid& g) {
  if (raw.n_channels != array.size())
    throw std::invalid_argument("reconstruct: raw has " + std::to_string(raw.n_channels) +
                                " channels but array has " + std::to_string(array.size()) +
                                " elements");
  if (raw.n_samples < 3) throw std::invalid_argument("reconstruct: need >= 3 time samples");
  double dmax = 0.0;
  for (const Vec3& p : array.positions)
    for (int ci = 0; ci < 8; ++ci) {
      const Vec3 corner{g.origin.x + ((ci & 1) ? (g.dims[0] - 1) * g.spacing : 0.0),
                        g.origin.y + ((ci & 2) ? (g.dims[1] - 1) * g.spacing : 0.0),
                        g.origin.z + ((ci & 4) ? (g.dims[2] - 1) * g.spacing : 0.0)};
      dmax = std::max(dmax, (corner - p).norm());
    }
  const double tau_max = (dmax / raw.sound_speed - raw.t0) / raw.dt;
  if (tau_max + 1.0 >= raw.n_samples)
    throw PreconditionError("reconstruct: time window too short, need n_samples > " +
                            std::to_string(tau_max + 1.0));
}

Volume reconstruct_impl(const RawPAData& raw, const DetectorArray& array,
                        const VolumeGrid& grid, int threads) {
  check_window(raw, array, grid);
  const BTerms b = all_bterms(raw);

  Volume vol;
  vol.grid = grid;
  vol.values.assign(grid.voxel_count(), 0.0f);
  const int nz = grid.dims[2], ny = grid.dims[1], nx = grid.dims[0];
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        vol.at(i, j, k) =
            static_cast<float>(ubp_value(grid.voxel_center(i, j, k), array, b, raw));
  return vol;
}

void slice_shape(const VolumeGrid& g, Axis axis, int& rows, int& cols) {
  switch (axis) {
    case Axis::Z: rows = g.dims[1]; cols = g.dims[0]; break;
    case Axis::Y: rows = g.dims[2]; cols = g.dims[0]; break;
    case Axis::X: rows = g.dims[2]; cols = g.dims[1]; break;
  }
}

// (row, col, index) -> voxel (i, j, k)
void slice_voxel(Axis axis, int row, int col, int index, int& i, int& j, int& k) {
  switch (axis) {
    case Axis::Z: i = col; j = row; k = index; break;
    case Axis::Y: i = col; j = index; k = row; break;
    case Axis::X: i = index; j = col; k = row; break;
  }
}

}  // namespace

std::vector<double> backprojection_term(const float* trace, int n, double dt,
                                        double sound_speed, double t0) {
  if (n < 3) throw std::invalid_argument("backprojection_term: trace needs >= 3 samples");
  const double c = sound_speed;
  std::vector<double> b(n);
  for (int k = 0; k < n; ++k) {
    const double tbar = c * (t0 + k * dt);
    double dp;  // dp/d(ct)
    if (k == 0)
      dp = (static_cast<double>(trace[1]) - trace[0]) / (c * dt);
    else if (k == n - 1)
      dp = (static_cast<double>(trace[n - 1]) - trace[n - 2]) / (c * dt);
    else
      dp = (static_cast<double>(trace[k + 1]) - trace[k - 1]) / (2.0 * c * dt);
    b[k] = 2.0 * trace[k] - 2.0 * tbar * dp;
  }
  return b;
}

Volume reconstruct(const RawPAData& raw, const DetectorArray& array,
                   const VolumeGrid& grid, int threads) {
  return reconstruct_impl(raw, array, grid, resolve_threads(threads));
}

Volume reconstruct_serial(const RawPAData& raw, const DetectorArray& array,
                          const VolumeGrid& grid) {
  return reconstruct_impl(raw, array, grid, 1);
}

Image2D reconstruct_slice(const RawPAData& raw, const DetectorArray& array,
                          const VolumeGrid& grid, Axis axis, int index,
                          int threads) {
  const int n_along = grid.dims[static_cast<int>(axis)];
  if (index < 0 || index >= n_along)
    throw std::invalid_argument("reconstruct_slice: index " + std::to_string(index) +
                                " out of range [0," + std::to_string(n_along) + ")");
  check_window(raw, array, grid);
  const BTerms b = all_bterms(raw);

  Image2D img;
  slice_shape(grid, axis, img.rows, img.cols);
  img.pixel_spacing = grid.spacing;
  img.values.assign(img.pixel_count(), 0.0f);
  const int nthreads = resolve_threads(threads);
  (void)nthreads;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
#endif
  for (int row = 0; row < img.rows; ++row)
    for (int col = 0; col < img.cols; ++col) {
      int i, j, k;
      slice_voxel(axis, row, col, index, i, j, k);
      img.at(row, col) =
          static_cast<float>(ubp_value(grid.voxel_center(i, j, k), array, b, raw));
    }
  return img;
}

Image2D map_projection(const Volume& volume, Axis axis) {
  const VolumeGrid& g = volume.grid;
  Image2D img;
  slice_shape(g, axis, img.rows, img.cols);
  img.pixel_spacing = g.spacing;
  img.values.assign(img.pixel_count(), 0.0f);
  const int n_along = g.dims[static_cast<int>(axis)];
  for (int row = 0; row < img.rows; ++row)
    for (int col = 0; col < img.cols; ++col) {
      float best = 0.0f;
      for (int a = 0; a < n_along; ++a) {
        int i, j, k;
        slice_voxel(axis, row, col, a, i, j, k);
        const float v = volume.at(i, j, k);
        if (std::abs(v) > std::abs(best)) best = v;
      }
      img.at(row, col) = best;
    }
  return img;
}

Image2D extract_slice(const Volume& volume, Axis axis, int index) {
  const VolumeGrid& g = volume.grid;
  const int n_along = g.dims[static_cast<int>(axis)];
  if (index < 0 || index >= n_along)
    throw std::invalid_argument("extract_slice: index out of range");
  Image2D img;
  slice_shape(g, axis, img.rows, img.cols);
  img.pixel_spacing = g.spacing;
  img.values.assign(img.pixel_count(), 0.0f);
  for (int row = 0; row < img.rows; ++row)
    for (int col = 0; col < img.cols; ++col) {
      int i, j, k;
      slice_voxel(axis, row, col, index, i, j, k);
      img.at(row, col) = volume.at(i, j, k);
    }
  return img;
}

}  // namespace paray
