#include "paray/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace paray {
namespace {

struct PointSource {
  Vec3 pos;
  double mass;  // p0 * sub-voxel volume
};

std::vector<PointSource> gather_sources(const SourceVolume& source, int sub) {
  const VolumeGrid& g = source.grid;
  const double hs = g.spacing / sub;
  const double sub_vol = hs * hs * hs;
  std::vector<double> offs(sub);
  for (int s = 0; s < sub; ++s) offs[s] = (s - (sub - 1) / 2.0) * hs;

  std::vector<PointSource> out;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const float v = source.at(i, j, k);
        if (v == 0.0f) continue;
        const Vec3 c = g.voxel_center(i, j, k);
        for (double oz : offs)
          for (double oy : offs)
            for (double ox : offs)
              out.push_back({{c.x + ox, c.y + oy, c.z + oz}, v * sub_vol});
      }
  return out;
}

double max_grid_distance(const VolumeGrid& g, const DetectorArray& array) {
  double dmax = 0.0;
  for (const Vec3& p : array.positions) {
    for (int ci = 0; ci < 8; ++ci) {
      const Vec3 corner{g.origin.x + ((ci & 1) ? (g.dims[0] - 1) * g.spacing : 0.0),
                        g.origin.y + ((ci & 2) ? (g.dims[1] - 1) * g.spacing : 0.0),
                        g.origin.z + ((ci & 4) ? (g.dims[2] - 1) * g.spacing : 0.0)};
      dmax = std::max(dmax, (corner - p).norm());
    }
  }
  return dmax;
}

// Accumulates one detector trace. The per-source kernel is the exact bin
// average of the far-field pressure of a Gaussian ball:
//   p_k = K / (4*pi*c*dt*d) * [exp(-(R-d)^2/(2 sigma^2))]_{R_lo}^{R_hi},
// with K = mass / (sqrt(2*pi) * sigma).
void trace_for_detector(const Vec3& det, const std::vector<PointSource>& sources,
                        double c, double dt, int t_count, double sigma, float* out) {
  const double cdt = c * dt;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const int halo = static_cast<int>(std::ceil(6.0 * sigma / cdt)) + 1;
  std::vector<double> acc(t_count, 0.0);
  for (const PointSource& s : sources) {
    const double d = (s.pos - det).norm();
    if (d <= 0.0) continue;
    const double K = s.mass / (std::sqrt(2.0 * std::numbers::pi) * sigma);
    const double pref = K / (4.0 * std::numbers::pi * c * dt * d);
    const int kc = static_cast<int>(std::llround(d / cdt));
    const int k0 = std::max(1, kc - halo);
    const int k1 = std::min(t_count - 1, kc + halo);
    double e_lo = std::exp(-(((k0 - 0.5) * cdt - d) * ((k0 - 0.5) * cdt - d)) * inv2s2);
    for (int k = k0; k <= k1; ++k) {
      const double r_hi = (k + 0.5) * cdt - d;
      const double e_hi = std::exp(-r_hi * r_hi * inv2s2);
      acc[k] += pref * (e_hi - e_lo);
      e_lo = e_hi;
    }
  }
  for (int k = 0; k < t_count; ++k) out[k] = static_cast<float>(acc[k]);
}

RawPAData simulate_impl(const SourceVolume& source, const DetectorArray& array,
                        double dt, int t_count, double c, const ForwardOptions& opts,
                        int threads) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_signals: dt must be > 0");
  if (!(c > 0.0)) throw std::invalid_argument("simulate_signals: sound_speed must be > 0");
  const int required = required_sample_count(source.grid, array, dt, c, opts);
  if (t_count < required)
    throw PreconditionError("simulate_signals: time window too short, need t_count >= " +
                            std::to_string(required) + ", got " + std::to_string(t_count));

  const double sigma = opts.sigma_factor * source.grid.spacing / opts.subdivision;
  const std::vector<PointSource> sources = gather_sources(source, opts.subdivision);

  RawPAData raw;
  raw.n_channels = array.size();
  raw.n_samples = t_count;
  raw.dt = dt;
  raw.t0 = 0.0;
  raw.sound_speed = c;
  raw.samples.assign(static_cast<std::size_t>(raw.n_channels) * t_count, 0.0f);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (int i = 0; i < raw.n_channels; ++i)
    trace_for_detector(array.positions[i], sources, c, dt, t_count, sigma, raw.channel(i));
  return raw;
}

}  // namespace

int required_sample_count(const VolumeGrid& grid, const DetectorArray& array,
                          double dt, double sound_speed, const ForwardOptions& opts) {
  const double sigma = opts.sigma_factor * grid.spacing / opts.subdivision;
  const double dmax = max_grid_distance(grid, array) + 6.0 * sigma;
  return static_cast<int>(std::ceil(dmax / (sound_speed * dt))) + 3;
}

RawPAData simulate_signals(const SourceVolume& source, const DetectorArray& array,
                           double dt, int t_count, double sound_speed,
                           const ForwardOptions& opts) {
  return simulate_impl(source, array, dt, t_count, sound_speed, opts,
                       resolve_threads(opts.threads));
}

RawPAData simulate_signals_serial(const SourceVolume& source, const DetectorArray& array,
                                  double dt, int t_count, double sound_speed,
                                  ForwardOptions opts) {
  return simulate_impl(source, array, dt, t_count, sound_speed, opts, 1);
}

}  // namespace paray
