#pragma once

#include "paray/geometry.hpp"
#include "paray/types.hpp"

namespace paray {

// Acoustic forward model parameters. Each nonzero voxel radiates as a small
// Gaussian-profile source (std dev sigma, sub x sub x sub sub-sources per
// voxel); detector traces are exact bin averages of the analytic pressure
// of those sources, so no numerical time derivative is involved.
struct ForwardOptions {
  int subdivision = 2;          // sub-sources per voxel axis
  double sigma_factor = 1.5;    // sigma = sigma_factor * (spacing / subdivision)
  int threads = 0;              // 0 = resolve from PARAY_THREADS / OpenMP
};

// Samples needed so that every voxel-to-detector arrival (plus kernel tails
// and one guard bin) fits in the trace.
int required_sample_count(const VolumeGrid& grid, const DetectorArray& array,
                          double dt, double sound_speed,
                          const ForwardOptions& opts = {});

// Simulates detector pressure traces for the delta-excitation problem.
// Throws PreconditionError naming the required t_count when the window is
// too short.
RawPAData simulate_signals(const SourceVolume& source, const DetectorArray& array,
                           double dt, int t_count, double sound_speed,
                           const ForwardOptions& opts = {});

// Serial reference path (no OpenMP); bitwise identical to simulate_signals.
RawPAData simulate_signals_serial(const SourceVolume& source, const DetectorArray& array,
                                  double dt, int t_count, double sound_speed,
                                  ForwardOptions opts = {});

// Default sound speed in water, mm/s.
inline constexpr double kDefaultSoundSpeed = 1.5e6;

}  // namespace paray
