#pragma once

#include <cstdint>
#include <vector>

#include "paray/types.hpp"

namespace paray {

// Geometric initial-pressure phantom: union of spheres or of capsule-shaped
// tubes. Overlapping primitives superpose (amplitudes add).
struct PhantomSpec {
  struct Sphere {
    Vec3 center;
    double radius = 0.0;
    double amplitude = 0.0;
  };
  struct Tube {
    Vec3 a, b;           // endpoints of the axis segment
    double radius = 0.0;  // tube radius
    double amplitude = 0.0;
  };
  std::vector<Sphere> spheres;
  std::vector<Tube> tubes;
};

// Voxel value = sum of amplitudes of primitives containing the voxel center.
SourceVolume rasterize_phantom(const PhantomSpec& spec, const VolumeGrid& grid);

// Seeded random branching tube tree confined to |x|,|y|,|z| < extent.
// The generator procedure (documented in the README) is: grow `n_roots`
// trunks from random boundary-ish start points toward the interior; each
// segment advances by a fixed step with a small random angular kink; tubes
// thin by `taper` per branch generation; a branch splits with probability
// `branch_prob` per step up to `max_depth` generations.
PhantomSpec vessel_tree_phantom(std::uint64_t seed, double extent,
                                int n_roots = 3, int max_depth = 4);

}  // namespace paray
