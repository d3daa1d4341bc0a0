#include "paray/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "paray/common.hpp"

namespace paray {
namespace {

double dist_point_segment_sq(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.dot(ab);
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec3 q = a + t * ab;
  const Vec3 d = p - q;
  return d.dot(d);
}

}  // namespace

SourceVolume rasterize_phantom(const PhantomSpec& spec, const VolumeGrid& grid) {
  for (const auto& s : spec.spheres)
    if (!(s.radius > 0.0) || !(s.amplitude > 0.0))
      throw std::invalid_argument("rasterize_phantom: sphere radius/amplitude must be > 0");
  for (const auto& t : spec.tubes)
    if (!(t.radius > 0.0) || !(t.amplitude > 0.0))
      throw std::invalid_argument("rasterize_phantom: tube radius/amplitude must be > 0");

  SourceVolume vol;
  vol.grid = grid;
  vol.values.assign(grid.voxel_count(), 0.0f);
  for (int k = 0; k < grid.dims[2]; ++k) {
    for (int j = 0; j < grid.dims[1]; ++j) {
      for (int i = 0; i < grid.dims[0]; ++i) {
        const Vec3 p = grid.voxel_center(i, j, k);
        double v = 0.0;
        for (const auto& s : spec.spheres) {
          const Vec3 d = p - s.center;
          if (d.dot(d) <= s.radius * s.radius) v += s.amplitude;
        }
        for (const auto& t : spec.tubes) {
          if (dist_point_segment_sq(p, t.a, t.b) <= t.radius * t.radius) v += t.amplitude;
        }
        if (v != 0.0) vol.at(i, j, k) = static_cast<float>(v);
      }
    }
  }
  return vol;
}

PhantomSpec vessel_tree_phantom(std::uint64_t seed, double extent,
                                int n_roots, int max_depth) {
  PhantomSpec spec;
  Rng rng(seed);

  struct Branch {
    Vec3 pos, dir;
    double radius;
    int depth;
  };

  const double step = extent / 4.0;
  const double kink = 0.45;   // max angular perturbation per step, radians-ish
  const double taper = 0.72;  // radius multiplier per generation
  const double branch_prob = 0.35;

  std::vector<Branch> stack;
  for (int r = 0; r < n_roots; ++r) {
    Branch b;
    b.pos = {rng.uniform(-0.8, 0.8) * extent, rng.uniform(-0.8, 0.8) * extent,
             rng.uniform(-0.8, 0.8) * extent};
    const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double cz = rng.uniform(-1.0, 1.0);
    const double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
    b.dir = {sz * std::cos(th), sz * std::sin(th), cz};
    b.radius = extent / 22.0;
    b.depth = 0;
    stack.push_back(b);
  }

  auto inside = [extent](const Vec3& p) {
    return std::abs(p.x) < extent && std::abs(p.y) < extent && std::abs(p.z) < extent;
  };

  while (!stack.empty()) {
    Branch b = stack.back();
    stack.pop_back();
    const int n_steps = 3 + static_cast<int>(rng.next_below(4));
    for (int s = 0; s < n_steps; ++s) {
      Vec3 d = b.dir;
      d.x += rng.uniform(-kink, kink);
      d.y += rng.uniform(-kink, kink);
      d.z += rng.uniform(-kink, kink);
      const double n = d.norm();
      if (n > 0.0) b.dir = d * (1.0 / n);
      Vec3 end = b.pos + b.dir * step;
      if (!inside(end)) break;
      spec.tubes.push_back({b.pos, end, b.radius, 1.0});
      b.pos = end;
      if (b.depth < max_depth && rng.next_double() < branch_prob) {
        Branch child = b;
        child.depth = b.depth + 1;
        child.radius = b.radius * taper;
        Vec3 cd = b.dir;
        cd.x += rng.uniform(-1.0, 1.0);
        cd.y += rng.uniform(-1.0, 1.0);
        cd.z += rng.uniform(-1.0, 1.0);
        const double cn = cd.norm();
        if (cn > 0.0) child.dir = cd * (1.0 / cn);
        stack.push_back(child);
      }
    }
  }
  return spec;
}

}  // namespace paray
