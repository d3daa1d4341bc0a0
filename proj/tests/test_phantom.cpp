#include <doctest.h>

#include <cmath>
#include <numbers>

#include "paray/geometry.hpp"
#include "paray/phantom.hpp"

using namespace paray;

TEST_CASE("rasterize_phantom: sphere voxel volume matches the analytic volume") {
  PhantomSpec spec;
  spec.spheres.push_back({{0, 0, 0}, 2.0, 1.5});
  const VolumeGrid grid = make_grid({0, 0, 0}, 2.5, 0.1);
  const SourceVolume vol = rasterize_phantom(spec, grid);

  std::size_t n_inside = 0;
  for (float v : vol.values) {
    CHECK((v == 0.0f || v == 1.5f));
    if (v != 0.0f) ++n_inside;
  }
  const double analytic = 4.0 / 3.0 * std::numbers::pi * 8.0;  // mm^3
  const double voxelized = static_cast<double>(n_inside) * 0.1 * 0.1 * 0.1;
  CHECK(std::abs(voxelized - analytic) < 0.02 * analytic);
}

TEST_CASE("rasterize_phantom: empty spec gives zeros") {
  const VolumeGrid grid = make_grid({0, 0, 0}, 1.0, 0.1);
  const SourceVolume vol = rasterize_phantom(PhantomSpec{}, grid);
  REQUIRE(vol.values.size() == grid.voxel_count());
  for (float v : vol.values) CHECK(v == 0.0f);
}

TEST_CASE("rasterize_phantom: disjoint primitives superpose independently") {
  PhantomSpec spec;
  spec.spheres.push_back({{-1.5, 0, 0}, 0.5, 1.0});
  spec.spheres.push_back({{1.5, 0, 0}, 0.5, 2.0});
  const VolumeGrid grid = make_grid({0, 0, 0}, 2.5, 0.1);
  const SourceVolume vol = rasterize_phantom(spec, grid);
  float mx = 0.0f;
  bool saw1 = false, saw2 = false;
  for (float v : vol.values) {
    mx = std::max(mx, v);
    if (v == 1.0f) saw1 = true;
    if (v == 2.0f) saw2 = true;
  }
  CHECK(mx == 2.0f);
  CHECK(saw1);
  CHECK(saw2);

  // Overlapping spheres add amplitudes.
  PhantomSpec overlap;
  overlap.spheres.push_back({{0, 0, 0}, 0.5, 1.0});
  overlap.spheres.push_back({{0, 0, 0}, 0.5, 2.0});
  const SourceVolume vol2 = rasterize_phantom(overlap, grid);
  const int c = grid.dims[0] / 2;
  CHECK(vol2.at(c, c, c) == 3.0f);
}

TEST_CASE("rasterize_phantom: capsule tube volume and membership") {
  PhantomSpec spec;
  spec.tubes.push_back({{-2, 0, 0}, {2, 0, 0}, 0.5, 1.0});
  const VolumeGrid grid = make_grid({0, 0, 0}, 3.0, 0.1);
  const SourceVolume vol = rasterize_phantom(spec, grid);

  auto value_at = [&](double x, double y, double z) {
    const int i = static_cast<int>(std::lround((x - grid.origin.x) / grid.spacing));
    const int j = static_cast<int>(std::lround((y - grid.origin.y) / grid.spacing));
    const int k = static_cast<int>(std::lround((z - grid.origin.z) / grid.spacing));
    return vol.at(i, j, k);
  };
  CHECK(value_at(0.0, 0.0, 0.0) == 1.0f);
  CHECK(value_at(0.0, 0.0, 1.0) == 0.0f);
  CHECK(value_at(2.3, 0.0, 0.0) == 1.0f);  // inside the end cap
  CHECK(value_at(2.7, 0.0, 0.0) == 0.0f);

  std::size_t n_inside = 0;
  for (float v : vol.values)
    if (v != 0.0f) ++n_inside;
  const double analytic = std::numbers::pi * 0.25 * 4.0 +
                          4.0 / 3.0 * std::numbers::pi * 0.125;  // cylinder + caps
  const double voxelized = static_cast<double>(n_inside) * 1e-3;
  CHECK(std::abs(voxelized - analytic) < 0.03 * analytic);
}

TEST_CASE("rasterize_phantom: rejects non-positive radius or amplitude") {
  const VolumeGrid grid = make_grid({0, 0, 0}, 1.0, 0.1);
  PhantomSpec bad1;
  bad1.spheres.push_back({{0, 0, 0}, 0.0, 1.0});
  CHECK_THROWS_AS(rasterize_phantom(bad1, grid), std::invalid_argument);
  PhantomSpec bad2;
  bad2.spheres.push_back({{0, 0, 0}, 1.0, -1.0});
  CHECK_THROWS_AS(rasterize_phantom(bad2, grid), std::invalid_argument);
  PhantomSpec bad3;
  bad3.tubes.push_back({{0, 0, 0}, {1, 0, 0}, -0.1, 1.0});
  CHECK_THROWS_AS(rasterize_phantom(bad3, grid), std::invalid_argument);
}

TEST_CASE("vessel_tree_phantom: deterministic, bounded, nonempty") {
  const PhantomSpec a = vessel_tree_phantom(42, 6.0);
  const PhantomSpec b = vessel_tree_phantom(42, 6.0);
  REQUIRE(a.tubes.size() == b.tubes.size());
  CHECK(a.tubes.size() > 0);
  for (std::size_t i = 0; i < a.tubes.size(); ++i) {
    CHECK(a.tubes[i].a.x == b.tubes[i].a.x);
    CHECK(a.tubes[i].b.z == b.tubes[i].b.z);
    CHECK(a.tubes[i].radius == b.tubes[i].radius);
    CHECK(a.tubes[i].radius > 0.0);
    // Axis endpoints stay strictly inside the requested extent.
    for (const Vec3& p : {a.tubes[i].a, a.tubes[i].b}) {
      CHECK(std::abs(p.x) < 6.0);
      CHECK(std::abs(p.y) < 6.0);
      CHECK(std::abs(p.z) < 6.0);
    }
  }

  const PhantomSpec c = vessel_tree_phantom(43, 6.0);
  const bool differs = c.tubes.size() != a.tubes.size() ||
                       c.tubes[0].a.x != a.tubes[0].a.x;
  CHECK(differs);
}
