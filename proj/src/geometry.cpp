#include "paray/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace paray {

DetectorArray fibonacci_sphere_array(int n, double radius) {
  if (n < 1) throw std::invalid_argument("fibonacci_sphere_array: n must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("fibonacci_sphere_array: radius must be > 0");

  constexpr double pi = std::numbers::pi;
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double golden_angle = 2.0 * pi / (phi * phi);

  DetectorArray out;
  out.radius = radius;
  out.patch_area = 4.0 * pi * radius * radius / n;
  out.positions.reserve(n);
  out.normals.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double az = golden_angle * i;
    const Vec3 unit{rho * std::cos(az), rho * std::sin(az), z};
    out.positions.push_back(unit * radius);
    out.normals.push_back(unit * -1.0);
  }
  return out;
}

DetectorArray subsample_uniform(const DetectorArray& array, int k) {
  const int n = array.size();
  if (k < 1 || k > n) throw std::invalid_argument("subsample_uniform: need 1 <= k <= N");

  DetectorArray out;
  out.radius = array.radius;
  out.patch_area = 4.0 * std::numbers::pi * array.radius * array.radius / k;
  int last = -1;
  for (int j = 0; j < k; ++j) {
    const int idx = static_cast<int>(std::llround(static_cast<double>(j) * n / k));
    if (idx == last) continue;  // dedup, keep strictly increasing
    last = idx;
    out.positions.push_back(array.positions[idx]);
    out.normals.push_back(array.normals[idx]);
  }
  return out;
}

DetectorArray filter_to_hemisphere(const DetectorArray& array) {
  DetectorArray out;
  out.radius = array.radius;
  out.patch_area = array.patch_area;
  for (int i = 0; i < array.size(); ++i) {
    if (array.positions[i].z <= 0.0) {
      out.positions.push_back(array.positions[i]);
      out.normals.push_back(array.normals[i]);
    }
  }
  return out;
}

VolumeGrid make_grid(const Vec3& center, double half_extent, double spacing) {
  if (!(half_extent > 0.0)) throw std::invalid_argument("make_grid: half_extent must be > 0");
  if (!(spacing > 0.0)) throw std::invalid_argument("make_grid: spacing must be > 0");

  const int d = static_cast<int>(std::llround(2.0 * half_extent / spacing));
  VolumeGrid g;
  g.spacing = spacing;
  g.dims = {std::max(1, d), std::max(1, d), std::max(1, d)};
  const double off = -half_extent + spacing / 2.0;
  g.origin = {center.x + off, center.y + off, center.z + off};
  return g;
}

}  // namespace paray
