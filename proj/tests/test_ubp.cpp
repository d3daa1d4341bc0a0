#include <doctest.h>

#include <cmath>
#include <vector>

#include "paray/forward.hpp"
#include "paray/geometry.hpp"
#include "paray/ubp.hpp"

using namespace paray;

namespace {

// Constant-value raw data long enough for the given geometry.
RawPAData constant_raw(int n_channels, int n_samples, float value, double cdt) {
  RawPAData raw;
  raw.n_channels = n_channels;
  raw.n_samples = n_samples;
  raw.sound_speed = kDefaultSoundSpeed;
  raw.dt = cdt / kDefaultSoundSpeed;
  raw.t0 = 0.0;
  raw.samples.assign(static_cast<std::size_t>(n_channels) * n_samples, value);
  return raw;
}

}  // namespace

TEST_CASE("backprojection_term: hand-checked values") {
  // p(k) = k^2 with c = 1, dt = 1: b(k) = 2k^2 - 2k * 2k = -2k^2 inside.
  const float quad[5] = {0, 1, 4, 9, 16};
  const auto b = backprojection_term(quad, 5, 1.0, 1.0);
  CHECK(b[1] == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(b[2] == doctest::Approx(-8.0).epsilon(1e-12));
  CHECK(b[3] == doctest::Approx(-18.0).epsilon(1e-12));
  // One-sided endpoints: k=0 -> 2*0 - 0*1 = 0; k=4 -> 32 - 2*4*7 = -24.
  CHECK(b[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b[4] == doctest::Approx(-24.0).epsilon(1e-12));

  // Constant trace: derivative term vanishes everywhere -> 2A.
  const float flat[4] = {3, 3, 3, 3};
  for (double v : backprojection_term(flat, 4, 0.5, 2.0))
    CHECK(v == doctest::Approx(6.0).epsilon(1e-12));

  // Linear ramp p = c*t: 2ct - 2ct = 0 at every sample, endpoints included.
  const float ramp[6] = {0, 2, 4, 6, 8, 10};
  for (double v : backprojection_term(ramp, 6, 1.0, 2.0))
    CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(backprojection_term(flat, 2, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("reconstruct: zero data gives a zero volume, constant data gives 2A") {
  const DetectorArray det = fibonacci_sphere_array(32, 10.0);
  const VolumeGrid grid = make_grid({0, 0, 0}, 0.8, 0.2);
  const RawPAData zero = constant_raw(32, 160, 0.0f, 0.1);
  const Volume vz = reconstruct(zero, det, grid);
  for (float v : vz.values) CHECK(v == 0.0f);

  // b(t) = 2A for constant traces; interpolation and the weight
  // normalization reproduce exactly 2A at every voxel.
  const RawPAData flat = constant_raw(32, 160, 0.5f, 0.1);
  const Volume vf = reconstruct(flat, det, grid);
  for (float v : vf.values) CHECK(v == 1.0f);
}

TEST_CASE("reconstruct: point source localizes to within one voxel") {
  const VolumeGrid grid = make_grid({0, 0, 0}, 3.2, 0.2);
  SourceVolume src;
  src.grid = grid;
  src.values.assign(grid.voxel_count(), 0.0f);
  src.at(16, 16, 16) = 1.0f;  // world (0.1, 0.1, 0.1)
  const DetectorArray det = fibonacci_sphere_array(128, 15.0);
  const double c = kDefaultSoundSpeed;
  const double dt = 0.1 / c;
  const int n = required_sample_count(grid, det, dt, c);
  const RawPAData raw = simulate_signals(src, det, dt, n, c);

  const Volume rec = reconstruct(raw, det, grid);
  int bi = 0, bj = 0, bk = 0;
  float best = 0.0f;
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i)
        if (std::abs(rec.at(i, j, k)) > best) {
          best = std::abs(rec.at(i, j, k));
          bi = i;
          bj = j;
          bk = k;
        }
  CHECK(std::abs(bi - 16) <= 1);
  CHECK(std::abs(bj - 16) <= 1);
  CHECK(std::abs(bk - 16) <= 1);
  CHECK(rec.at(bi, bj, bk) > 0.0f);

  SUBCASE("slice agrees bitwise with the corresponding volume plane") {
    const Image2D slice = reconstruct_slice(raw, det, grid, Axis::Z, 16);
    const Image2D plane = extract_slice(rec, Axis::Z, 16);
    REQUIRE(slice.values.size() == plane.values.size());
    for (std::size_t p = 0; p < slice.values.size(); ++p)
      CHECK(slice.values[p] == plane.values[p]);
  }

  SUBCASE("serial reconstruction is bitwise identical") {
    const Volume ser = reconstruct_serial(raw, det, grid);
    for (std::size_t p = 0; p < rec.values.size(); ++p)
      CHECK(ser.values[p] == rec.values[p]);
  }

  SUBCASE("linearity: doubled data doubles the image") {
    RawPAData scaled = raw;
    for (float& v : scaled.samples) v *= 2.0f;
    const Volume rec2 = reconstruct(scaled, det, grid);
    for (std::size_t p = 0; p < rec.values.size(); ++p)
      CHECK(std::abs(rec2.values[p] - 2.0f * rec.values[p]) <= 1e-6f * best);
  }

  SUBCASE("patch area cancels out of the normalized sum") {
    DetectorArray scaled_det = det;
    scaled_det.patch_area *= 3.0;
    const Volume rec3 = reconstruct(raw, scaled_det, grid);
    for (std::size_t p = 0; p < rec.values.size(); ++p)
      CHECK(std::abs(rec3.values[p] - rec.values[p]) <= 1e-9f * best);
  }
}

TEST_CASE("reconstruct: input validation") {
  const DetectorArray det = fibonacci_sphere_array(8, 10.0);
  const VolumeGrid grid = make_grid({0, 0, 0}, 0.8, 0.2);
  RawPAData raw = constant_raw(7, 160, 0.0f, 0.1);
  CHECK_THROWS_AS(reconstruct(raw, det, grid), std::invalid_argument);

  RawPAData short_raw = constant_raw(8, 50, 0.0f, 0.1);  // window ends at 5 mm
  CHECK_THROWS_AS(reconstruct(short_raw, det, grid), PreconditionError);

  RawPAData ok = constant_raw(8, 160, 0.0f, 0.1);
  CHECK_THROWS_AS(reconstruct_slice(ok, det, grid, Axis::Z, -1), std::invalid_argument);
  CHECK_THROWS_AS(reconstruct_slice(ok, det, grid, Axis::Z, grid.dims[2]),
                  std::invalid_argument);
}

TEST_CASE("map_projection: maximum amplitude with sign, first occurrence wins") {
  Volume vol;
  vol.grid = make_grid({0, 0, 0}, 0.3, 0.2);  // 3x3x3
  vol.values.assign(vol.grid.voxel_count(), 0.0f);
  vol.at(0, 0, 0) = -3.0f;
  vol.at(0, 0, 1) = 2.0f;   // |-3| > |2| -> projected value is -3
  vol.at(1, 1, 0) = 2.0f;
  vol.at(1, 1, 2) = -2.0f;  // tie on magnitude -> earlier slice wins
  const Image2D map = map_projection(vol, Axis::Z);
  REQUIRE(map.rows == 3);
  REQUIRE(map.cols == 3);
  CHECK(map.at(0, 0) == -3.0f);
  CHECK(map.at(1, 1) == 2.0f);
  CHECK(map.at(2, 2) == 0.0f);

  // Axis layouts: X projection is (row=z, col=y).
  const Image2D mx = map_projection(vol, Axis::X);
  CHECK(mx.at(0, 0) == -3.0f);
}

TEST_CASE("extract_slice: layout across axes") {
  Volume vol;
  vol.grid = make_grid({0, 0, 0}, 0.3, 0.2);
  vol.values.assign(vol.grid.voxel_count(), 0.0f);
  vol.at(1, 2, 0) = 7.0f;  // (i=1, j=2, k=0)
  const Image2D z0 = extract_slice(vol, Axis::Z, 0);
  CHECK(z0.at(2, 1) == 7.0f);  // row=y=2, col=x=1
  const Image2D y2 = extract_slice(vol, Axis::Y, 2);
  CHECK(y2.at(0, 1) == 7.0f);  // row=z=0, col=x=1
  const Image2D x1 = extract_slice(vol, Axis::X, 1);
  CHECK(x1.at(0, 2) == 7.0f);  // row=z=0, col=y=2
  CHECK_THROWS_AS(extract_slice(vol, Axis::Z, 3), std::invalid_argument);
}
