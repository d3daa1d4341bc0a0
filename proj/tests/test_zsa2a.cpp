#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "paray/forward.hpp"
#include "paray/geometry.hpp"
#include "paray/phantom.hpp"
#include "paray/zsa2a.hpp"

using namespace paray;

namespace {

Image2D make_image(int rows, int cols, std::uint64_t seed) {
  Image2D img;
  img.rows = rows;
  img.cols = cols;
  img.values.resize(img.pixel_count());
  Rng rng(seed);
  for (float& v : img.values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return img;
}

Image2D one_pixel(float v) {
  Image2D img;
  img.rows = img.cols = 1;
  img.values = {v};
  return img;
}

}  // namespace

TEST_CASE("loss: hand-checked single-pixel example") {
  // C = 1 network with g(3) = 1 and g(1) = 0:
  // relu(x - 1) -> {2, 0}; 0.5 * relu -> {1, 0}; identity head.
  NetworkParams p = zero_network(1);
  p.w1[4] = 1.0f;
  p.b1[0] = -1.0f;
  p.w2[4] = 0.5f;
  p.w3[0] = 1.0f;

  const LossParts parts = loss(p, one_pixel(3.0f), one_pixel(1.0f));
  // residual = 1/2 * ((3-1-1)^2 + (1-0-3)^2) = 2.5
  // consistency = ((3-1) - (1-0))^2 = 1
  CHECK(parts.residual == 2.5);
  CHECK(parts.consistency == 1.0);
  CHECK(parts.total == 3.5);
}

TEST_CASE("loss: zero network reduces to plain image differences") {
  const Image2D r1 = make_image(6, 5, 1), r2 = make_image(6, 5, 2);
  const LossParts parts = loss(zero_network(4), r1, r2);
  double msq = 0.0;
  for (std::size_t p = 0; p < r1.values.size(); ++p) {
    const double d = static_cast<double>(r1.values[p]) - r2.values[p];
    msq += d * d;
  }
  msq /= static_cast<double>(r1.values.size());
  CHECK(parts.residual == doctest::Approx(msq).epsilon(1e-12));
  CHECK(parts.consistency == doctest::Approx(msq).epsilon(1e-12));

  const LossParts same = loss(zero_network(4), r1, r1);
  CHECK(same.total == 0.0);
}

TEST_CASE("loss: K = 2 pair average equals the two-term formulation bitwise") {
  const Image2D r1 = make_image(9, 7, 3), r2 = make_image(9, 7, 4);
  const NetworkParams p = init_network(3, 42);
  const LossParts parts = loss(p, r1, r2);

  const Image2D f1 = net_forward(p, r1), f2 = net_forward(p, r2);
  const std::size_t n = r1.values.size();
  double A = 0.0, B = 0.0, C = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    const double d1 = static_cast<double>(r1.values[q]) - f1.values[q] - r2.values[q];
    const double e = (static_cast<double>(r1.values[q]) - f1.values[q]) -
                     (static_cast<double>(r2.values[q]) - f2.values[q]);
    A += d1 * d1;
    C += e * e;
  }
  for (std::size_t q = 0; q < n; ++q) {
    const double d2 = static_cast<double>(r2.values[q]) - f2.values[q] - r1.values[q];
    B += d2 * d2;
  }
  const double nd = static_cast<double>(n);
  CHECK(parts.residual == (A / nd + B / nd) / 2.0);
  CHECK(parts.consistency == C / nd);
}

TEST_CASE("loss: generalizes to K = 3 and 4 with finite values") {
  std::vector<Image2D> recons;
  for (int k = 0; k < 4; ++k) recons.push_back(make_image(8, 8, 10 + k));
  const NetworkParams p = init_network(4, 7);
  for (int K : {3, 4}) {
    const std::vector<Image2D> subset(recons.begin(), recons.begin() + K);
    const LossParts parts = loss(p, subset);
    CHECK(std::isfinite(parts.total));
    CHECK(parts.residual >= 0.0);
    CHECK(parts.consistency >= 0.0);
    CHECK(parts.total == parts.residual + parts.consistency);
  }
  CHECK_THROWS_AS(loss(p, std::vector<Image2D>{recons[0]}), std::invalid_argument);
}

TEST_CASE("gradients: zero at the trivial optimum") {
  const Image2D r = make_image(6, 6, 5);
  NetworkParams g = zero_network(3);
  const LossParts parts = gradients(zero_network(3), r, r, g);
  CHECK(parts.total == 0.0);
  for (const float* block : g.blocks()) CHECK(block != nullptr);
  const auto blocks = g.blocks();
  const auto sizes = g.block_sizes();
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (std::size_t i = 0; i < sizes[b]; ++i) CHECK(blocks[b][i] == 0.0f);
}

TEST_CASE("gradients: finite differences confirm every parameter") {
  const Image2D r1 = make_image(8, 8, 21), r2 = make_image(8, 8, 22);
  NetworkParams p = init_network(3, 99);
  NetworkParams g = zero_network(3);
  gradients(p, r1, r2, g);

  const auto pb = p.blocks();
  const auto gb = g.blocks();
  const auto sizes = p.block_sizes();
  const double h = 1e-3;
  double gmax = 0.0;
  for (std::size_t b = 0; b < gb.size(); ++b)
    for (std::size_t i = 0; i < sizes[b]; ++i)
      gmax = std::max(gmax, std::abs(static_cast<double>(gb[b][i])));
  REQUIRE(gmax > 0.0);

  int checked = 0;
  for (std::size_t b = 0; b < pb.size(); ++b)
    for (std::size_t i = 0; i < sizes[b]; ++i) {
      const float saved = pb[b][i];
      pb[b][i] = static_cast<float>(saved + h);
      const double up = loss(p, r1, r2).total;
      pb[b][i] = static_cast<float>(saved - h);
      const double dn = loss(p, r1, r2).total;
      pb[b][i] = saved;
      const double fd = (up - dn) / (2.0 * h);
      const double an = gb[b][i];
      CHECK(std::abs(fd - an) <= 2e-3 * std::abs(an) + 2e-4 * gmax);
      ++checked;
    }
  CHECK(checked == static_cast<int>(p.parameter_count()));
}

TEST_CASE("train: learning-rate schedule and loss bookkeeping") {
  std::vector<Image2D> recons = {make_image(6, 6, 31), make_image(6, 6, 32)};
  TrainConfig cfg;
  cfg.iterations = 2001;
  cfg.lr = 0.01;
  cfg.step_size = 1000;
  cfg.gamma = 0.6;
  cfg.channels = 1;
  cfg.seed = 5;
  std::vector<LossRecord> log;
  const TrainedModel model = train(recons, cfg, &log);
  REQUIRE(log.size() == 2001);
  CHECK(log[0].iteration == 0);
  CHECK(log[0].lr == 0.01);
  CHECK(log[999].lr == 0.01);
  CHECK(log[1000].lr == doctest::Approx(0.006).epsilon(1e-12));
  CHECK(log[2000].lr == doctest::Approx(0.0036).epsilon(1e-12));
  for (const LossRecord& r : log) {
    CHECK(std::isfinite(r.total));
    CHECK(r.total == r.residual + r.consistency);
  }
  CHECK(model.rows == 6);
  CHECK(model.cols == 6);
  CHECK(model.norm_std > 0.0);
}

TEST_CASE("train: loss decreases on a small problem and is deterministic") {
  std::vector<Image2D> recons = {make_image(16, 16, 41), make_image(16, 16, 42)};
  TrainConfig cfg;
  cfg.iterations = 200;
  cfg.channels = 8;
  cfg.seed = 77;
  std::vector<LossRecord> log;
  const TrainedModel a = train(recons, cfg, &log);
  CHECK(log.back().total < log.front().total);

  const TrainedModel b = train(recons, cfg);
  CHECK(a.params.w1 == b.params.w1);
  CHECK(a.params.w2 == b.params.w2);
  CHECK(a.params.b3 == b.params.b3);
  CHECK(a.norm_mean == b.norm_mean);
}

TEST_CASE("train: non-finite loss raises TrainingDivergedError") {
  Image2D bad = make_image(4, 4, 1);
  bad.values[5] = std::numeric_limits<float>::quiet_NaN();
  std::vector<Image2D> recons = {bad, make_image(4, 4, 2)};
  TrainConfig cfg;
  cfg.iterations = 10;
  cfg.channels = 1;
  try {
    train(recons, cfg);
    FAIL("expected TrainingDivergedError");
  } catch (const TrainingDivergedError& e) {
    CHECK(e.iteration == 0);
  }
}

TEST_CASE("train: configuration validation") {
  std::vector<Image2D> recons = {make_image(4, 4, 1), make_image(4, 4, 2)};
  TrainConfig cfg;
  cfg.channels = 1;
  cfg.iterations = 0;
  CHECK_THROWS_AS(train(recons, cfg), std::invalid_argument);
  cfg.iterations = 5;
  cfg.lr = 0.0;
  CHECK_THROWS_AS(train(recons, cfg), std::invalid_argument);
  cfg.lr = 0.01;
  cfg.k_subsets = 1;
  CHECK_THROWS_AS(train(recons, cfg), std::invalid_argument);
  cfg.k_subsets = 2;
  cfg.channels = 0;
  CHECK_THROWS_AS(train(recons, cfg), std::invalid_argument);
  cfg.channels = 1;
  std::vector<Image2D> mismatched = {make_image(4, 4, 1), make_image(5, 4, 2)};
  CHECK_THROWS_AS(train(mismatched, cfg), std::invalid_argument);
}

TEST_CASE("remove_artifacts: exact decomposition and zero-network identity") {
  const Image2D recon = make_image(12, 10, 55);

  TrainedModel zero;
  zero.params = zero_network(4);
  zero.norm_mean = 0.25;
  zero.norm_std = 2.0;
  zero.rows = 12;
  zero.cols = 10;
  auto [clean0, art0] = remove_artifacts(zero, recon);
  for (std::size_t p = 0; p < recon.values.size(); ++p) {
    CHECK(clean0.values[p] == recon.values[p]);
    CHECK(art0.values[p] == 0.0f);
  }

  std::vector<Image2D> recons = {make_image(12, 10, 56), make_image(12, 10, 57)};
  TrainConfig cfg;
  cfg.iterations = 50;
  cfg.channels = 4;
  const TrainedModel model = train(recons, cfg);
  auto [clean, artifact] = remove_artifacts(model, recon);
  for (std::size_t p = 0; p < recon.values.size(); ++p)
    CHECK(clean.values[p] + artifact.values[p] == recon.values[p]);

  const Image2D wrong = make_image(10, 12, 58);
  CHECK_THROWS_AS(remove_artifacts(model, wrong), std::invalid_argument);
}

TEST_CASE("run_zsa2a_slice: end-to-end smoke test on a small scene") {
  const VolumeGrid grid = make_grid({0, 0, 0}, 1.6, 0.2);  // 16^3
  PhantomSpec spec;
  spec.spheres.push_back({{0.3, -0.2, 0.0}, 0.5, 1.0});
  const SourceVolume src = rasterize_phantom(spec, grid);
  const DetectorArray det = fibonacci_sphere_array(48, 8.0);
  const double dt = 0.1 / kDefaultSoundSpeed;
  const int n = required_sample_count(grid, det, dt, kDefaultSoundSpeed);
  const RawPAData raw = simulate_signals(src, det, dt, n, kDefaultSoundSpeed);

  TrainConfig cfg;
  cfg.iterations = 20;
  cfg.channels = 8;
  cfg.seed = 3;
  const ZsResult res = run_zsa2a_slice(raw, det, grid, Axis::Z, 8, 32, cfg);
  REQUIRE(res.recon.rows == 16);
  REQUIRE(res.clean.rows == 16);
  CHECK(res.log.size() == 20);
  for (std::size_t p = 0; p < res.recon.values.size(); ++p) {
    CHECK(std::isfinite(res.clean.values[p]));
    CHECK(res.clean.values[p] + res.artifact.values[p] == res.recon.values[p]);
  }

  // Subset size must leave the draw non-trivial.
  CHECK_THROWS_AS(run_zsa2a_slice(raw, det, grid, Axis::Z, 8, 48, cfg),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_zsa2a_slice(raw, det, grid, Axis::Z, 8, 0, cfg),
                  std::invalid_argument);
}
