#include <chrono>
#include <cstdio>

#include "paray/conv.hpp"
#include "paray/forward.hpp"
#include "paray/geometry.hpp"
#include "paray/phantom.hpp"
#include "paray/ubp.hpp"

using namespace paray;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void bench_conv() {
  const int C = 48, H = 256, W = 256, Wp = W + 2;
  const std::size_t padded = static_cast<std::size_t>(H + 2) * Wp;
  const int plo = Wp + 1, phi = static_cast<int>(padded) - Wp - 1;
  AlignedVecF X(padded * C, 0.1f), Y(padded * C, 0.0f), G(padded * C, 0.05f);
  AlignedVecF Wt(9 * static_cast<std::size_t>(C) * C, 0.01f), dW(Wt.size(), 0.0f);
  const double flops = 2.0 * 9 * C * C * (phi - plo);

  const char* path = conv_simd_enabled(C) ? "simd" : "reference";
  conv3x3_acc(Y.data(), X.data(), Wt.data(), C, Wp, plo, phi);  // warm up
  int reps = 30;
  auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r)
    conv3x3_acc(Y.data(), X.data(), Wt.data(), C, Wp, plo, phi);
  double dt = seconds_since(t0);
  std::printf("conv3x3_acc   (%s)      C=%d 256x256: %7.2f GFLOP/s\n", path, C,
              flops * reps / dt / 1e9);

  AlignedVecF bias(C, 0.01f);
  conv3x3_fused(Y.data(), X.data(), Wt.data(), bias.data(), true, C, Wp, plo, phi);
  t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r)
    conv3x3_fused(Y.data(), X.data(), Wt.data(), bias.data(), true, C, Wp, plo, phi);
  dt = seconds_since(t0);
  std::printf("conv3x3_fused (%s)      C=%d 256x256: %7.2f GFLOP/s\n", path, C,
              flops * reps / dt / 1e9);

  conv3x3_wgrad(dW.data(), X.data(), G.data(), C, Wp, plo, phi);
  t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r)
    conv3x3_wgrad(dW.data(), X.data(), G.data(), C, Wp, plo, phi);
  dt = seconds_since(t0);
  std::printf("conv3x3_wgrad (%s)      C=%d 256x256: %7.2f GFLOP/s\n", path, C,
              flops * reps / dt / 1e9);

  reps = 2;
  t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r)
    conv3x3_acc_reference(Y.data(), X.data(), Wt.data(), C, Wp, plo, phi);
  dt = seconds_since(t0);
  std::printf("conv3x3_acc   (reference) C=%d 256x256: %7.2f GFLOP/s\n", C,
              flops * reps / dt / 1e9);
}

void bench_forward_and_ubp() {
  const VolumeGrid grid = make_grid({0, 0, 0}, 3.2, 0.1);
  PhantomSpec spec;
  spec.spheres.push_back({{0.0, 0.0, 0.0}, 1.5, 1.0});
  const SourceVolume src = rasterize_phantom(spec, grid);
  const DetectorArray array = fibonacci_sphere_array(64, 15.0);
  const double c = kDefaultSoundSpeed;
  const double dt = grid.spacing / (2.0 * c);
  const int t_count = required_sample_count(grid, array, dt, c);

  auto t0 = std::chrono::steady_clock::now();
  const RawPAData raw_s = simulate_signals_serial(src, array, dt, t_count, c);
  const double fwd_serial = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  const RawPAData raw_p = simulate_signals(src, array, dt, t_count, c);
  const double fwd_par = seconds_since(t0);
  std::printf("simulate 64 det, 64^3 grid: serial %.3f s, parallel %.3f s (x%.2f)\n",
              fwd_serial, fwd_par, fwd_serial / fwd_par);

  t0 = std::chrono::steady_clock::now();
  const Volume v_s = reconstruct_serial(raw_s, array, grid);
  const double ubp_serial = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  const Volume v_p = reconstruct(raw_p, array, grid);
  const double ubp_par = seconds_since(t0);
  std::printf("reconstruct 64 det, 64^3:   serial %.3f s, parallel %.3f s (x%.2f)\n",
              ubp_serial, ubp_par, ubp_serial / ubp_par);

  bool identical = v_s.values == v_p.values && raw_s.samples == raw_p.samples;
  std::printf("serial/parallel outputs bitwise identical: %s\n",
              identical ? "yes" : "NO");
}

}  // namespace

int main() {
  bench_conv();
  bench_forward_and_ubp();
  return 0;
}
