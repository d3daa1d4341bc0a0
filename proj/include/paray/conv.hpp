#pragma once

#include <cstddef>
#include <new>
#include <vector>

namespace paray {

// 64-byte-aligned allocator for feature maps and weights; the SIMD kernels
// lose roughly half their throughput on under-aligned buffers.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t alignment = 64;

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(alignment)));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t(alignment));
  }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using AlignedVecF = std::vector<float, AlignedAllocator<float>>;

// 3x3 multi-channel convolution primitives on zero-padded feature maps.
//
// Layout: a map with C channels on an H x W image is stored channel-fastest
// over (H+2) x (W+2) padded pixels: value(c, p) = buf[p * C + c], where the
// padded pixel index of image pixel (y, x) is p = (y+1) * Wp + (x+1) with
// Wp = W + 2. Padding pixels must hold zeros. The taps of the 3x3 stencil
// are o = 0..8 in (dy, dx) raster order, i.e. pixel offset
// off(o) = (o/3 - 1) * Wp + (o%3 - 1).
//
// Weights: W[o * C * C + ci * C + co] maps input channel ci to output
// channel co at tap o.

// Y[co, p] += sum_{o, ci} W[o, ci, co] * X[ci, p + off(o)] for p in [plo, phi).
void conv3x3_acc(float* Y, const float* X, const float* W, int C, int Wp,
                 int plo, int phi);

// Overwriting variant: Y[co, p] = bias[co] + sum_{o, ci} ... , clamped at
// zero when relu is set. bias may be null (treated as zero). Skipping the
// initial load of Y is substantially faster than conv3x3_acc, so the
// network uses this form for both its forward and data-gradient passes.
void conv3x3_fused(float* Y, const float* X, const float* W, const float* bias,
                   bool relu, int C, int Wp, int plo, int phi);

// dW[o, ci, co] += sum_p X[ci, p + off(o)] * G[co, p] for p in [plo, phi).
void conv3x3_wgrad(float* dW, const float* X, const float* G, int C, int Wp,
                   int plo, int phi);

// Plain-loop reference implementations, used to validate the SIMD path and
// as the fallback for channel counts it does not cover.
void conv3x3_acc_reference(float* Y, const float* X, const float* W, int C,
                           int Wp, int plo, int phi);
void conv3x3_fused_reference(float* Y, const float* X, const float* W,
                             const float* bias, bool relu, int C, int Wp,
                             int plo, int phi);
void conv3x3_wgrad_reference(float* dW, const float* X, const float* G, int C,
                             int Wp, int plo, int phi);

// True when the kernels dispatch to the AVX-512 path for this channel count
// on this build.
bool conv_simd_enabled(int C);

}  // namespace paray
