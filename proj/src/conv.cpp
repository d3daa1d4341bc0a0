#include "paray/conv.hpp"

#include <algorithm>

#ifdef __AVX512F__
#include <immintrin.h>
#endif

namespace paray {
namespace {

inline void tap_offsets(int Wp, int off[9]) {
  int k = 0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) off[k++] = dy * Wp + dx;
}

#ifdef __AVX512F__

// C = 48: one output pixel is exactly three zmm registers. Eight pixels are
// blocked together (24 accumulator registers) and every weight row streams
// through once per block as broadcast-FMA. Overwrite mode seeds the
// accumulators with the bias (or zero) instead of loading Y, which roughly
// halves the Y-side memory traffic.
template <bool kAccumulate, bool kRelu>
void conv48_body(float* Y, const float* X, const float* W, const float* bias,
                 int Wp, int plo, int phi) {
  constexpr int C = 48;
  int off[9];
  tap_offsets(Wp, off);
  __m512 b0 = _mm512_setzero_ps(), b1 = b0, b2 = b0;
  if (bias != nullptr) {
    b0 = _mm512_loadu_ps(bias);
    b1 = _mm512_loadu_ps(bias + 16);
    b2 = _mm512_loadu_ps(bias + 32);
  }
  const __m512 zero = _mm512_setzero_ps();
  int p = plo;
  for (; p + 8 <= phi; p += 8) {
    __m512 acc[8][3];
    for (int j = 0; j < 8; ++j) {
      if constexpr (kAccumulate) {
        const float* y = Y + static_cast<std::size_t>(p + j) * C;
        acc[j][0] = _mm512_loadu_ps(y);
        acc[j][1] = _mm512_loadu_ps(y + 16);
        acc[j][2] = _mm512_loadu_ps(y + 32);
      } else {
        acc[j][0] = b0;
        acc[j][1] = b1;
        acc[j][2] = b2;
      }
    }
    for (int o = 0; o < 9; ++o) {
      const float* xb = X + static_cast<std::ptrdiff_t>(p + off[o]) * C;
      const float* w = W + static_cast<std::size_t>(o) * C * C;
      for (int ci = 0; ci < C; ++ci) {
        const __m512 w0 = _mm512_loadu_ps(w + ci * C);
        const __m512 w1 = _mm512_loadu_ps(w + ci * C + 16);
        const __m512 w2 = _mm512_loadu_ps(w + ci * C + 32);
        for (int j = 0; j < 8; ++j) {
          const __m512 b = _mm512_set1_ps(xb[static_cast<std::size_t>(j) * C + ci]);
          acc[j][0] = _mm512_fmadd_ps(w0, b, acc[j][0]);
          acc[j][1] = _mm512_fmadd_ps(w1, b, acc[j][1]);
          acc[j][2] = _mm512_fmadd_ps(w2, b, acc[j][2]);
        }
      }
    }
    for (int j = 0; j < 8; ++j) {
      float* y = Y + static_cast<std::size_t>(p + j) * C;
      if constexpr (kRelu) {
        _mm512_storeu_ps(y, _mm512_max_ps(acc[j][0], zero));
        _mm512_storeu_ps(y + 16, _mm512_max_ps(acc[j][1], zero));
        _mm512_storeu_ps(y + 32, _mm512_max_ps(acc[j][2], zero));
      } else {
        _mm512_storeu_ps(y, acc[j][0]);
        _mm512_storeu_ps(y + 16, acc[j][1]);
        _mm512_storeu_ps(y + 32, acc[j][2]);
      }
    }
  }
  for (; p < phi; ++p) {
    float* y = Y + static_cast<std::size_t>(p) * C;
    __m512 a0, a1, a2;
    if constexpr (kAccumulate) {
      a0 = _mm512_loadu_ps(y);
      a1 = _mm512_loadu_ps(y + 16);
      a2 = _mm512_loadu_ps(y + 32);
    } else {
      a0 = b0;
      a1 = b1;
      a2 = b2;
    }
    for (int o = 0; o < 9; ++o) {
      const float* xb = X + static_cast<std::ptrdiff_t>(p + off[o]) * C;
      const float* w = W + static_cast<std::size_t>(o) * C * C;
      for (int ci = 0; ci < C; ++ci) {
        const __m512 b = _mm512_set1_ps(xb[ci]);
        a0 = _mm512_fmadd_ps(_mm512_loadu_ps(w + ci * C), b, a0);
        a1 = _mm512_fmadd_ps(_mm512_loadu_ps(w + ci * C + 16), b, a1);
        a2 = _mm512_fmadd_ps(_mm512_loadu_ps(w + ci * C + 32), b, a2);
      }
    }
    if constexpr (kRelu) {
      a0 = _mm512_max_ps(a0, zero);
      a1 = _mm512_max_ps(a1, zero);
      a2 = _mm512_max_ps(a2, zero);
    }
    _mm512_storeu_ps(y, a0);
    _mm512_storeu_ps(y + 16, a1);
    _mm512_storeu_ps(y + 32, a2);
  }
}

// Weight gradients with the accumulators pinned in registers: for each
// (tap, 8-channel input tile) the corresponding eight dW rows live in 24 zmm
// registers while a chunk of pixels streams through. Pixels are chunked so
// the G and X slices of a chunk stay cache-resident across the 54 sweeps.
void conv48_wgrad(float* dW, const float* X, const float* G, int Wp, int plo,
                  int phi) {
  constexpr int C = 48;
  int off[9];
  tap_offsets(Wp, off);
  // ~8 rows of a 256-wide image per chunk: 2 maps * 8 * 258 px * 192 B ~ 0.8 MB.
  const int chunk = std::max(1024, 8 * Wp);
  for (int c0 = plo; c0 < phi; c0 += chunk) {
    const int c1 = std::min(phi, c0 + chunk);
    for (int o = 0; o < 9; ++o) {
      const float* Xo = X + static_cast<std::ptrdiff_t>(off[o]) * C;
      float* dwo = dW + static_cast<std::size_t>(o) * C * C;
      for (int t = 0; t < C; t += 8) {
        __m512 acc[8][3];
        for (int j = 0; j < 8; ++j) {
          const float* r = dwo + static_cast<std::size_t>(t + j) * C;
          acc[j][0] = _mm512_loadu_ps(r);
          acc[j][1] = _mm512_loadu_ps(r + 16);
          acc[j][2] = _mm512_loadu_ps(r + 32);
        }
        for (int p = c0; p < c1; ++p) {
          const float* g = G + static_cast<std::size_t>(p) * C;
          const __m512 g0 = _mm512_loadu_ps(g);
          const __m512 g1 = _mm512_loadu_ps(g + 16);
          const __m512 g2 = _mm512_loadu_ps(g + 32);
          const float* x = Xo + static_cast<std::size_t>(p) * C + t;
          for (int j = 0; j < 8; ++j) {
            const __m512 b = _mm512_set1_ps(x[j]);
            acc[j][0] = _mm512_fmadd_ps(g0, b, acc[j][0]);
            acc[j][1] = _mm512_fmadd_ps(g1, b, acc[j][1]);
            acc[j][2] = _mm512_fmadd_ps(g2, b, acc[j][2]);
          }
        }
        for (int j = 0; j < 8; ++j) {
          float* r = dwo + static_cast<std::size_t>(t + j) * C;
          _mm512_storeu_ps(r, acc[j][0]);
          _mm512_storeu_ps(r + 16, acc[j][1]);
          _mm512_storeu_ps(r + 32, acc[j][2]);
        }
      }
    }
  }
}

#endif  // __AVX512F__

}  // namespace

bool conv_simd_enabled(int C) {
#ifdef __AVX512F__
  return C == 48;
#else
  (void)C;
  return false;
#endif
}

void conv3x3_acc_reference(float* Y, const float* X, const float* W, int C,
                           int Wp, int plo, int phi) {
  int off[9];
  tap_offsets(Wp, off);
  for (int p = plo; p < phi; ++p) {
    float* y = Y + static_cast<std::size_t>(p) * C;
    for (int o = 0; o < 9; ++o) {
      const float* xb = X + static_cast<std::ptrdiff_t>(p + off[o]) * C;
      const float* w = W + static_cast<std::size_t>(o) * C * C;
      for (int ci = 0; ci < C; ++ci) {
        const float xv = xb[ci];
        const float* wr = w + ci * C;
        for (int co = 0; co < C; ++co) y[co] += wr[co] * xv;
      }
    }
  }
}

void conv3x3_fused_reference(float* Y, const float* X, const float* W,
                             const float* bias, bool relu, int C, int Wp,
                             int plo, int phi) {
  for (int p = plo; p < phi; ++p) {
    float* y = Y + static_cast<std::size_t>(p) * C;
    for (int co = 0; co < C; ++co) y[co] = bias != nullptr ? bias[co] : 0.0f;
  }
  conv3x3_acc_reference(Y, X, W, C, Wp, plo, phi);
  if (relu)
    for (int p = plo; p < phi; ++p) {
      float* y = Y + static_cast<std::size_t>(p) * C;
      for (int co = 0; co < C; ++co) y[co] = y[co] > 0.0f ? y[co] : 0.0f;
    }
}

void conv3x3_wgrad_reference(float* dW, const float* X, const float* G, int C,
                             int Wp, int plo, int phi) {
  int off[9];
  tap_offsets(Wp, off);
  for (int p = plo; p < phi; ++p) {
    const float* g = G + static_cast<std::size_t>(p) * C;
    for (int o = 0; o < 9; ++o) {
      const float* xb = X + static_cast<std::ptrdiff_t>(p + off[o]) * C;
      float* dwo = dW + static_cast<std::size_t>(o) * C * C;
      for (int ci = 0; ci < C; ++ci) {
        const float xv = xb[ci];
        float* row = dwo + ci * C;
        for (int co = 0; co < C; ++co) row[co] += g[co] * xv;
      }
    }
  }
}

void conv3x3_acc(float* Y, const float* X, const float* W, int C, int Wp,
                 int plo, int phi) {
#ifdef __AVX512F__
  if (C == 48) {
    conv48_body<true, false>(Y, X, W, nullptr, Wp, plo, phi);
    return;
  }
#endif
  conv3x3_acc_reference(Y, X, W, C, Wp, plo, phi);
}

void conv3x3_fused(float* Y, const float* X, const float* W, const float* bias,
                   bool relu, int C, int Wp, int plo, int phi) {
#ifdef __AVX512F__
  if (C == 48) {
    if (relu)
      conv48_body<false, true>(Y, X, W, bias, Wp, plo, phi);
    else
      conv48_body<false, false>(Y, X, W, bias, Wp, plo, phi);
    return;
  }
#endif
  conv3x3_fused_reference(Y, X, W, bias, relu, C, Wp, plo, phi);
}

void conv3x3_wgrad(float* dW, const float* X, const float* G, int C, int Wp,
                   int plo, int phi) {
#ifdef __AVX512F__
  if (C == 48) {
    conv48_wgrad(dW, X, G, Wp, plo, phi);
    return;
  }
#endif
  conv3x3_wgrad_reference(dW, X, G, C, Wp, plo, phi);
}

}  // namespace paray
