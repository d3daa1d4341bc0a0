#include "paray/net.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace paray {
namespace {

void check_width(int C) {
  if (C < 1) throw std::invalid_argument("network width C must be >= 1");
}

}  // namespace

std::vector<float*> NetworkParams::blocks() {
  return {w1.data(), b1.data(), w2.data(), b2.data(), w3.data(), b3.data()};
}

std::vector<const float*> NetworkParams::blocks() const {
  return {w1.data(), b1.data(), w2.data(), b2.data(), w3.data(), b3.data()};
}

std::vector<std::size_t> NetworkParams::block_sizes() const {
  return {w1.size(), b1.size(), w2.size(), b2.size(), w3.size(), b3.size()};
}

NetworkParams zero_network(int C) {
  check_width(C);
  NetworkParams p;
  p.C = C;
  p.w1.assign(9 * static_cast<std::size_t>(C), 0.0f);
  p.b1.assign(C, 0.0f);
  p.w2.assign(9 * static_cast<std::size_t>(C) * C, 0.0f);
  p.b2.assign(C, 0.0f);
  p.w3.assign(C, 0.0f);
  p.b3.assign(1, 0.0f);
  return p;
}

NetworkParams init_network(int C, std::uint64_t seed) {
  NetworkParams p = zero_network(C);
  Rng rng(seed);
  const double bound1 = std::sqrt(6.0 / 9.0);
  const double bound2 = std::sqrt(6.0 / (9.0 * C));
  const double bound3 = std::sqrt(6.0 / C);
  for (float& w : p.w1) w = static_cast<float>(rng.uniform(-bound1, bound1));
  for (float& w : p.w2) w = static_cast<float>(rng.uniform(-bound2, bound2));
  for (float& w : p.w3) w = static_cast<float>(rng.uniform(-bound3, bound3));
  return p;
}

NetWorkspace::NetWorkspace(int C, int rows, int cols) {
  check_width(C);
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("NetWorkspace: image must be at least 1x1");
  C_ = C;
  rows_ = rows;
  cols_ = cols;
  Wp_ = cols + 2;
  padded_ = static_cast<std::size_t>(rows + 2) * Wp_;
  plo_ = Wp_ + 1;
  phi_ = static_cast<int>(padded_) - Wp_ - 1;
  x0_.assign(padded_, 0.0f);
  a1_.assign(padded_ * C, 0.0f);
  a2_.assign(padded_ * C, 0.0f);
  da_.assign(padded_ * C, 0.0f);
  dz_.assign(padded_ * C, 0.0f);
  wt_.assign(9 * static_cast<std::size_t>(C) * C, 0.0f);
}

void NetWorkspace::forward(const NetworkParams& params, const float* image,
                           float* out) {
  if (params.C != C_)
    throw std::invalid_argument("NetWorkspace: parameter width mismatch");
  const int C = C_;
  int off[9];
  {
    int k = 0;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) off[k++] = dy * Wp_ + dx;
  }

  for (int y = 0; y < rows_; ++y)
    for (int x = 0; x < cols_; ++x)
      x0_[static_cast<std::size_t>(y + 1) * Wp_ + (x + 1)] =
          image[static_cast<std::size_t>(y) * cols_ + x];

  // Layer 1: 1 -> C, then ReLU. Padding stays zero because only interior
  // pixels are written.
  for (int y = 0; y < rows_; ++y)
    for (int x = 0; x < cols_; ++x) {
      const int p = (y + 1) * Wp_ + (x + 1);
      float* a = a1_.data() + static_cast<std::size_t>(p) * C;
      for (int c = 0; c < C; ++c) a[c] = params.b1[c];
      for (int o = 0; o < 9; ++o) {
        const float xv = x0_[p + off[o]];
        const float* w = params.w1.data() + static_cast<std::size_t>(o) * C;
        for (int c = 0; c < C; ++c) a[c] += w[c] * xv;
      }
      for (int c = 0; c < C; ++c) a[c] = a[c] > 0.0f ? a[c] : 0.0f;
    }

  // Layer 2: C -> C with bias and ReLU fused into the kernel. The kernel
  // also writes the padding columns inside [plo, phi); nothing reads a2
  // outside the interior (layer 3 is 1x1), so they are left as-is.
  conv3x3_fused(a2_.data(), a1_.data(), params.w2.data(), params.b2.data(),
                /*relu=*/true, C, Wp_, plo_, phi_);

  // Layer 3: 1x1, C -> 1.
  for (int y = 0; y < rows_; ++y)
    for (int x = 0; x < cols_; ++x) {
      const std::size_t p = static_cast<std::size_t>(y + 1) * Wp_ + (x + 1);
      const float* a = a2_.data() + p * C;
      float acc = params.b3[0];
      for (int c = 0; c < C; ++c) acc += params.w3[c] * a[c];
      out[static_cast<std::size_t>(y) * cols_ + x] = acc;
    }
}

void NetWorkspace::backward(const NetworkParams& params, const float* dout,
                            NetworkParams& grads) {
  if (params.C != C_ || grads.C != C_)
    throw std::invalid_argument("NetWorkspace: parameter width mismatch");
  const int C = C_;
  int off[9];
  {
    int k = 0;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) off[k++] = dy * Wp_ + dx;
  }

  // Layer 3 gradients; dz_ holds d(loss)/d(z2) with zero padding so the
  // weight-gradient kernel can sweep the contiguous pixel range.
  double db3 = 0.0;
  for (int y = 0; y < rows_; ++y)
    for (int x = 0; x < cols_; ++x) {
      const std::size_t p = static_cast<std::size_t>(y + 1) * Wp_ + (x + 1);
      const float g = dout[static_cast<std::size_t>(y) * cols_ + x];
      db3 += g;
      const float* a = a2_.data() + p * C;
      float* dz = dz_.data() + p * C;
      for (int c = 0; c < C; ++c) {
        grads.w3[c] += g * a[c];
        dz[c] = a[c] > 0.0f ? g * params.w3[c] : 0.0f;
      }
    }
  grads.b3[0] += static_cast<float>(db3);

  // Layer 2 bias and weight gradients.
  for (int y = 0; y < rows_; ++y)
    for (int x = 0; x < cols_; ++x) {
      const std::size_t p = static_cast<std::size_t>(y + 1) * Wp_ + (x + 1);
      const float* dz = dz_.data() + p * C;
      for (int c = 0; c < C; ++c) grads.b2[c] += dz[c];
    }
  conv3x3_wgrad(grads.w2.data(), a1_.data(), dz_.data(), C, Wp_, plo_, phi_);

  // Data gradient through layer 2: convolution with the tap-mirrored,
  // channel-transposed weights.
  for (int o = 0; o < 9; ++o) {
    const float* src = params.w2.data() + static_cast<std::size_t>(8 - o) * C * C;
    float* dst = wt_.data() + static_cast<std::size_t>(o) * C * C;
    for (int ci = 0; ci < C; ++ci)
      for (int co = 0; co < C; ++co) dst[co * C + ci] = src[ci * C + co];
  }
  conv3x3_fused(da_.data(), dz_.data(), wt_.data(), nullptr, /*relu=*/false, C,
                Wp_, plo_, phi_);

  // Layer 1 gradients through its ReLU.
  std::vector<float> v(C);
  for (int y = 0; y < rows_; ++y)
    for (int x = 0; x < cols_; ++x) {
      const int p = (y + 1) * Wp_ + (x + 1);
      const float* a = a1_.data() + static_cast<std::size_t>(p) * C;
      const float* da = da_.data() + static_cast<std::size_t>(p) * C;
      for (int c = 0; c < C; ++c) {
        v[c] = a[c] > 0.0f ? da[c] : 0.0f;
        grads.b1[c] += v[c];
      }
      for (int o = 0; o < 9; ++o) {
        const float xv = x0_[p + off[o]];
        if (xv == 0.0f) continue;
        float* dw = grads.w1.data() + static_cast<std::size_t>(o) * C;
        for (int c = 0; c < C; ++c) dw[c] += xv * v[c];
      }
    }
}

Image2D net_forward(const NetworkParams& params, const Image2D& image) {
  for (float v : image.values)
    if (!std::isfinite(v))
      throw std::invalid_argument("net_forward: input contains non-finite values");
  NetWorkspace ws(params.C, image.rows, image.cols);
  Image2D out;
  out.rows = image.rows;
  out.cols = image.cols;
  out.pixel_spacing = image.pixel_spacing;
  out.values.resize(image.pixel_count());
  ws.forward(params, image.values.data(), out.values.data());
  return out;
}

AdamState::AdamState(const NetworkParams& shape)
    : m(zero_network(shape.C)), v(zero_network(shape.C)) {}

void AdamState::update(NetworkParams& params, const NetworkParams& grads,
                       double lr) {
  ++step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  auto pb = params.blocks();
  auto gb = grads.blocks();
  auto mb = m.blocks();
  auto vb = v.blocks();
  const auto sizes = params.block_sizes();
  for (std::size_t b = 0; b < pb.size(); ++b)
    for (std::size_t i = 0; i < sizes[b]; ++i) {
      const double g = gb[b][i];
      const double mi = beta1 * mb[b][i] + (1.0 - beta1) * g;
      const double vi = beta2 * vb[b][i] + (1.0 - beta2) * g * g;
      mb[b][i] = static_cast<float>(mi);
      vb[b][i] = static_cast<float>(vi);
      pb[b][i] -= static_cast<float>(lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps));
    }
}

}  // namespace paray
