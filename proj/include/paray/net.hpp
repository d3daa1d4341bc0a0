#pragma once

#include <cstdint>
#include <vector>

#include "paray/conv.hpp"
#include "paray/types.hpp"

namespace paray {

// The artifact predictor: conv3x3 (1 -> C) + ReLU, conv3x3 (C -> C) + ReLU,
// conv1x1 (C -> 1). 21,313 parameters at the default C = 48.
//
// Weight layouts (taps o in (dy, dx) raster order as in conv.hpp):
//   w1[o * C + c]            first layer, tap o, output channel c
//   w2[o * C * C + ci * C + co]  second layer, input ci to output co at tap o
//   w3[c]                    final 1x1 mixing weights
struct NetworkParams {
  int C = 0;
  AlignedVecF w1, b1;  // 9*C, C
  AlignedVecF w2, b2;  // 9*C*C, C
  AlignedVecF w3, b3;  // C, 1

  std::size_t parameter_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size();
  }
  // Flat views over all six blocks, in serialization order.
  std::vector<float*> blocks();
  std::vector<const float*> blocks() const;
  std::vector<std::size_t> block_sizes() const;
};

// All-zero parameter set of the given width.
NetworkParams zero_network(int C);

// He-uniform kernels (uniform on +-sqrt(6 / fan_in)), zero biases,
// deterministic in (C, seed).
NetworkParams init_network(int C, std::uint64_t seed);

// Scratch buffers plus cached activations for one image size; reused across
// training iterations to avoid reallocation.
class NetWorkspace {
 public:
  NetWorkspace(int C, int rows, int cols);

  // Runs the network on a rows x cols image (row-major, unpadded) and caches
  // the hidden activations for a subsequent backward() call.
  void forward(const NetworkParams& params, const float* image, float* out);

  // Accumulates d(loss)/d(params) into grads given d(loss)/d(output) for the
  // image of the latest forward() call.
  void backward(const NetworkParams& params, const float* dout,
                NetworkParams& grads);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

 private:
  int C_, rows_, cols_, Wp_, plo_, phi_;
  std::size_t padded_;
  AlignedVecF x0_;        // 1 x padded input
  AlignedVecF a1_, a2_;   // C x padded post-ReLU activations
  AlignedVecF da_, dz_;   // C x padded gradient scratch
  AlignedVecF wt_;        // 9*C*C transposed/mirrored weights for the
                          // data-gradient convolution
};

// Convenience wrapper; validates that the input is finite.
Image2D net_forward(const NetworkParams& params, const Image2D& image);

// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
struct AdamState {
  explicit AdamState(const NetworkParams& shape);
  void update(NetworkParams& params, const NetworkParams& grads, double lr);

  NetworkParams m, v;
  long step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

}  // namespace paray
