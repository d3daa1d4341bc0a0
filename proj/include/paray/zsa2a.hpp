#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "paray/geometry.hpp"
#include "paray/net.hpp"
#include "paray/perturb.hpp"
#include "paray/types.hpp"

namespace paray {

struct TrainConfig {
  int iterations = 3000;
  double lr = 0.01;
  int step_size = 1000;   // lr is multiplied by gamma every step_size iterations
  double gamma = 0.6;
  std::uint64_t seed = 0;
  int k_subsets = 2;
  int channels = 48;
};

struct LossParts {
  double total = 0.0, residual = 0.0, consistency = 0.0;
};

struct LossRecord {
  int iteration = 0;
  double lr = 0.0, residual = 0.0, consistency = 0.0, total = 0.0;
};

// Final parameters plus the input-normalization record needed to apply them.
struct TrainedModel {
  NetworkParams params;
  double norm_mean = 0.0, norm_std = 1.0;
  TrainConfig config;
  int rows = 0, cols = 0;  // shape the model was trained on
};

// Residual + consistency loss over K >= 2 reconstructions, averaged over all
// ordered pairs (i, j), i != j. Norms are mean-square (sum of squared pixel
// differences / pixel count). At K = 2 this reduces exactly to
//   residual    = 1/2 (||r1 - g(r1) - r2||^2 + ||r2 - g(r2) - r1||^2)
//   consistency = ||(r1 - g(r1)) - (r2 - g(r2))||^2.
LossParts loss(const NetworkParams& params, const std::vector<Image2D>& recons);
LossParts loss(const NetworkParams& params, const Image2D& r1, const Image2D& r2);

// Analytic gradients of the total loss; returns the loss evaluated along the
// way. ReLU subgradient at exactly zero is taken as zero.
LossParts gradients(const NetworkParams& params, const std::vector<Image2D>& recons,
                    NetworkParams& grads);
LossParts gradients(const NetworkParams& params, const Image2D& r1,
                    const Image2D& r2, NetworkParams& grads);

// Full-image Adam training on jointly normalized inputs. Appends one record
// per iteration to *log when given. Throws TrainingDivergedError if the loss
// becomes non-finite.
TrainedModel train(const std::vector<Image2D>& recons, const TrainConfig& config,
                   std::vector<LossRecord>* log = nullptr);

// artifact = denormalized g(normalized recon); clean = recon - artifact,
// with clean + artifact == recon exactly, pixel for pixel.
std::pair<Image2D, Image2D> remove_artifacts(const TrainedModel& model,
                                             const Image2D& recon);

struct ZsResult {
  Image2D recon;      // full-data reconstruction (unprocessed)
  Image2D clean;
  Image2D artifact;
  TrainedModel model;
  std::vector<LossRecord> log;
};

// Full pipeline on one grid plane: draw k_subsets random m-detector subsets
// (subset i uses seed config.seed + i), reconstruct each, train, reconstruct
// the full data, and remove artifacts.
ZsResult run_zsa2a_slice(const RawPAData& raw, const DetectorArray& array,
                         const VolumeGrid& grid, Axis axis, int index, int m,
                         const TrainConfig& config, int threads = 0);

// Same pipeline on the maximum-amplitude projection along `axis`.
ZsResult run_zsa2a_map(const RawPAData& raw, const DetectorArray& array,
                       const VolumeGrid& grid, Axis axis, int m,
                       const TrainConfig& config, int threads = 0);

// Volume pipeline: subsets are drawn once on the raw data, the subset and
// full volumes are reconstructed, then every slice along `axis` is cleaned
// independently with a fresh network (slice seed = config.seed XOR index).
// If recon_out is non-null it receives the unprocessed full reconstruction.
Volume run_zsa2a_volume(const RawPAData& raw, const DetectorArray& array,
                        const VolumeGrid& grid, Axis axis, int m,
                        const TrainConfig& config, int threads = 0,
                        Volume* recon_out = nullptr);

}  // namespace paray
