#include "paray/zsa2a.hpp"

#include <cmath>
#include <cstring>
#include <exception>
#include <memory>
#include <stdexcept>
#include <string>

#include "paray/ubp.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace paray {
namespace {

void check_config(const TrainConfig& c) {
  if (c.iterations < 1) throw std::invalid_argument("TrainConfig: iterations must be >= 1");
  if (!(c.lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (c.step_size < 1) throw std::invalid_argument("TrainConfig: step_size must be >= 1");
  if (!(c.gamma > 0.0 && c.gamma <= 1.0))
    throw std::invalid_argument("TrainConfig: gamma must be in (0, 1]");
  if (c.k_subsets < 2) throw std::invalid_argument("TrainConfig: k_subsets must be >= 2");
  if (c.channels < 1) throw std::invalid_argument("TrainConfig: channels must be >= 1");
}

void check_shapes(const std::vector<Image2D>& recons) {
  if (recons.size() < 2)
    throw std::invalid_argument("need at least 2 reconstructions");
  for (const Image2D& r : recons)
    if (r.rows != recons[0].rows || r.cols != recons[0].cols)
      throw std::invalid_argument("reconstruction shapes differ");
}

// Shared forward/loss/backward evaluator holding one workspace per image so
// that cached activations survive until the backward pass.
class Evaluator {
 public:
  Evaluator(int C, int rows, int cols, int k)
      : npix_(static_cast<std::size_t>(rows) * cols) {
    for (int i = 0; i < k; ++i)
      ws_.push_back(std::make_unique<NetWorkspace>(C, rows, cols));
    f_.assign(k, std::vector<float>(npix_));
    dy_.assign(k, std::vector<float>(npix_));
  }

  // images: K same-shape pixel buffers. Computes the pair-averaged loss and,
  // when grads is non-null, accumulates d(total)/d(params) into it.
  LossParts run(const NetworkParams& params, const std::vector<const float*>& images,
                NetworkParams* grads) {
    const int k = static_cast<int>(ws_.size());
    for (int i = 0; i < k; ++i) ws_[i]->forward(params, images[i], f_[i].data());
    if (grads)
      for (auto& d : dy_) std::memset(d.data(), 0, npix_ * sizeof(float));

    const int npairs = k * (k - 1);
    const double inv = 1.0 / (static_cast<double>(npix_) * npairs);
    double res_sum = 0.0, con_sum = 0.0;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        const float* ni = images[i];
        const float* nj = images[j];
        const float* fi = f_[i].data();
        const float* fj = f_[j].data();
        double res = 0.0, con = 0.0;
        for (std::size_t p = 0; p < npix_; ++p) {
          const double d = static_cast<double>(ni[p]) - fi[p] - nj[p];
          const double e = (static_cast<double>(ni[p]) - fi[p]) -
                           (static_cast<double>(nj[p]) - fj[p]);
          res += d * d;
          con += e * e;
          if (grads) {
            dy_[i][p] += static_cast<float>(-2.0 * d * inv - 2.0 * e * inv);
            dy_[j][p] += static_cast<float>(2.0 * e * inv);
          }
        }
        res_sum += res / static_cast<double>(npix_);
        con_sum += con / static_cast<double>(npix_);
      }

    LossParts parts;
    parts.residual = res_sum / npairs;
    parts.consistency = con_sum / npairs;
    parts.total = parts.residual + parts.consistency;

    if (grads)
      for (int i = 0; i < k; ++i) ws_[i]->backward(params, dy_[i].data(), *grads);
    return parts;
  }

 private:
  std::vector<std::unique_ptr<NetWorkspace>> ws_;
  std::vector<std::vector<float>> f_, dy_;
  std::size_t npix_;
};

std::vector<const float*> pixel_ptrs(const std::vector<Image2D>& recons) {
  std::vector<const float*> p;
  for (const Image2D& r : recons) p.push_back(r.values.data());
  return p;
}

}  // namespace

LossParts loss(const NetworkParams& params, const std::vector<Image2D>& recons) {
  check_shapes(recons);
  Evaluator ev(params.C, recons[0].rows, recons[0].cols,
               static_cast<int>(recons.size()));
  return ev.run(params, pixel_ptrs(recons), nullptr);
}

LossParts loss(const NetworkParams& params, const Image2D& r1, const Image2D& r2) {
  return loss(params, std::vector<Image2D>{r1, r2});
}

LossParts gradients(const NetworkParams& params, const std::vector<Image2D>& recons,
                    NetworkParams& grads) {
  check_shapes(recons);
  grads = zero_network(params.C);
  Evaluator ev(params.C, recons[0].rows, recons[0].cols,
               static_cast<int>(recons.size()));
  return ev.run(params, pixel_ptrs(recons), &grads);
}

LossParts gradients(const NetworkParams& params, const Image2D& r1,
                    const Image2D& r2, NetworkParams& grads) {
  return gradients(params, std::vector<Image2D>{r1, r2}, grads);
}

TrainedModel train(const std::vector<Image2D>& recons, const TrainConfig& config,
                   std::vector<LossRecord>* log) {
  check_config(config);
  check_shapes(recons);
  const int k = static_cast<int>(recons.size());
  const int rows = recons[0].rows, cols = recons[0].cols;
  const std::size_t npix = recons[0].pixel_count();

  // Joint zero-mean / unit-variance normalization over all K inputs.
  double sum = 0.0, sumsq = 0.0;
  for (const Image2D& r : recons)
    for (float v : r.values) {
      sum += v;
      sumsq += static_cast<double>(v) * v;
    }
  const double n_all = static_cast<double>(npix) * k;
  const double mean = sum / n_all;
  double stddev = std::sqrt(std::max(0.0, sumsq / n_all - mean * mean));
  if (stddev == 0.0) stddev = 1.0;

  std::vector<std::vector<float>> norm(k, std::vector<float>(npix));
  std::vector<const float*> inputs;
  for (int i = 0; i < k; ++i) {
    for (std::size_t p = 0; p < npix; ++p)
      norm[i][p] = static_cast<float>((recons[i].values[p] - mean) / stddev);
    inputs.push_back(norm[i].data());
  }

  NetworkParams params = init_network(config.channels, config.seed);
  NetworkParams grads = zero_network(config.channels);
  AdamState adam(params);
  Evaluator ev(config.channels, rows, cols, k);

  for (int it = 0; it < config.iterations; ++it) {
    const double lr = config.lr * std::pow(config.gamma, it / config.step_size);
    {
      const auto gb = grads.blocks();
      const auto bs = grads.block_sizes();
      for (std::size_t bi = 0; bi < gb.size(); ++bi)
        std::memset(gb[bi], 0, bs[bi] * sizeof(float));
    }
    const LossParts parts = ev.run(params, inputs, &grads);
    if (!std::isfinite(parts.total))
      throw TrainingDivergedError(
          "training diverged: non-finite loss at iteration " + std::to_string(it), it);
    if (log) log->push_back({it, lr, parts.residual, parts.consistency, parts.total});
    adam.update(params, grads, lr);
  }

  TrainedModel model;
  model.params = std::move(params);
  model.norm_mean = mean;
  model.norm_std = stddev;
  model.config = config;
  model.rows = rows;
  model.cols = cols;
  return model;
}

std::pair<Image2D, Image2D> remove_artifacts(const TrainedModel& model,
                                             const Image2D& recon) {
  if (model.rows > 0 && (recon.rows != model.rows || recon.cols != model.cols))
    throw std::invalid_argument("remove_artifacts: image shape differs from the "
                                "shape the model was trained on");
  Image2D norm = recon;
  for (float& v : norm.values)
    v = static_cast<float>((v - model.norm_mean) / model.norm_std);
  Image2D pred = net_forward(model.params, norm);

  Image2D artifact = recon, clean = recon;
  for (std::size_t p = 0; p < recon.values.size(); ++p) {
    const float r = recon.values[p];
    float a = static_cast<float>(model.norm_std * pred.values[p]);
    float c = r - a;
    a = r - c;  // re-derive so that c + a == r holds bitwise
    if (c + a != r) {
      c = r;
      a = 0.0f;
    }
    clean.values[p] = c;
    artifact.values[p] = a;
  }
  return {std::move(clean), std::move(artifact)};
}

namespace {

std::vector<SubsetIndices> draw_subsets(const TrainConfig& config, int n, int m) {
  if (m < 1 || m >= n)
    throw std::invalid_argument("subset size m must satisfy 1 <= m < N, got m=" +
                                std::to_string(m) + ", N=" + std::to_string(n));
  std::vector<SubsetIndices> subs;
  for (int i = 0; i < config.k_subsets; ++i)
    subs.push_back(random_subset(n, m, config.seed + i));
  return subs;
}

}  // namespace

ZsResult run_zsa2a_slice(const RawPAData& raw, const DetectorArray& array,
                         const VolumeGrid& grid, Axis axis, int index, int m,
                         const TrainConfig& config, int threads) {
  check_config(config);
  const auto subs = draw_subsets(config, raw.n_channels, m);

  std::vector<Image2D> recons;
  for (const SubsetIndices& s : subs) {
    auto [sraw, sarr] = subset_raw(raw, array, s);
    recons.push_back(reconstruct_slice(sraw, sarr, grid, axis, index, threads));
  }

  ZsResult res;
  res.model = train(recons, config, &res.log);
  res.recon = reconstruct_slice(raw, array, grid, axis, index, threads);
  auto [clean, artifact] = remove_artifacts(res.model, res.recon);
  res.clean = std::move(clean);
  res.artifact = std::move(artifact);
  return res;
}

ZsResult run_zsa2a_map(const RawPAData& raw, const DetectorArray& array,
                       const VolumeGrid& grid, Axis axis, int m,
                       const TrainConfig& config, int threads) {
  check_config(config);
  const auto subs = draw_subsets(config, raw.n_channels, m);

  std::vector<Image2D> recons;
  for (const SubsetIndices& s : subs) {
    auto [sraw, sarr] = subset_raw(raw, array, s);
    recons.push_back(map_projection(reconstruct(sraw, sarr, grid, threads), axis));
  }

  ZsResult res;
  res.model = train(recons, config, &res.log);
  res.recon = map_projection(reconstruct(raw, array, grid, threads), axis);
  auto [clean, artifact] = remove_artifacts(res.model, res.recon);
  res.clean = std::move(clean);
  res.artifact = std::move(artifact);
  return res;
}

Volume run_zsa2a_volume(const RawPAData& raw, const DetectorArray& array,
                        const VolumeGrid& grid, Axis axis, int m,
                        const TrainConfig& config, int threads,
                        Volume* recon_out) {
  check_config(config);
  const auto subs = draw_subsets(config, raw.n_channels, m);

  std::vector<Volume> sub_volumes;
  for (const SubsetIndices& s : subs) {
    auto [sraw, sarr] = subset_raw(raw, array, s);
    sub_volumes.push_back(reconstruct(sraw, sarr, grid, threads));
  }
  Volume full = reconstruct(raw, array, grid, threads);

  Volume out = full;
  const int n_slices = grid.dims[static_cast<int>(axis)];
  const int nthreads = resolve_threads(threads);
  (void)nthreads;
  std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
#endif
  for (int s = 0; s < n_slices; ++s) {
    try {
      std::vector<Image2D> recons;
      for (const Volume& v : sub_volumes)
        recons.push_back(extract_slice(v, axis, s));
      TrainConfig slice_config = config;
      slice_config.seed = config.seed ^ static_cast<std::uint64_t>(s);
      TrainedModel model = train(recons, slice_config);
      const Image2D full_slice = extract_slice(full, axis, s);
      auto [clean, artifact] = remove_artifacts(model, full_slice);
      (void)artifact;
      // Write the cleaned plane back; slices are disjoint, so no locking.
      for (int r = 0; r < clean.rows; ++r)
        for (int c = 0; c < clean.cols; ++c) {
          int i = 0, j = 0, kk = 0;
          switch (axis) {
            case Axis::Z: i = c; j = r; kk = s; break;
            case Axis::Y: i = c; j = s; kk = r; break;
            case Axis::X: i = s; j = c; kk = r; break;
          }
          out.at(i, j, kk) = clean.at(r, c);
        }
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  if (recon_out) *recon_out = std::move(full);
  return out;
}

}  // namespace paray
