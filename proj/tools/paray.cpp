#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "paray/forward.hpp"
#include "paray/geometry.hpp"
#include "paray/io.hpp"
#include "paray/metrics.hpp"
#include "paray/perturb.hpp"
#include "paray/phantom.hpp"
#include "paray/ubp.hpp"
#include "paray/zsa2a.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace paray;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPrecondition = 3;
constexpr int kExitDiverged = 4;

struct ExperimentConfig {
  PhantomSpec phantom;
  bool has_phantom = false;
  int array_n = 256;
  double array_radius = 30.0;
  int subsample_k = 0;      // 0 = keep the full array
  bool hemisphere = false;
  Vec3 grid_center{0, 0, 0};
  double half_extent = 6.4;
  double spacing = 0.1;
  double dt = 0.0;          // 0 = spacing / (2 c)
  int t_count = 0;          // 0 = auto from geometry
  double sound_speed = kDefaultSoundSpeed;
  TrainConfig train;
  int subset_size = 0;
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string reference;    // optional image base for metric comparisons
  std::string truth;        // optional truth volume base for CNR masks
};

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig c;
  try {
    if (j.contains("phantom")) {
      c.has_phantom = true;
      if (j["phantom"].is_string()) {
        fs::path p = j["phantom"].get<std::string>();
        if (p.is_relative()) p = fs::path(path).parent_path() / p;
        c.phantom = io::load_phantom_spec(p.string());
      } else {
        const fs::path tmp = fs::temp_directory_path() / "paray_phantom.json";
        std::ofstream(tmp) << j["phantom"].dump();
        c.phantom = io::load_phantom_spec(tmp.string());
      }
    }
    if (j.contains("array")) {
      const json& a = j["array"];
      c.array_n = a.value("n", c.array_n);
      c.array_radius = a.value("radius", c.array_radius);
      c.subsample_k = a.value("subsample_k", 0);
      c.hemisphere = a.value("hemisphere", false);
    }
    if (j.contains("grid")) {
      const json& g = j["grid"];
      if (g.contains("center"))
        c.grid_center = {g["center"][0].get<double>(), g["center"][1].get<double>(),
                         g["center"][2].get<double>()};
      c.half_extent = g.value("half_extent", c.half_extent);
      c.spacing = g.value("spacing", c.spacing);
    }
    if (j.contains("forward")) {
      const json& fw = j["forward"];
      c.dt = fw.value("dt", 0.0);
      c.t_count = fw.value("t_count", 0);
      c.sound_speed = fw.value("sound_speed", kDefaultSoundSpeed);
    }
    if (j.contains("train")) {
      const json& t = j["train"];
      c.train.iterations = t.value("iterations", c.train.iterations);
      c.train.lr = t.value("lr", c.train.lr);
      c.train.step_size = t.value("step_size", c.train.step_size);
      c.train.gamma = t.value("gamma", c.train.gamma);
      c.train.k_subsets = t.value("k_subsets", c.train.k_subsets);
      c.train.channels = t.value("channels", c.train.channels);
    }
    c.subset_size = j.value("subset_size", 0);
    c.seed = j.value("seed", std::uint64_t{0});
    c.out = j.value("out", std::string("out"));
    c.reference = j.value("reference", std::string());
    c.truth = j.value("truth", std::string());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  if (c.array_n < 1 || c.array_radius <= 0.0)
    throw ConfigError("config: array.n must be >= 1 and array.radius > 0");
  if (c.half_extent <= 0.0 || c.spacing <= 0.0)
    throw ConfigError("config: grid.half_extent and grid.spacing must be > 0");
  return c;
}

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
  std::string slice;
  std::string map_axis;
  int trials = 200;
  std::optional<int> subset_size;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_config = true) {
  auto* copt = cmd->add_option("--config", o.config_path, "experiment config JSON");
  if (need_config) copt->required();
  cmd->add_option("--seed", o.seed, "master seed (overrides config)");
  cmd->add_option("--threads", o.threads, "worker threads (0 = PARAY_THREADS/auto)");
  cmd->add_option("--out", o.out, "output directory (overrides config)");
  cmd->add_option("--slice", o.slice, "grid plane as AXIS:INDEX, e.g. z:64 or z:center");
  cmd->add_option("--map", o.map_axis, "maximum-amplitude projection axis (x|y|z)");
  cmd->add_option("--trials", o.trials, "perturbation trials for cvmap");
  cmd->add_option("--subset-size", o.subset_size, "detector subset size m");
}

ExperimentConfig effective_config(const CommonOpts& o) {
  ExperimentConfig c = load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out = o.out;
  if (o.subset_size) c.subset_size = *o.subset_size;
  c.train.seed = c.seed;
  return c;
}

Axis parse_axis(const std::string& s) {
  if (s == "x" || s == "X") return Axis::X;
  if (s == "y" || s == "Y") return Axis::Y;
  if (s == "z" || s == "Z") return Axis::Z;
  throw ConfigError("invalid axis '" + s + "' (expected x, y, or z)");
}

std::pair<Axis, int> parse_slice(const std::string& s, const VolumeGrid& grid) {
  const auto colon = s.find(':');
  if (colon == std::string::npos)
    throw ConfigError("invalid --slice '" + s + "' (expected AXIS:INDEX)");
  const Axis axis = parse_axis(s.substr(0, colon));
  const std::string idx = s.substr(colon + 1);
  int index;
  if (idx == "center") {
    index = grid.dims[static_cast<int>(axis)] / 2;
  } else {
    try {
      index = std::stoi(idx);
    } catch (const std::exception&) {
      throw ConfigError("invalid --slice index '" + idx + "'");
    }
  }
  return {axis, index};
}

DetectorArray build_array(const ExperimentConfig& c) {
  DetectorArray a = fibonacci_sphere_array(c.array_n, c.array_radius);
  if (c.subsample_k > 0) a = subsample_uniform(a, c.subsample_k);
  if (c.hemisphere) a = filter_to_hemisphere(a);
  return a;
}

VolumeGrid build_grid(const ExperimentConfig& c) {
  return make_grid(c.grid_center, c.half_extent, c.spacing);
}

std::string out_base(const ExperimentConfig& c, const std::string& name) {
  fs::create_directories(c.out);
  return (fs::path(c.out) / name).string();
}

int cmd_simulate(const CommonOpts& o) {
  const ExperimentConfig c = effective_config(o);
  if (!c.has_phantom) throw ConfigError("config: simulate needs a phantom");
  const VolumeGrid grid = build_grid(c);
  const DetectorArray array = build_array(c);
  const SourceVolume truth = rasterize_phantom(c.phantom, grid);

  const double dt = c.dt > 0.0 ? c.dt : c.spacing / (2.0 * c.sound_speed);
  ForwardOptions fopts;
  fopts.threads = o.threads;
  const int t_count =
      c.t_count > 0 ? c.t_count
                    : required_sample_count(grid, array, dt, c.sound_speed, fopts);
  const RawPAData raw =
      simulate_signals(truth, array, dt, t_count, c.sound_speed, fopts);

  io::save_array(out_base(c, "array.json"), array);
  io::save_volume(out_base(c, "truth"), truth);
  io::save_raw(out_base(c, "raw"), raw);
  std::cout << "simulate: " << array.size() << " detectors, " << t_count
            << " samples, grid " << grid.dims[0] << "^3 -> " << c.out << "\n";
  return kExitOk;
}

// Loads the simulate outputs that downstream commands start from.
void load_stage(const ExperimentConfig& c, RawPAData& raw, DetectorArray& array) {
  raw = io::load_raw(out_base(c, "raw"));
  array = io::load_array(out_base(c, "array.json"));
}

int cmd_reconstruct(const CommonOpts& o) {
  const ExperimentConfig c = effective_config(o);
  const VolumeGrid grid = build_grid(c);
  RawPAData raw;
  DetectorArray array;
  load_stage(c, raw, array);

  std::string suffix;
  if (c.subset_size > 0) {
    const SubsetIndices s = random_subset(raw.n_channels, c.subset_size, c.seed);
    auto [sraw, sarr] = subset_raw(raw, array, s);
    raw = std::move(sraw);
    array = std::move(sarr);
    suffix = "_subset";
  }

  if (!o.slice.empty()) {
    const auto [axis, index] = parse_slice(o.slice, grid);
    const Image2D img = reconstruct_slice(raw, array, grid, axis, index, o.threads);
    io::save_image(out_base(c, "recon_slice" + suffix), img);
    io::export_pgm16(out_base(c, "recon_slice" + suffix + ".pgm"), img);
    std::cout << "reconstruct: slice -> " << out_base(c, "recon_slice" + suffix) << "\n";
    return kExitOk;
  }

  const Volume vol = reconstruct(raw, array, grid, o.threads);
  io::save_volume(out_base(c, "recon" + suffix), vol);
  if (!o.map_axis.empty()) {
    const Image2D map = map_projection(vol, parse_axis(o.map_axis));
    io::save_image(out_base(c, "recon_map" + suffix), map);
    io::export_pgm16(out_base(c, "recon_map" + suffix + ".pgm"), map);
  }
  std::cout << "reconstruct: volume -> " << out_base(c, "recon" + suffix) << "\n";
  return kExitOk;
}

int cmd_cvmap(const CommonOpts& o) {
  const ExperimentConfig c = effective_config(o);
  if (c.subset_size < 1)
    throw ConfigError("cvmap needs subset_size (config) or --subset-size");
  if (o.trials < 2) throw ConfigError("cvmap needs --trials >= 2");
  const VolumeGrid grid = build_grid(c);
  RawPAData raw;
  DetectorArray array;
  load_stage(c, raw, array);

  const auto [axis, index] =
      parse_slice(o.slice.empty() ? "z:center" : o.slice, grid);
  const CVMap map = cv_analysis(raw, array, grid, axis, index, c.subset_size,
                                o.trials, c.seed, o.threads);
  io::save_cvmap(out_base(c, "cvmap"), map);
  io::export_cvmap_pgm16(out_base(c, "cvmap"), map);
  std::cout << "cvmap: " << o.trials << " trials of m=" << c.subset_size
            << " -> " << out_base(c, "cvmap") << "\n";
  return kExitOk;
}

void emit_metrics(const ExperimentConfig& c, const Image2D& recon,
                  const Image2D& clean, Axis axis, int index) {
  if (c.reference.empty()) return;
  const Image2D ref = io::load_image(c.reference);
  std::optional<std::pair<RegionMask, RegionMask>> masks;
  if (!c.truth.empty()) {
    const Volume truth = io::load_volume(c.truth);
    masks = default_masks(extract_slice(truth, axis, index));
  }
  const std::string csv = (fs::path(c.out) / "metrics.csv").string();
  for (const auto& [name, img] :
       {std::pair<std::string, const Image2D*>{"unprocessed", &recon},
        {"clean", &clean}}) {
    MetricsReport r;
    r.reference_id = c.reference;
    r.test_id = name;
    r.mse = scaled_mse(ref, *img);
    r.psnr_db = psnr(ref, *img);
    if (masks) {
      r.cnr = cnr(*img, masks->first, masks->second);
      r.has_cnr = true;
    }
    io::append_metrics_csv(csv, r);
    io::save_metrics_json((fs::path(c.out) / ("metrics_" + name + ".json")).string(), r);
    std::cout << "metrics[" << name << "]: psnr=" << r.psnr_db << " dB";
    if (r.has_cnr) std::cout << " cnr=" << r.cnr;
    std::cout << "\n";
  }
}

int cmd_clean(const CommonOpts& o) {
  const ExperimentConfig c = effective_config(o);
  if (c.subset_size < 1)
    throw ConfigError("clean needs subset_size (config) or --subset-size");
  const VolumeGrid grid = build_grid(c);
  RawPAData raw;
  DetectorArray array;
  load_stage(c, raw, array);

  if (!o.slice.empty()) {
    const auto [axis, index] = parse_slice(o.slice, grid);
    const ZsResult res = run_zsa2a_slice(raw, array, grid, axis, index,
                                         c.subset_size, c.train, o.threads);
    io::save_image(out_base(c, "recon_slice"), res.recon);
    io::save_image(out_base(c, "clean_slice"), res.clean);
    io::save_image(out_base(c, "artifact_slice"), res.artifact);
    io::export_pgm16(out_base(c, "clean_slice.pgm"), res.clean);
    io::save_model(out_base(c, "model"), res.model);
    io::save_loss_csv(out_base(c, "loss.csv"), res.log);
    emit_metrics(c, res.recon, res.clean, axis, index);
    std::cout << "clean: slice -> " << out_base(c, "clean_slice") << "\n";
    return kExitOk;
  }

  if (!o.map_axis.empty()) {
    const Axis axis = parse_axis(o.map_axis);
    const ZsResult res =
        run_zsa2a_map(raw, array, grid, axis, c.subset_size, c.train, o.threads);
    io::save_image(out_base(c, "recon_map"), res.recon);
    io::save_image(out_base(c, "clean_map"), res.clean);
    io::save_image(out_base(c, "artifact_map"), res.artifact);
    io::export_pgm16(out_base(c, "clean_map.pgm"), res.clean);
    io::save_model(out_base(c, "model"), res.model);
    io::save_loss_csv(out_base(c, "loss.csv"), res.log);
    std::cout << "clean: map -> " << out_base(c, "clean_map") << "\n";
    return kExitOk;
  }

  Volume recon;
  const Volume clean = run_zsa2a_volume(raw, array, grid, Axis::Z, c.subset_size,
                                        c.train, o.threads, &recon);
  io::save_volume(out_base(c, "recon"), recon);
  io::save_volume(out_base(c, "clean"), clean);
  std::cout << "clean: volume -> " << out_base(c, "clean") << "\n";
  return kExitOk;
}

int cmd_metrics(const std::string& ref_base, const std::string& test_base,
                const std::string& truth_base, const std::string& out_path,
                const std::string& slice) {
  const Image2D ref = io::load_image(ref_base);
  const Image2D test = io::load_image(test_base);
  MetricsReport r;
  r.reference_id = ref_base;
  r.test_id = test_base;
  r.mse = scaled_mse(ref, test);
  r.psnr_db = psnr(ref, test);
  if (!truth_base.empty()) {
    Image2D truth_img;
    try {
      const Volume truth = io::load_volume(truth_base);
      const VolumeGrid& g = truth.grid;
      Axis axis = Axis::Z;
      int index = g.dims[2] / 2;
      if (!slice.empty()) {
        const auto parsed = parse_slice(slice, g);
        axis = parsed.first;
        index = parsed.second;
      }
      truth_img = extract_slice(truth, axis, index);
    } catch (const std::runtime_error&) {
      truth_img = io::load_image(truth_base);
    }
    const auto masks = default_masks(truth_img);
    r.cnr = cnr(test, masks.first, masks.second);
    r.has_cnr = true;
  }
  if (!out_path.empty()) io::save_metrics_json(out_path, r);
  std::cout << "psnr_db=" << r.psnr_db << " mse=" << r.mse;
  if (r.has_cnr) std::cout << " cnr=" << r.cnr;
  std::cout << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse-array photoacoustic simulation, back-projection "
               "reconstruction, and self-supervised artifact removal"};
  app.require_subcommand(1);

  CommonOpts sim_o, rec_o, cv_o, clean_o;
  auto* sim = app.add_subcommand("simulate", "rasterize the phantom and simulate detector traces");
  add_common(sim, sim_o);
  auto* rec = app.add_subcommand("reconstruct", "back-project raw data to a volume, slice, or MAP");
  add_common(rec, rec_o);
  auto* cvm = app.add_subcommand("cvmap", "coefficient-of-variation map over random detector subsets");
  add_common(cvm, cv_o);
  auto* cln = app.add_subcommand("clean", "train the artifact predictor and remove artifacts");
  add_common(cln, clean_o);

  std::string m_ref, m_test, m_truth, m_out, m_slice;
  auto* met = app.add_subcommand("metrics", "PSNR/CNR between two saved images");
  met->add_option("--reference", m_ref, "reference image base path")->required();
  met->add_option("--test", m_test, "test image base path")->required();
  met->add_option("--truth", m_truth, "truth volume/image base for CNR masks");
  met->add_option("--out", m_out, "metrics JSON output path");
  met->add_option("--slice", m_slice, "truth slice as AXIS:INDEX");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_o);
    if (rec->parsed()) return cmd_reconstruct(rec_o);
    if (cvm->parsed()) return cmd_cvmap(cv_o);
    if (cln->parsed()) return cmd_clean(clean_o);
    if (met->parsed()) return cmd_metrics(m_ref, m_test, m_truth, m_out, m_slice);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainingDivergedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition error: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const std::invalid_argument& e) {
    std::cerr << "precondition error: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
