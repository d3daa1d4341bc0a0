#include "paray/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace paray::io {
namespace {

using nlohmann::json;

void write_f32(const std::string& path, const float* data, std::size_t n) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 4));
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<float> read_f32(const std::string& path, std::size_t expected) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::vector<float> data(expected);
  f.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(expected * 4));
  if (static_cast<std::size_t>(f.gcount()) != expected * 4)
    throw std::runtime_error("short read: " + path);
  return data;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  return json::parse(f);
}

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3)
    throw std::runtime_error("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

void save_raw(const std::string& base, const RawPAData& raw) {
  write_f32(base + ".f32", raw.samples.data(), raw.samples.size());
  write_json(base + ".json", json{{"kind", "raw"},
                                  {"n_channels", raw.n_channels},
                                  {"n_samples", raw.n_samples},
                                  {"dt", raw.dt},
                                  {"t0", raw.t0},
                                  {"sound_speed", raw.sound_speed}});
}

RawPAData load_raw(const std::string& base) {
  const json j = read_json(base + ".json");
  RawPAData raw;
  raw.n_channels = j.at("n_channels").get<int>();
  raw.n_samples = j.at("n_samples").get<int>();
  raw.dt = j.at("dt").get<double>();
  raw.t0 = j.at("t0").get<double>();
  raw.sound_speed = j.at("sound_speed").get<double>();
  raw.samples = read_f32(base + ".f32",
                         static_cast<std::size_t>(raw.n_channels) * raw.n_samples);
  return raw;
}

void save_volume(const std::string& base, const Volume& volume) {
  write_f32(base + ".f32", volume.values.data(), volume.values.size());
  write_json(base + ".json",
             json{{"kind", "volume"},
                  {"dims", volume.grid.dims},
                  {"spacing", volume.grid.spacing},
                  {"origin", vec3_to_json(volume.grid.origin)}});
}

Volume load_volume(const std::string& base) {
  const json j = read_json(base + ".json");
  Volume v;
  const auto dims = j.at("dims");
  v.grid.dims = {dims[0].get<int>(), dims[1].get<int>(), dims[2].get<int>()};
  v.grid.spacing = j.at("spacing").get<double>();
  v.grid.origin = vec3_from_json(j.at("origin"));
  v.values = read_f32(base + ".f32", v.grid.voxel_count());
  return v;
}

void save_image(const std::string& base, const Image2D& image) {
  write_f32(base + ".f32", image.values.data(), image.values.size());
  write_json(base + ".json", json{{"kind", "image"},
                                  {"rows", image.rows},
                                  {"cols", image.cols},
                                  {"pixel_spacing", image.pixel_spacing}});
}

Image2D load_image(const std::string& base) {
  const json j = read_json(base + ".json");
  Image2D img;
  img.rows = j.at("rows").get<int>();
  img.cols = j.at("cols").get<int>();
  img.pixel_spacing = j.at("pixel_spacing").get<double>();
  img.values = read_f32(base + ".f32", img.pixel_count());
  return img;
}

void save_cvmap(const std::string& base, const CVMap& map) {
  write_f32(base + ".f32", map.cv.data(), map.cv.size());
  write_f32(base + ".mean.f32", map.mean.data(), map.mean.size());
  write_json(base + ".json", json{{"kind", "cvmap"},
                                  {"rows", map.rows},
                                  {"cols", map.cols},
                                  {"n_samples", map.n_samples},
                                  {"pixel_spacing", map.pixel_spacing}});
}

CVMap load_cvmap(const std::string& base) {
  const json j = read_json(base + ".json");
  CVMap map;
  map.rows = j.at("rows").get<int>();
  map.cols = j.at("cols").get<int>();
  map.n_samples = j.at("n_samples").get<int>();
  map.pixel_spacing = j.at("pixel_spacing").get<double>();
  map.cv = read_f32(base + ".f32", map.pixel_count());
  map.mean = read_f32(base + ".mean.f32", map.pixel_count());
  map.defined.assign(map.pixel_count(), 0);
  for (std::size_t p = 0; p < map.cv.size(); ++p)
    map.defined[p] = std::isnan(map.cv[p]) ? 0 : 1;
  return map;
}

void save_array(const std::string& path, const DetectorArray& array) {
  json pos = json::array(), nor = json::array();
  for (const Vec3& p : array.positions) pos.push_back(vec3_to_json(p));
  for (const Vec3& n : array.normals) nor.push_back(vec3_to_json(n));
  write_json(path, json{{"kind", "detector_array"},
                        {"radius", array.radius},
                        {"patch_area", array.patch_area},
                        {"positions", pos},
                        {"normals", nor}});
}

DetectorArray load_array(const std::string& path) {
  const json j = read_json(path);
  DetectorArray a;
  a.radius = j.at("radius").get<double>();
  a.patch_area = j.at("patch_area").get<double>();
  for (const json& p : j.at("positions")) a.positions.push_back(vec3_from_json(p));
  for (const json& n : j.at("normals")) a.normals.push_back(vec3_from_json(n));
  if (a.positions.size() != a.normals.size())
    throw std::runtime_error("detector array: positions/normals length mismatch");
  return a;
}

void save_model(const std::string& base, const TrainedModel& model) {
  std::vector<float> flat;
  const auto blocks = model.params.blocks();
  const auto sizes = model.params.block_sizes();
  for (std::size_t b = 0; b < blocks.size(); ++b)
    flat.insert(flat.end(), blocks[b], blocks[b] + sizes[b]);
  write_f32(base + ".f32", flat.data(), flat.size());
  write_json(base + ".json",
             json{{"kind", "model"},
                  {"C", model.params.C},
                  {"rows", model.rows},
                  {"cols", model.cols},
                  {"norm_mean", model.norm_mean},
                  {"norm_std", model.norm_std},
                  {"config",
                   {{"iterations", model.config.iterations},
                    {"lr", model.config.lr},
                    {"step_size", model.config.step_size},
                    {"gamma", model.config.gamma},
                    {"seed", model.config.seed},
                    {"k_subsets", model.config.k_subsets},
                    {"channels", model.config.channels}}}});
}

TrainedModel load_model(const std::string& base) {
  const json j = read_json(base + ".json");
  TrainedModel model;
  model.params = zero_network(j.at("C").get<int>());
  model.rows = j.at("rows").get<int>();
  model.cols = j.at("cols").get<int>();
  model.norm_mean = j.at("norm_mean").get<double>();
  model.norm_std = j.at("norm_std").get<double>();
  const json& c = j.at("config");
  model.config.iterations = c.at("iterations").get<int>();
  model.config.lr = c.at("lr").get<double>();
  model.config.step_size = c.at("step_size").get<int>();
  model.config.gamma = c.at("gamma").get<double>();
  model.config.seed = c.at("seed").get<std::uint64_t>();
  model.config.k_subsets = c.at("k_subsets").get<int>();
  model.config.channels = c.at("channels").get<int>();
  const std::vector<float> flat =
      read_f32(base + ".f32", model.params.parameter_count());
  std::size_t pos = 0;
  const auto blocks = model.params.blocks();
  const auto sizes = model.params.block_sizes();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    std::copy_n(flat.data() + pos, sizes[b], blocks[b]);
    pos += sizes[b];
  }
  return model;
}

void save_loss_csv(const std::string& path, const std::vector<LossRecord>& log) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "iteration,lr,residual,consistency,total\n";
  f.precision(9);
  for (const LossRecord& r : log)
    f << r.iteration << ',' << r.lr << ',' << r.residual << ',' << r.consistency
      << ',' << r.total << "\n";
}

namespace {

void write_pgm16(const std::string& path, const std::vector<std::uint16_t>& px,
                 int rows, int cols) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "P5\n" << cols << " " << rows << "\n65535\n";
  for (std::uint16_t v : px) {
    // PGM stores 16-bit samples big-endian.
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    f.write(bytes, 2);
  }
}

}  // namespace

void export_pgm16(const std::string& path, const Image2D& image) {
  const auto [mn_it, mx_it] =
      std::minmax_element(image.values.begin(), image.values.end());
  const double mn = *mn_it, mx = *mx_it;
  const double scale = mx > mn ? 65535.0 / (mx - mn) : 0.0;
  std::vector<std::uint16_t> px(image.pixel_count());
  for (std::size_t p = 0; p < px.size(); ++p)
    px[p] = static_cast<std::uint16_t>(
        std::lround((image.values[p] - mn) * scale));
  write_pgm16(path, px, image.rows, image.cols);
  write_json(path + ".json",
             json{{"kind", "pgm16"}, {"min", mn}, {"max", mx}, {"maxval", 65535}});
}

void export_cvmap_pgm16(const std::string& base, const CVMap& map) {
  double mx = 0.0;
  for (std::size_t p = 0; p < map.cv.size(); ++p)
    if (map.defined[p]) mx = std::max(mx, static_cast<double>(map.cv[p]));
  const double scale = mx > 0.0 ? 65535.0 / mx : 0.0;
  std::vector<std::uint16_t> px(map.pixel_count(), 0), valid(map.pixel_count(), 0);
  for (std::size_t p = 0; p < px.size(); ++p)
    if (map.defined[p]) {
      px[p] = static_cast<std::uint16_t>(
          std::lround(std::min(65535.0, map.cv[p] * scale)));
      valid[p] = 65535;
    }
  write_pgm16(base + ".pgm", px, map.rows, map.cols);
  write_pgm16(base + ".valid.pgm", valid, map.rows, map.cols);
  write_json(base + ".pgm.json",
             json{{"kind", "cvmap_pgm16"}, {"min", 0.0}, {"max", mx}, {"maxval", 65535}});
}

namespace {

json report_to_json(const MetricsReport& report) {
  const double psnr_out =
      std::isinf(report.psnr_db) ? kPsnrCapDb : report.psnr_db;
  json j{{"reference", report.reference_id},
         {"test", report.test_id},
         {"psnr_db", psnr_out},
         {"mse", report.mse}};
  if (report.has_cnr) j["cnr"] = report.cnr;
  return j;
}

}  // namespace

void save_metrics_json(const std::string& path, const MetricsReport& report) {
  write_json(path, report_to_json(report));
}

void append_metrics_csv(const std::string& path, const MetricsReport& report) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream f(path, std::ios::app);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  if (fresh) f << "reference,test,psnr_db,mse,cnr\n";
  const double psnr_out =
      std::isinf(report.psnr_db) ? kPsnrCapDb : report.psnr_db;
  f.precision(9);
  f << report.reference_id << ',' << report.test_id << ',' << psnr_out << ','
    << report.mse << ',';
  if (report.has_cnr) f << report.cnr;
  f << "\n";
}

PhantomSpec load_phantom_spec(const std::string& path) {
  const json j = read_json(path);
  PhantomSpec spec;
  if (j.contains("vessel_tree")) {
    const json& v = j.at("vessel_tree");
    spec = vessel_tree_phantom(v.at("seed").get<std::uint64_t>(),
                               v.at("extent").get<double>(),
                               v.value("n_roots", 3), v.value("max_depth", 4));
  }
  if (j.contains("spheres"))
    for (const json& s : j.at("spheres"))
      spec.spheres.push_back({vec3_from_json(s.at("center")),
                              s.at("radius").get<double>(),
                              s.at("amplitude").get<double>()});
  if (j.contains("tubes"))
    for (const json& t : j.at("tubes"))
      spec.tubes.push_back({vec3_from_json(t.at("a")), vec3_from_json(t.at("b")),
                            t.at("radius").get<double>(),
                            t.at("amplitude").get<double>()});
  return spec;
}

}  // namespace paray::io
