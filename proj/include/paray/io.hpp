#pragma once

#include <string>
#include <vector>

#include "paray/geometry.hpp"
#include "paray/metrics.hpp"
#include "paray/perturb.hpp"
#include "paray/phantom.hpp"
#include "paray/types.hpp"
#include "paray/zsa2a.hpp"

namespace paray::io {

// Binary fields are little-endian 32-bit floats in "<base>.f32" with a JSON
// sidecar "<base>.json" carrying the shape/metadata needed to reload them.

void save_raw(const std::string& base, const RawPAData& raw);
RawPAData load_raw(const std::string& base);

void save_volume(const std::string& base, const Volume& volume);
Volume load_volume(const std::string& base);

void save_image(const std::string& base, const Image2D& image);
Image2D load_image(const std::string& base);

// CV values in "<base>.f32" (NaN where undefined), per-pixel means in
// "<base>.mean.f32".
void save_cvmap(const std::string& base, const CVMap& map);
CVMap load_cvmap(const std::string& base);

void save_array(const std::string& path, const DetectorArray& array);
DetectorArray load_array(const std::string& path);

// Parameters as a flat f32 blob in "<base>.f32" (blocks in declaration
// order), header in "<base>.json".
void save_model(const std::string& base, const TrainedModel& model);
TrainedModel load_model(const std::string& base);

void save_loss_csv(const std::string& path, const std::vector<LossRecord>& log);

// 16-bit binary PGM, min-max scaled; the scaling is recorded in
// "<path>.json" so values can be recovered.
void export_pgm16(const std::string& path, const Image2D& image);

// CV map as PGM with undefined pixels written as 0, plus a "<base>.valid.pgm"
// 0/1 validity mask.
void export_cvmap_pgm16(const std::string& base, const CVMap& map);

void save_metrics_json(const std::string& path, const MetricsReport& report);
// Appends one row, writing the header first if the file does not exist yet.
void append_metrics_csv(const std::string& path, const MetricsReport& report);

// Phantom description from a JSON document:
// {"spheres": [{"center": [x,y,z], "radius": r, "amplitude": a}, ...],
//  "tubes": [{"a": [..], "b": [..], "radius": r, "amplitude": a}, ...],
//  "vessel_tree": {"seed": s, "extent": e, "n_roots": n, "max_depth": d}}
PhantomSpec load_phantom_spec(const std::string& path);

}  // namespace paray::io
