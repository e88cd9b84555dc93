#pragma once

#include "strokefield/optimize.hpp"
#include "strokefield/types.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace strokefield::io {

struct ManifestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything needed to reproduce one run deterministically.
struct RunManifest {
  std::string mode = "paint";  // "paint" or "reconstruct"
  std::string content_path;
  std::string style_path;  // empty for reconstruct
  std::string bank_path;   // empty: bank generated from bank_seed
  std::uint64_t bank_seed = 0;
  Index stroke_count = 300;

  int samples_per_curve = 10;
  int knn = 20;
  double mask_sharpness = 5.0;
  double assign_sharpness = 2.0;
  int tile_size = 16;
  int threads = 0;
  Color3<double> background = Color3<double>::Ones();

  double alpha = 1.0;
  double beta = 100.0;
  std::vector<double> layer_weights;  // empty: uniform over bank layers
  int content_layer = 1;

  RunSchedule schedule;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);
void save_manifest(const RunManifest& manifest, const std::string& path);
RunManifest load_manifest(const std::string& path);

// CSV with fixed columns: iteration,content_loss,style_loss,total_loss,elapsed_ms
void save_loss_csv(const LossLog<double>& log, const std::string& path);
LossLog<double> load_loss_csv(const std::string& path);

}  // namespace strokefield::io
