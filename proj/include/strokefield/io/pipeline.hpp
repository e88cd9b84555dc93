#pragma once

#include "strokefield/io/run_files.hpp"
#include "strokefield/optimize.hpp"
#include "strokefield/perception.hpp"
#include "strokefield/renderer.hpp"

#include <string>

namespace strokefield::io {

struct RunOutputs {
  StrokeField<double> field;
  Image<double> canvas;   // soft render of the final field
  Image<double> refined;  // pixel-refined canvas (paint); equals canvas for reconstruct
  LossLog<double> log;    // stroke stage then pixel stage, continuous iteration numbers
  double final_total = 0;
};

RenderConfig<double> render_config_from(const RunManifest& manifest);
LossWeights<double> loss_weights_from(const RunManifest& manifest, std::size_t layer_count);

// Pure compute: reads the input files named by the manifest and runs the
// pipeline. Deterministic given the manifest (thread count does not change
// results).
RunOutputs run_manifest(const RunManifest& manifest,
                        const SnapshotHook<double>& snapshot = nullptr);

// strokes.png, refined.png (paint only), strokes.json, loss.csv, manifest.json
void write_outputs(const RunOutputs& outputs, const RunManifest& manifest,
                   const std::string& out_dir);

}  // namespace strokefield::io
