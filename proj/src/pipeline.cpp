#include "strokefield/io/pipeline.hpp"

#include "strokefield/io/bank_file.hpp"
#include "strokefield/io/png.hpp"
#include "strokefield/io/stroke_json.hpp"

#include <filesystem>
#include <stdexcept>

namespace strokefield::io {

RenderConfig<double> render_config_from(const RunManifest& m) {
  RenderConfig<double> config;
  config.samples_per_curve = m.samples_per_curve;
  config.knn = m.knn;
  config.mask_sharpness = m.mask_sharpness;
  config.assign_sharpness = m.assign_sharpness;
  config.tile_size = m.tile_size;
  config.threads = m.threads;
  config.background = m.background;
  validate_config(config);
  return config;
}

LossWeights<double> loss_weights_from(const RunManifest& m, std::size_t layer_count) {
  LossWeights<double> weights;
  weights.alpha = m.alpha;
  weights.beta = m.beta;
  weights.content_layer = m.content_layer;
  if (m.layer_weights.empty())
    weights.layer_weights.assign(layer_count, 1.0 / static_cast<double>(layer_count));
  else
    weights.layer_weights = m.layer_weights;
  validate_weights(weights, layer_count);
  return weights;
}

RunOutputs run_manifest(const RunManifest& manifest, const SnapshotHook<double>& snapshot) {
  const Image<double> content = load_png(manifest.content_path);
  const RenderConfig<double> config = render_config_from(manifest);

  RunOutputs outputs;
  if (manifest.mode == "reconstruct") {
    auto [field, log] = reconstruct_strokes(content, manifest.stroke_count, config,
                                            manifest.schedule, AdamConfig<double>{}, snapshot);
    outputs.field = std::move(field);
    outputs.log = std::move(log);
    outputs.canvas = render_soft(outputs.field, config).first;
    outputs.refined = outputs.canvas;
  } else if (manifest.mode == "paint") {
    const Image<double> style = load_png(manifest.style_path);
    const FeatureBank<double> bank = manifest.bank_path.empty()
                                         ? generate_bank<double>(manifest.bank_seed)
                                         : load_bank(manifest.bank_path);
    const LossWeights<double> weights = loss_weights_from(manifest, bank.layers.size());

    auto [field, log] = optimize_strokes(content, style, manifest.stroke_count, config, bank,
                                         weights, manifest.schedule, AdamConfig<double>{},
                                         snapshot);
    outputs.field = std::move(field);
    outputs.log = std::move(log);
    outputs.canvas = render_soft(outputs.field, config).first;

    LossLog<double> pixel_log;
    outputs.refined = pixel_refine(outputs.canvas, content, style, bank, weights,
                                   manifest.schedule.pixel_iterations, AdamConfig<double>{},
                                   &pixel_log);
    const int offset = manifest.schedule.stroke_iterations;
    const double time_offset =
        outputs.log.entries.empty() ? 0.0 : outputs.log.entries.back().elapsed_ms;
    for (auto& entry : pixel_log.entries) {
      entry.iteration += offset;
      entry.elapsed_ms += time_offset;
      outputs.log.entries.push_back(entry);
    }
  } else {
    throw ManifestError("unknown run mode: " + manifest.mode);
  }

  outputs.final_total = outputs.log.entries.empty() ? 0.0 : outputs.log.entries.back().total;
  return outputs;
}

void write_outputs(const RunOutputs& outputs, const RunManifest& manifest,
                   const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  save_png(outputs.canvas, (dir / "strokes.png").string());
  if (manifest.mode == "paint") save_png(outputs.refined, (dir / "refined.png").string());
  save_strokes(StrokeDocument{outputs.field, manifest.background}, (dir / "strokes.json").string());
  save_loss_csv(outputs.log, (dir / "loss.csv").string());
  save_manifest(manifest, (dir / "manifest.json").string());
}

}  // namespace strokefield::io
