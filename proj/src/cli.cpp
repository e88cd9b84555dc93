#include "strokefield/io/cli.hpp"

#include "strokefield/io/bank_file.hpp"
#include "strokefield/io/grad_check.hpp"
#include "strokefield/io/pipeline.hpp"
#include "strokefield/io/png.hpp"
#include "strokefield/io/run_files.hpp"
#include "strokefield/io/stroke_json.hpp"
#include "strokefield/io/svg.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace strokefield {
namespace {

namespace fs = std::filesystem;

void add_render_options(CLI::App* cmd, io::RunManifest& m) {
  cmd->add_option("--samples", m.samples_per_curve, "Spine samples per stroke")
      ->capture_default_str();
  cmd->add_option("--knn", m.knn, "Candidate strokes per tile")->capture_default_str();
  cmd->add_option("--tile", m.tile_size, "Tile size in pixels")->capture_default_str();
  cmd->add_option("--threads", m.threads, "Worker threads (0 = hardware)")
      ->capture_default_str();
  cmd->add_option("--mask-sharpness", m.mask_sharpness, "Coverage sigmoid sharpness")
      ->capture_default_str();
  cmd->add_option("--assign-sharpness", m.assign_sharpness, "Assignment softmax sharpness")
      ->capture_default_str();
}

SnapshotHook<double> snapshot_writer(const std::string& out_dir,
                                         const Color3<double>& background) {
  return [out_dir, background](int iteration, const StrokeField<double>& field) {
    char name[32];
    std::snprintf(name, sizeof name, "strokes_%06d.json", iteration);
    io::save_strokes(io::StrokeDocument{field, background}, (fs::path(out_dir) / name).string());
  };
}

int run_pipeline(const io::RunManifest& manifest, const std::string& out_dir) {
  fs::create_directories(out_dir);
  SnapshotHook<double> snapshot;
  if (manifest.schedule.snapshot_every > 0)
    snapshot = snapshot_writer(out_dir, manifest.background);
  const io::RunOutputs outputs = io::run_manifest(manifest, snapshot);
  io::write_outputs(outputs, manifest, out_dir);
  if (!outputs.log.entries.empty())
    std::cout << "final total loss: " << outputs.final_total << "\n";
  std::cout << "outputs written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Stroke-based image stylization"};
  app.require_subcommand(1);

  io::RunManifest paint_manifest;
  std::string paint_out;
  auto* paint = app.add_subcommand("paint", "Stylize a content image with brush strokes");
  paint->add_option("--content", paint_manifest.content_path, "Content image (PNG)")->required();
  paint->add_option("--style", paint_manifest.style_path, "Style image (PNG)")->required();
  paint->add_option("--out", paint_out, "Output directory")->required();
  paint->add_option("--strokes", paint_manifest.stroke_count, "Number of strokes")
      ->capture_default_str();
  paint->add_option("--iters", paint_manifest.schedule.stroke_iterations,
                    "Stroke optimization iterations")
      ->capture_default_str();
  paint->add_option("--pixel-iters", paint_manifest.schedule.pixel_iterations,
                    "Pixel refinement iterations")
      ->capture_default_str();
  paint->add_option("--alpha", paint_manifest.alpha, "Content loss weight")
      ->capture_default_str();
  paint->add_option("--beta", paint_manifest.beta, "Style loss weight")->capture_default_str();
  paint->add_option("--seed", paint_manifest.schedule.seed, "Stroke initialization seed")
      ->capture_default_str();
  paint->add_option("--bank", paint_manifest.bank_path, "Feature bank file (default: generated)");
  paint->add_option("--bank-seed", paint_manifest.bank_seed,
                    "Seed for the generated feature bank")
      ->capture_default_str();
  paint->add_option("--snapshot-every", paint_manifest.schedule.snapshot_every,
                    "Write a stroke snapshot every k iterations (0 = off)")
      ->capture_default_str();
  add_render_options(paint, paint_manifest);

  io::RunManifest recon_manifest;
  recon_manifest.mode = "reconstruct";
  recon_manifest.schedule.pixel_iterations = 0;
  std::string recon_out;
  auto* recon = app.add_subcommand("reconstruct", "Approximate an image with brush strokes");
  recon->add_option("--content", recon_manifest.content_path, "Target image (PNG)")->required();
  recon->add_option("--out", recon_out, "Output directory")->required();
  recon->add_option("--strokes", recon_manifest.stroke_count, "Number of strokes")
      ->capture_default_str();
  recon->add_option("--iters", recon_manifest.schedule.stroke_iterations,
                    "Optimization iterations")
      ->capture_default_str();
  recon->add_option("--seed", recon_manifest.schedule.seed, "Stroke initialization seed")
      ->capture_default_str();
  recon->add_option("--snapshot-every", recon_manifest.schedule.snapshot_every,
                    "Write a stroke snapshot every k iterations (0 = off)")
      ->capture_default_str();
  add_render_options(recon, recon_manifest);

  std::string render_strokes, render_png, render_svg;
  io::RunManifest render_manifest;  // render settings only
  auto* render = app.add_subcommand("render", "Render a saved stroke field");
  render->add_option("--strokes", render_strokes, "Stroke field JSON")->required();
  render->add_option("--out", render_png, "Output PNG path");
  render->add_option("--svg", render_svg, "Output SVG path");
  add_render_options(render, render_manifest);

  std::uint64_t check_seed = 0;
  io::GradCheckOptions check_options;
  auto* check = app.add_subcommand("grad-check", "Finite-difference check of render gradients");
  check->add_option("--seed", check_seed, "Random seed")->capture_default_str();
  check->add_option("--fields", check_options.fields, "Number of random fields")
      ->capture_default_str();
  check->add_option("--strokes", check_options.stroke_count, "Strokes per field")
      ->capture_default_str();
  check->add_option("--size", check_options.canvas_size, "Canvas side length")
      ->capture_default_str();
  check->add_option("--samples", check_options.samples_per_curve, "Spine samples per stroke")
      ->capture_default_str();
  check->add_option("--knn", check_options.knn, "Candidate strokes per tile")
      ->capture_default_str();

  std::string bank_out;
  std::uint64_t bank_seed = 0;
  std::vector<int> bank_plan = default_layer_plan();
  auto* gen_bank = app.add_subcommand("gen-bank", "Generate a seeded feature bank file");
  gen_bank->add_option("--out", bank_out, "Output bank path")->required();
  gen_bank->add_option("--seed", bank_seed, "Bank seed")->capture_default_str();
  gen_bank->add_option("--plan", bank_plan, "Output channels per layer")
      ->delimiter(',')
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*paint) return run_pipeline(paint_manifest, paint_out);
    if (*recon) return run_pipeline(recon_manifest, recon_out);

    if (*render) {
      if (render_png.empty() && render_svg.empty()) {
        std::cerr << "render: need --out and/or --svg\n";
        return 2;
      }
      const io::StrokeDocument doc = io::load_stroke_document(render_strokes);
      RenderConfig<double> config = io::render_config_from(render_manifest);
      config.background = doc.background;
      if (!render_png.empty())
        io::save_png(render_soft(doc.field, config).first, render_png);
      if (!render_svg.empty()) io::export_svg(doc.field, config, render_svg);
      return 0;
    }

    if (*check) {
      const io::GradCheckReport report = io::grad_check(check_seed, check_options);
      std::cout << "max relative error: " << report.max_rel_error << " ("
                << report.coords_checked << " coordinates checked, " << report.coords_skipped
                << " skipped near ties)\n";
      return report.max_rel_error < 1e-4 ? 0 : 1;
    }

    if (*gen_bank) {
      io::save_bank(generate_bank<double>(bank_seed, bank_plan), bank_out);
      std::cout << "bank written to " << bank_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;  // unreachable with require_subcommand(1)
}

}  // namespace strokefield
