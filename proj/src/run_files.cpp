#include "strokefield/io/run_files.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace strokefield::io {
namespace {

using nlohmann::json;

constexpr const char* kManifestVersion = "strokefield-run/1";

void require_keys(const json& object, const std::set<std::string>& allowed,
                  const std::string& where) {
  if (!object.is_object()) throw ManifestError(where + ": expected a JSON object");
  for (const auto& item : object.items())
    if (!allowed.count(item.key()))
      throw ManifestError(where + ": unknown field \"" + item.key() + "\"");
  for (const auto& key : allowed)
    if (!object.contains(key)) throw ManifestError(where + ": missing field \"" + key + "\"");
}

}  // namespace

std::string manifest_to_json(const RunManifest& m) {
  json root;
  root["format"] = kManifestVersion;
  root["mode"] = m.mode;
  root["inputs"] = {{"content", m.content_path}, {"style", m.style_path}, {"bank", m.bank_path}};
  root["bank_seed"] = m.bank_seed;
  root["strokes"] = m.stroke_count;
  root["render"] = {{"samples_per_curve", m.samples_per_curve},
                    {"knn", m.knn},
                    {"mask_sharpness", m.mask_sharpness},
                    {"assign_sharpness", m.assign_sharpness},
                    {"tile_size", m.tile_size},
                    {"threads", m.threads},
                    {"background", {m.background[0], m.background[1], m.background[2]}}};
  root["loss"] = {{"alpha", m.alpha},
                  {"beta", m.beta},
                  {"layer_weights", m.layer_weights},
                  {"content_layer", m.content_layer}};
  root["schedule"] = {{"stroke_iterations", m.schedule.stroke_iterations},
                      {"pixel_iterations", m.schedule.pixel_iterations},
                      {"snapshot_every", m.schedule.snapshot_every},
                      {"seed", m.schedule.seed}};
  return root.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ManifestError(std::string("malformed manifest: ") + e.what());
  }
  require_keys(root, {"format", "mode", "inputs", "bank_seed", "strokes", "render", "loss",
                      "schedule"},
               "manifest");
  if (!root["format"].is_string() || root["format"].get<std::string>() != kManifestVersion)
    throw ManifestError("unsupported manifest version: " + root["format"].dump());

  RunManifest m;
  m.mode = root["mode"].get<std::string>();
  if (m.mode != "paint" && m.mode != "reconstruct")
    throw ManifestError("manifest: mode must be \"paint\" or \"reconstruct\"");

  require_keys(root["inputs"], {"content", "style", "bank"}, "inputs");
  m.content_path = root["inputs"]["content"].get<std::string>();
  m.style_path = root["inputs"]["style"].get<std::string>();
  m.bank_path = root["inputs"]["bank"].get<std::string>();
  m.bank_seed = root["bank_seed"].get<std::uint64_t>();
  m.stroke_count = root["strokes"].get<Index>();

  const json& render = root["render"];
  require_keys(render,
               {"samples_per_curve", "knn", "mask_sharpness", "assign_sharpness", "tile_size",
                "threads", "background"},
               "render");
  m.samples_per_curve = render["samples_per_curve"].get<int>();
  m.knn = render["knn"].get<int>();
  m.mask_sharpness = render["mask_sharpness"].get<double>();
  m.assign_sharpness = render["assign_sharpness"].get<double>();
  m.tile_size = render["tile_size"].get<int>();
  m.threads = render["threads"].get<int>();
  if (!render["background"].is_array() || render["background"].size() != 3)
    throw ManifestError("render.background: expected [r, g, b]");
  for (int c = 0; c < 3; ++c)
    m.background[c] = render["background"][static_cast<std::size_t>(c)].get<double>();

  const json& loss = root["loss"];
  require_keys(loss, {"alpha", "beta", "layer_weights", "content_layer"}, "loss");
  m.alpha = loss["alpha"].get<double>();
  m.beta = loss["beta"].get<double>();
  m.layer_weights = loss["layer_weights"].get<std::vector<double>>();
  m.content_layer = loss["content_layer"].get<int>();

  const json& schedule = root["schedule"];
  require_keys(schedule, {"stroke_iterations", "pixel_iterations", "snapshot_every", "seed"},
               "schedule");
  m.schedule.stroke_iterations = schedule["stroke_iterations"].get<int>();
  m.schedule.pixel_iterations = schedule["pixel_iterations"].get<int>();
  m.schedule.snapshot_every = schedule["snapshot_every"].get<int>();
  m.schedule.seed = schedule["seed"].get<std::uint64_t>();
  return m;
}

void save_manifest(const RunManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ManifestError("cannot open " + path + " for writing");
  out << manifest_to_json(manifest);
  if (!out) throw ManifestError("failed writing " + path);
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return manifest_from_json(buffer.str());
}

void save_loss_csv(const LossLog<double>& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "iteration,content_loss,style_loss,total_loss,elapsed_ms\n";
  char line[256];
  for (const auto& e : log.entries) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.3f\n", e.iteration, e.content,
                  e.style, e.total, e.elapsed_ms);
    out << line;
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

LossLog<double> load_loss_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "iteration,content_loss,style_loss,total_loss,elapsed_ms")
    throw std::runtime_error(path + ": unexpected CSV header");
  LossLog<double> log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    LossLog<double>::Entry entry;
    if (std::sscanf(line.c_str(), "%d,%lg,%lg,%lg,%lg", &entry.iteration, &entry.content,
                    &entry.style, &entry.total, &entry.elapsed_ms) != 5)
      throw std::runtime_error(path + ": malformed CSV row: " + line);
    log.entries.push_back(entry);
  }
  return log;
}

}  // namespace strokefield::io
