#include "strokefield/io/stroke_json.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace strokefield::io {
namespace {

using nlohmann::json;

void require_keys(const json& object, const std::set<std::string>& allowed,
                  const std::string& where) {
  if (!object.is_object()) throw StrokeDocumentError(where + ": expected a JSON object");
  for (const auto& item : object.items()) {
    if (!allowed.count(item.key()))
      throw StrokeDocumentError(where + ": unknown field \"" + item.key() + "\"");
  }
  for (const auto& key : allowed)
    if (!object.contains(key)) throw StrokeDocumentError(where + ": missing field \"" + key + "\"");
}

json vec2_to_json(const Vec2<double>& v) { return json::array({v.x(), v.y()}); }
json color_to_json(const Color3<double>& c) { return json::array({c[0], c[1], c[2]}); }

Vec2<double> vec2_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw StrokeDocumentError(where + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Color3<double> color_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3)
    throw StrokeDocumentError(where + ": expected [r, g, b]");
  Color3<double> c;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number())
      throw StrokeDocumentError(where + ": expected [r, g, b]");
    c[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return c;
}

}  // namespace

std::string strokes_to_json(const StrokeDocument& doc) {
  json root;
  root["format"] = kStrokeFormatVersion;
  root["canvas"] = {{"height", doc.field.height}, {"width", doc.field.width}};
  root["background"] = color_to_json(doc.background);
  json strokes = json::array();
  for (const auto& s : doc.field.strokes) {
    json entry;
    entry["location"] = vec2_to_json(s.location);
    entry["offsets"] =
        json::array({vec2_to_json(s.offsets[0]), vec2_to_json(s.offsets[1]),
                     vec2_to_json(s.offsets[2])});
    entry["width"] = s.width;
    entry["color"] = color_to_json(s.color);
    strokes.push_back(std::move(entry));
  }
  root["strokes"] = std::move(strokes);
  return root.dump(2) + "\n";
}

StrokeDocument strokes_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw StrokeDocumentError(std::string("malformed stroke document: ") + e.what());
  }
  require_keys(root, {"format", "canvas", "background", "strokes"}, "document");
  if (!root["format"].is_string() || root["format"].get<std::string>() != kStrokeFormatVersion)
    throw VersionMismatchError("unsupported stroke document version: " + root["format"].dump());

  require_keys(root["canvas"], {"height", "width"}, "canvas");
  if (!root["canvas"]["height"].is_number_integer() ||
      !root["canvas"]["width"].is_number_integer())
    throw StrokeDocumentError("canvas: height and width must be integers");

  StrokeDocument doc;
  doc.field.height = root["canvas"]["height"].get<Index>();
  doc.field.width = root["canvas"]["width"].get<Index>();
  doc.background = color_from_json(root["background"], "background");

  if (!root["strokes"].is_array()) throw StrokeDocumentError("strokes: expected an array");
  doc.field.strokes.reserve(root["strokes"].size());
  std::size_t index = 0;
  for (const auto& entry : root["strokes"]) {
    const std::string where = "stroke " + std::to_string(index);
    require_keys(entry, {"location", "offsets", "width", "color"}, where);
    Stroke<double> s;
    s.location = vec2_from_json(entry["location"], where + ".location");
    if (!entry["offsets"].is_array() || entry["offsets"].size() != 3)
      throw StrokeDocumentError(where + ".offsets: expected three [x, y] pairs");
    for (int k = 0; k < 3; ++k)
      s.offsets[static_cast<std::size_t>(k)] =
          vec2_from_json(entry["offsets"][static_cast<std::size_t>(k)],
                         where + ".offsets[" + std::to_string(k) + "]");
    if (!entry["width"].is_number()) throw StrokeDocumentError(where + ".width: expected a number");
    s.width = entry["width"].get<double>();
    s.color = color_from_json(entry["color"], where + ".color");
    doc.field.strokes.push_back(s);
    ++index;
  }
  validate_field(doc.field);
  for (int c = 0; c < 3; ++c)
    if (!(doc.background[c] >= 0.0 && doc.background[c] <= 1.0))
      throw StrokeDocumentError("background: channels must lie in [0, 1]");
  return doc;
}

void save_strokes(const StrokeDocument& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StrokeDocumentError("cannot open " + path + " for writing");
  out << strokes_to_json(doc);
  if (!out) throw StrokeDocumentError("failed writing " + path);
}

void save_strokes(const StrokeField<double>& field, const std::string& path) {
  save_strokes(StrokeDocument{field, Color3<double>::Ones()}, path);
}

StrokeDocument load_stroke_document(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StrokeDocumentError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return strokes_from_json(buffer.str());
}

StrokeField<double> load_strokes(const std::string& path) {
  return load_stroke_document(path).field;
}

}  // namespace strokefield::io
