#pragma once

#include "strokefield/stroke.hpp"
#include "strokefield/types.hpp"

#include <stdexcept>
#include <string>

namespace strokefield::io {

inline constexpr const char* kStrokeFormatVersion = "strokefield/1";

struct StrokeDocumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VersionMismatchError : StrokeDocumentError {
  using StrokeDocumentError::StrokeDocumentError;
};

// A stroke field plus the canvas background it was painted over.
struct StrokeDocument {
  StrokeField<double> field;
  Color3<double> background = Color3<double>::Ones();
};

std::string strokes_to_json(const StrokeDocument& doc);
StrokeDocument strokes_from_json(const std::string& text);

void save_strokes(const StrokeDocument& doc, const std::string& path);
void save_strokes(const StrokeField<double>& field, const std::string& path);
StrokeDocument load_stroke_document(const std::string& path);
StrokeField<double> load_strokes(const std::string& path);

}  // namespace strokefield::io
