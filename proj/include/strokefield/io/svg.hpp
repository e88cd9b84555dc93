#pragma once

#include "strokefield/renderer.hpp"
#include "strokefield/stroke.hpp"

#include <string>

namespace strokefield::io {

// Vector view of a field: background rect, then one quadratic path per
// stroke in index order (painter's order), stroke-width = 2 * width,
// round caps, no fill.
std::string field_to_svg(const StrokeField<double>& field, const RenderConfig<double>& config);

void export_svg(const StrokeField<double>& field, const RenderConfig<double>& config,
                const std::string& path);

}  // namespace strokefield::io
