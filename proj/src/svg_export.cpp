#include "strokefield/io/svg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace strokefield::io {
namespace {

std::string hex_color(const Color3<double>& color) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<unsigned>(std::lround(std::clamp(color[0], 0.0, 1.0) * 255.0)),
                static_cast<unsigned>(std::lround(std::clamp(color[1], 0.0, 1.0) * 255.0)),
                static_cast<unsigned>(std::lround(std::clamp(color[2], 0.0, 1.0) * 255.0)));
  return buf;
}

std::string num(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::string field_to_svg(const StrokeField<double>& field, const RenderConfig<double>& config) {
  validate_field(field);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << field.width
      << "\" height=\"" << field.height << "\" viewBox=\"0 0 " << field.width << ' '
      << field.height << "\">\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"" << hex_color(config.background)
      << "\"/>\n";
  for (const auto& stroke : field.strokes) {
    const QuadraticBezier<double> curve = world_curve(stroke);
    out << "  <path d=\"M " << num(curve.p0.x()) << ' ' << num(curve.p0.y()) << " Q "
        << num(curve.p1.x()) << ' ' << num(curve.p1.y()) << ' ' << num(curve.p2.x()) << ' '
        << num(curve.p2.y()) << "\" fill=\"none\" stroke=\"" << hex_color(stroke.color)
        << "\" stroke-width=\"" << num(2.0 * stroke.width)
        << "\" stroke-linecap=\"round\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void export_svg(const StrokeField<double>& field, const RenderConfig<double>& config,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << field_to_svg(field, config);
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace strokefield::io
