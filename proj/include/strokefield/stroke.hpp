#pragma once

#include "strokefield/types.hpp"

#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace strokefield {

template <class Scalar>
struct QuadraticBezier {
  Vec2<Scalar> p0, p1, p2;  // absolute canvas coordinates
};

template <class Scalar>
std::array<Scalar, 3> bezier_basis(Scalar t) {
  const Scalar u = Scalar(1) - t;
  return {u * u, Scalar(2) * u * t, t * t};
}

// B(t) = (1-t)^2 p0 + 2(1-t)t p1 + t^2 p2
template <class Scalar>
Vec2<Scalar> bezier_eval(const QuadraticBezier<Scalar>& curve, Scalar t) {
  if (!(t >= Scalar(0) && t <= Scalar(1)))
    throw std::invalid_argument("bezier_eval: t must lie in [0, 1]");
  const auto b = bezier_basis(t);
  return b[0] * curve.p0 + b[1] * curve.p1 + b[2] * curve.p2;
}

// Equidistant in parameter t: t_s = s / (S - 1), so the endpoints are exact.
template <class Scalar>
std::vector<Vec2<Scalar>> sample_curve(const QuadraticBezier<Scalar>& curve, int samples) {
  if (samples < 2)
    throw std::invalid_argument("sample_curve: a curve needs at least its two endpoints");
  std::vector<Vec2<Scalar>> points(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s)
    points[static_cast<std::size_t>(s)] = bezier_eval(curve, Scalar(s) / Scalar(samples - 1));
  return points;
}

// A brush stroke: 12 scalar degrees of freedom in total. The control points
// are stored relative to location, so translating location translates the
// whole spine.
template <class Scalar>
struct Stroke {
  Vec2<Scalar> location = Vec2<Scalar>::Zero();
  std::array<Vec2<Scalar>, 3> offsets = {Vec2<Scalar>::Zero(), Vec2<Scalar>::Zero(),
                                         Vec2<Scalar>::Zero()};
  Scalar width = Scalar(1);  // coverage radius around the spine, pixels
  Color3<Scalar> color = Color3<Scalar>::Zero();
};

template <class Scalar>
QuadraticBezier<Scalar> world_curve(const Stroke<Scalar>& s) {
  return {s.location + s.offsets[0], s.location + s.offsets[1], s.location + s.offsets[2]};
}

template <class Scalar>
std::vector<Vec2<Scalar>> sample_stroke(const Stroke<Scalar>& s, int samples) {
  return sample_curve(world_curve(s), samples);
}

// Box covering all sample points, grown on every side by the stroke width.
template <class Scalar>
Eigen::AlignedBox<Scalar, 2> stroke_bounds(const Stroke<Scalar>& s, int samples) {
  Eigen::AlignedBox<Scalar, 2> box;
  for (const auto& p : sample_stroke(s, samples)) box.extend(p);
  const Vec2<Scalar> margin(s.width, s.width);
  box.extend(box.min() - margin);
  box.extend(box.max() + margin);
  return box;
}

template <class Scalar>
struct StrokeField {
  std::vector<Stroke<Scalar>> strokes;
  Index height = 0;  // canvas rows, pixels
  Index width = 0;   // canvas columns, pixels

  Index size() const { return static_cast<Index>(strokes.size()); }
};

template <class Scalar>
void validate_stroke(const Stroke<Scalar>& s, Index index) {
  const auto where = [index](const char* what) {
    return std::string("stroke ") + std::to_string(index) + ": " + what;
  };
  if (!(s.width > Scalar(0))) throw std::invalid_argument(where("width must be > 0"));
  if (!std::isfinite(static_cast<double>(s.width)))
    throw std::invalid_argument(where("width must be finite"));
  for (int c = 0; c < 3; ++c)
    if (!(s.color[c] >= Scalar(0) && s.color[c] <= Scalar(1)))
      throw std::invalid_argument(where("color channel out of [0, 1]"));
  if (!s.location.allFinite()) throw std::invalid_argument(where("location must be finite"));
  for (const auto& o : s.offsets)
    if (!o.allFinite()) throw std::invalid_argument(where("offsets must be finite"));
}

template <class Scalar>
void validate_field(const StrokeField<Scalar>& field) {
  if (field.height < 1 || field.width < 1)
    throw std::invalid_argument("stroke field: canvas dimensions must be >= 1");
  for (Index n = 0; n < field.size(); ++n)
    validate_stroke(field.strokes[static_cast<std::size_t>(n)], n);
}

template <class Scalar>
ParamMatrix<Scalar> pack(const StrokeField<Scalar>& field) {
  ParamMatrix<Scalar> params(field.size(), param::kCount);
  for (Index n = 0; n < field.size(); ++n) {
    const auto& s = field.strokes[static_cast<std::size_t>(n)];
    params(n, param::kLocX) = s.location.x();
    params(n, param::kLocY) = s.location.y();
    for (int k = 0; k < 3; ++k) {
      params(n, param::kOffset0 + 2 * k) = s.offsets[static_cast<std::size_t>(k)].x();
      params(n, param::kOffset0 + 2 * k + 1) = s.offsets[static_cast<std::size_t>(k)].y();
    }
    params(n, param::kWidth) = s.width;
    for (int c = 0; c < 3; ++c) params(n, param::kColor + c) = s.color[c];
  }
  return params;
}

template <class Scalar>
StrokeField<Scalar> unpack(const ParamMatrix<Scalar>& params, Index height, Index width) {
  StrokeField<Scalar> field;
  field.height = height;
  field.width = width;
  field.strokes.resize(static_cast<std::size_t>(params.rows()));
  for (Index n = 0; n < params.rows(); ++n) {
    auto& s = field.strokes[static_cast<std::size_t>(n)];
    s.location = {params(n, param::kLocX), params(n, param::kLocY)};
    for (int k = 0; k < 3; ++k)
      s.offsets[static_cast<std::size_t>(k)] = {params(n, param::kOffset0 + 2 * k),
                                                params(n, param::kOffset0 + 2 * k + 1)};
    s.width = params(n, param::kWidth);
    for (int c = 0; c < 3; ++c) s.color[c] = params(n, param::kColor + c);
  }
  return field;
}

}  // namespace strokefield
