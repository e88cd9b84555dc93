#include "strokefield/io/grad_check.hpp"

#include "strokefield/random.hpp"
#include "strokefield/renderer.hpp"
#include "strokefield/stroke.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace strokefield::io {
namespace {

StrokeField<double> random_field(Rng& rng, Index stroke_count, Index size) {
  StrokeField<double> field;
  field.height = size;
  field.width = size;
  const double reach = static_cast<double>(size) / 4.0;
  for (Index n = 0; n < stroke_count; ++n) {
    Stroke<double> s;
    s.location = {rng.uniform(0.0, static_cast<double>(size)),
                  rng.uniform(0.0, static_cast<double>(size))};
    for (auto& offset : s.offsets) offset = {rng.uniform(-reach, reach), rng.uniform(-reach, reach)};
    s.width = rng.uniform(0.5, 3.0);
    s.color = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    field.strokes.push_back(s);
  }
  return field;
}

Image<double> random_cotangent(Rng& rng, Index rows, Index cols) {
  Image<double> g(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      for (int c = 0; c < 3; ++c) g.ch[static_cast<std::size_t>(c)](i, j) = rng.uniform(-1.0, 1.0);
  return g;
}

// d<g, render>/d(coordinate) by central differences, summing the per-pixel
// render difference first so the O(1) canvas values cancel before the 1/2eps
// blowup.
double fd_directional(const ParamMatrix<double>& params, Index n, int c, double eps,
                      Index height, Index width, const RenderConfig<double>& config,
                      const Image<double>& cotangent) {
  ParamMatrix<double> plus = params, minus = params;
  plus(n, c) += eps;
  minus(n, c) -= eps;
  const Image<double> a = render_soft(unpack(plus, height, width), config).first;
  const Image<double> b = render_soft(unpack(minus, height, width), config).first;
  double acc = 0;
  for (int ch = 0; ch < 3; ++ch)
    acc += (cotangent.ch[static_cast<std::size_t>(ch)] *
            (a.ch[static_cast<std::size_t>(ch)] - b.ch[static_cast<std::size_t>(ch)]))
               .sum();
  return acc / (2.0 * eps);
}

// A stroke's distance field is non-smooth where two spine samples tie for
// nearest; geometry gradients are excluded there.
bool near_sample_tie(const Stroke<double>& stroke, Index height, Index width, int samples,
                     double tolerance) {
  const std::vector<Vec2<double>> pts = sample_stroke(stroke, samples);
  for (Index i = 0; i < height; ++i)
    for (Index j = 0; j < width; ++j) {
      const Vec2<double> pc = pixel_center<double>(i, j);
      double best = std::numeric_limits<double>::infinity(), second = best;
      for (const auto& p : pts) {
        const double d = (p - pc).norm();
        if (d < best) {
          second = best;
          best = d;
        } else if (d < second) {
          second = d;
        }
      }
      if (second - best < tolerance) return true;
    }
  return false;
}

}  // namespace

GradCheckReport grad_check(std::uint64_t seed, const GradCheckOptions& options) {
  RenderConfig<double> config;
  config.samples_per_curve = options.samples_per_curve;
  config.knn = options.knn;

  Rng rng(seed);
  GradCheckReport report;
  for (int f = 0; f < options.fields; ++f) {
    const StrokeField<double> field =
        random_field(rng, options.stroke_count, options.canvas_size);
    const Image<double> cotangent = random_cotangent(rng, field.height, field.width);

    const auto [canvas, tape] = render_soft(field, config);
    const ParamMatrix<double> grads = render_vjp(field, config, tape, cotangent);
    const ParamMatrix<double> params = pack(field);

    for (Index n = 0; n < params.rows(); ++n) {
      const bool skip_geometry = near_sample_tie(field.strokes[static_cast<std::size_t>(n)],
                                                 field.height, field.width,
                                                 options.samples_per_curve, options.tie_tolerance);
      for (int c = 0; c < param::kCount; ++c) {
        if (skip_geometry && c < param::kWidth) {
          ++report.coords_skipped;
          continue;
        }
        const double fd = fd_directional(params, n, c, options.epsilon, field.height,
                                         field.width, config, cotangent);
        const double an = grads(n, c);
        const double rel =
            std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3});
        report.max_rel_error = std::max(report.max_rel_error, rel);
        ++report.coords_checked;
      }
    }
  }
  return report;
}

}  // namespace strokefield::io
