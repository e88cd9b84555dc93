#pragma once

#include "strokefield/perception.hpp"
#include "strokefield/random.hpp"
#include "strokefield/renderer.hpp"
#include "strokefield/stroke.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace strokefield {

template <class Scalar>
Scalar softplus(Scalar x) {
  return std::max(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
}

template <class Scalar>
Scalar softplus_inverse(Scalar y) {
  if (!(y > Scalar(0))) throw std::invalid_argument("softplus_inverse: argument must be > 0");
  if (y > Scalar(30)) return y;  // exp(-y) below double resolution
  return std::log(std::expm1(y));
}

template <class Scalar>
Scalar logit(Scalar p) {
  return std::log(p / (Scalar(1) - p));
}

inline constexpr double kWidthFloor = 0.25;  // pixels; keeps strokes visible

// Unconstrained N x 12 parameters. Location and offsets pass through; width
// and color live in latent space so every latent value maps to a valid
// stroke: width = softplus(latent) + floor, color = sigmoid(latent).
template <class Scalar>
StrokeField<Scalar> to_field(const ParamMatrix<Scalar>& latent, Index height, Index width) {
  StrokeField<Scalar> field = unpack(latent, height, width);
  for (auto& s : field.strokes) {
    s.width = softplus(s.width) + Scalar(kWidthFloor);
    for (int c = 0; c < 3; ++c) s.color[c] = sigmoid(s.color[c]);
  }
  return field;
}

template <class Scalar>
ParamMatrix<Scalar> from_field(const StrokeField<Scalar>& field) {
  ParamMatrix<Scalar> latent = pack(field);
  for (Index n = 0; n < latent.rows(); ++n) {
    latent(n, param::kWidth) = softplus_inverse(latent(n, param::kWidth) - Scalar(kWidthFloor));
    for (int c = 0; c < 3; ++c)
      latent(n, param::kColor + c) = logit(latent(n, param::kColor + c));
  }
  return latent;
}

// Chains d(loss)/d(stroke params) through the latent transforms.
template <class Scalar>
ParamMatrix<Scalar> chain_to_latent(const ParamMatrix<Scalar>& latent,
                                    const ParamMatrix<Scalar>& field_grads) {
  ParamMatrix<Scalar> grads = field_grads;
  for (Index n = 0; n < latent.rows(); ++n) {
    grads(n, param::kWidth) *= sigmoid(latent(n, param::kWidth));  // softplus slope
    for (int c = 0; c < 3; ++c) {
      const Scalar s = sigmoid(latent(n, param::kColor + c));
      grads(n, param::kColor + c) *= s * (Scalar(1) - s);
    }
  }
  return grads;
}

template <class Scalar>
struct AdamConfig {
  // Parameter groups move on different natural scales.
  Scalar lr_location = Scalar(1.0);
  Scalar lr_offsets = Scalar(0.5);
  Scalar lr_width = Scalar(0.1);
  Scalar lr_color = Scalar(0.05);
  Scalar lr_pixels = Scalar(0.02);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  Scalar column_lr(int col) const {
    if (col < param::kOffset0) return lr_location;
    if (col < param::kWidth) return lr_offsets;
    if (col < param::kColor) return lr_width;
    return lr_color;
  }
};

template <class Scalar>
struct AdamState {
  AdamConfig<Scalar> config;
  ParamMatrix<Scalar> m;
  ParamMatrix<Scalar> v;
  std::int64_t step = 0;
};

template <class Scalar>
AdamState<Scalar> make_adam_state(Index rows, const AdamConfig<Scalar>& config = {}) {
  AdamState<Scalar> state;
  state.config = config;
  state.m = ParamMatrix<Scalar>::Zero(rows, param::kCount);
  state.v = ParamMatrix<Scalar>::Zero(rows, param::kCount);
  return state;
}

// Bias-corrected Adam with per-group learning rates.
template <class Scalar>
void adam_step(AdamState<Scalar>& state, ParamMatrix<Scalar>& latent,
               const ParamMatrix<Scalar>& grads) {
  if (grads.rows() != latent.rows() || state.m.rows() != latent.rows())
    throw std::invalid_argument("adam_step: shape mismatch");
  for (Index n = 0; n < grads.rows(); ++n)
    for (int c = 0; c < param::kCount; ++c)
      if (!std::isfinite(static_cast<double>(grads(n, c))))
        throw std::runtime_error("adam_step: non-finite gradient at stroke " + std::to_string(n) +
                                 ", coordinate " + std::to_string(c));
  state.step += 1;
  const Scalar bc1 = Scalar(1) - std::pow(state.config.beta1, Scalar(state.step));
  const Scalar bc2 = Scalar(1) - std::pow(state.config.beta2, Scalar(state.step));
  state.m = state.config.beta1 * state.m + (Scalar(1) - state.config.beta1) * grads;
  state.v = (state.config.beta2 * state.v.array() +
             (Scalar(1) - state.config.beta2) * grads.array().square())
                .matrix();
  for (int c = 0; c < param::kCount; ++c) {
    const Scalar lr = state.config.column_lr(c);
    latent.col(c).array() -= lr * (state.m.col(c).array() / bc1) /
                             ((state.v.col(c).array() / bc2).sqrt() + state.config.epsilon);
  }
}

// Jittered grid of strokes sized to tile the canvas, colored from the
// content image at each location.
template <class Scalar>
ParamMatrix<Scalar> init_strokes(const Image<Scalar>& content, Index stroke_count,
                                 std::uint64_t seed) {
  if (stroke_count < 1) throw std::invalid_argument("init_strokes: need at least one stroke");
  const Index height = content.rows(), width = content.cols();
  const auto grid = static_cast<Index>(
      std::ceil(std::sqrt(static_cast<double>(stroke_count))));
  const Scalar cell_w = Scalar(width) / Scalar(grid);
  const Scalar cell_h = Scalar(height) / Scalar(grid);
  const Scalar target_width = std::max(
      Scalar(kWidthFloor) + Scalar(0.05),
      Scalar(std::min(height, width)) * Scalar(2) / std::sqrt(Scalar(stroke_count)));

  Rng rng(seed);
  ParamMatrix<Scalar> latent(stroke_count, param::kCount);
  Index n = 0;
  for (Index gi = 0; gi < grid && n < stroke_count; ++gi) {
    for (Index gj = 0; gj < grid && n < stroke_count; ++gj, ++n) {
      const Scalar x = (Scalar(gj) + Scalar(0.5)) * cell_w +
                       Scalar(rng.uniform(-0.25, 0.25)) * cell_w;
      const Scalar y = (Scalar(gi) + Scalar(0.5)) * cell_h +
                       Scalar(rng.uniform(-0.25, 0.25)) * cell_h;
      latent(n, param::kLocX) = x;
      latent(n, param::kLocY) = y;
      for (int k = 0; k < 6; ++k)
        latent(n, param::kOffset0 + k) =
            Scalar(rng.uniform(-static_cast<double>(target_width),
                               static_cast<double>(target_width)));
      latent(n, param::kWidth) = softplus_inverse(target_width - Scalar(kWidthFloor));
      const Index pi = std::clamp<Index>(static_cast<Index>(std::floor(y)), 0, height - 1);
      const Index pj = std::clamp<Index>(static_cast<Index>(std::floor(x)), 0, width - 1);
      for (int c = 0; c < 3; ++c) {
        const Scalar v = content.ch[static_cast<std::size_t>(c)](pi, pj);
        latent(n, param::kColor + c) = std::clamp(logit(std::clamp(v, Scalar(1e-6), Scalar(1) - Scalar(1e-6))),
                                                  Scalar(-6), Scalar(6));
      }
    }
  }
  return latent;
}

struct RunSchedule {
  int stroke_iterations = 500;
  int pixel_iterations = 100;
  int snapshot_every = 0;  // 0: no snapshots
  std::uint64_t seed = 0;
};

template <class Scalar>
struct LossLog {
  struct Entry {
    int iteration = 0;
    Scalar content = Scalar(0);
    Scalar style = Scalar(0);
    Scalar total = Scalar(0);
    double elapsed_ms = 0;
  };
  std::vector<Entry> entries;
};

template <class Scalar>
using SnapshotHook = std::function<void(int iteration, const StrokeField<Scalar>&)>;

namespace detail {

inline double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

// One Adam loop over stroke latents against any image objective. The loop is
// single-writer; renders parallelize internally per the renderer contract.
template <class Scalar, class Objective>
LossLog<Scalar> stroke_stage(ParamMatrix<Scalar>& latent, Index height, Index width,
                             const RenderConfig<Scalar>& config, Objective&& objective,
                             int iterations, const AdamConfig<Scalar>& adam_config,
                             int snapshot_every, const SnapshotHook<Scalar>& snapshot) {
  LossLog<Scalar> log;
  AdamState<Scalar> state = make_adam_state<Scalar>(latent.rows(), adam_config);
  const auto start = std::chrono::steady_clock::now();
  for (int it = 0; it < iterations; ++it) {
    const StrokeField<Scalar> field = to_field(latent, height, width);
    auto [canvas, tape] = render_soft(field, config);
    Image<Scalar> image_grad;
    const LossReport<Scalar> report = objective(canvas, &image_grad);
    if (!std::isfinite(static_cast<double>(report.total)))
      throw std::runtime_error("optimize: non-finite loss at iteration " + std::to_string(it));
    log.entries.push_back({it, report.content, report.style, report.total, ms_since(start)});
    if (snapshot && snapshot_every > 0 && it % snapshot_every == 0) snapshot(it, field);

    const ParamMatrix<Scalar> field_grads = render_vjp(field, config, tape, image_grad);
    const ParamMatrix<Scalar> latent_grads = chain_to_latent(latent, field_grads);
    adam_step(state, latent, latent_grads);
  }
  return log;
}

}  // namespace detail

// Full stroke-stage pipeline against content + style perceptual losses.
template <class Scalar>
std::pair<StrokeField<Scalar>, LossLog<Scalar>> optimize_strokes(
    const Image<Scalar>& content, const Image<Scalar>& style, Index stroke_count,
    const RenderConfig<Scalar>& config, const FeatureBank<Scalar>& bank,
    const LossWeights<Scalar>& weights, const RunSchedule& schedule,
    const AdamConfig<Scalar>& adam_config = {}, const SnapshotHook<Scalar>& snapshot = nullptr) {
  validate_weights(weights, bank.layers.size());
  const PerceptualTargets<Scalar> targets = make_perceptual_targets(content, style, bank);
  ParamMatrix<Scalar> latent = init_strokes(content, stroke_count, schedule.seed);
  auto objective = [&](const Image<Scalar>& canvas, Image<Scalar>* grad) {
    return perceptual_loss(canvas, bank, targets, weights, grad);
  };
  LossLog<Scalar> log =
      detail::stroke_stage(latent, content.rows(), content.cols(), config, objective,
                           schedule.stroke_iterations, adam_config, schedule.snapshot_every,
                           snapshot);
  return {to_field(latent, content.rows(), content.cols()), std::move(log)};
}

// Stroke stage against a plain pixel objective: 1/2 sum (canvas - target)^2.
// Reported as content loss with zero style.
template <class Scalar>
std::pair<StrokeField<Scalar>, LossLog<Scalar>> reconstruct_strokes(
    const Image<Scalar>& content, Index stroke_count, const RenderConfig<Scalar>& config,
    const RunSchedule& schedule, const AdamConfig<Scalar>& adam_config = {},
    const SnapshotHook<Scalar>& snapshot = nullptr) {
  ParamMatrix<Scalar> latent = init_strokes(content, stroke_count, schedule.seed);
  auto objective = [&](const Image<Scalar>& canvas, Image<Scalar>* grad) {
    LossReport<Scalar> report;
    for (int c = 0; c < 3; ++c) {
      const Plane<Scalar> diff = canvas.ch[static_cast<std::size_t>(c)] -
                                 content.ch[static_cast<std::size_t>(c)];
      report.content += diff.square().sum() / Scalar(2);
      if (grad) grad->ch[static_cast<std::size_t>(c)] = diff;
    }
    report.total = report.content;
    return report;
  };
  LossLog<Scalar> log =
      detail::stroke_stage(latent, content.rows(), content.cols(), config, objective,
                           schedule.stroke_iterations, adam_config, schedule.snapshot_every,
                           snapshot);
  return {to_field(latent, content.rows(), content.cols()), std::move(log)};
}

// Gatys-style post-pass: Adam directly on pixels against the same total
// loss, clamped to [0, 1] after every step.
template <class Scalar>
Image<Scalar> pixel_refine(const Image<Scalar>& start, const Image<Scalar>& content,
                           const Image<Scalar>& style, const FeatureBank<Scalar>& bank,
                           const LossWeights<Scalar>& weights, int iterations,
                           const AdamConfig<Scalar>& adam_config = {},
                           LossLog<Scalar>* log = nullptr) {
  if (start.rows() != content.rows() || start.cols() != content.cols())
    throw std::invalid_argument("pixel_refine: start dimensions must match the content image");
  validate_weights(weights, bank.layers.size());
  const PerceptualTargets<Scalar> targets = make_perceptual_targets(content, style, bank);

  Image<Scalar> image = start;
  std::array<Plane<Scalar>, 3> m, v;
  for (int c = 0; c < 3; ++c) {
    m[static_cast<std::size_t>(c)] = Plane<Scalar>::Zero(image.rows(), image.cols());
    v[static_cast<std::size_t>(c)] = Plane<Scalar>::Zero(image.rows(), image.cols());
  }
  const auto start_time = std::chrono::steady_clock::now();
  for (int it = 0; it < iterations; ++it) {
    Image<Scalar> grad;
    const LossReport<Scalar> report = perceptual_loss(image, bank, targets, weights, &grad);
    if (!std::isfinite(static_cast<double>(report.total)))
      throw std::runtime_error("pixel_refine: non-finite loss at iteration " +
                               std::to_string(it));
    if (log)
      log->entries.push_back(
          {it, report.content, report.style, report.total, detail::ms_since(start_time)});
    const Scalar bc1 = Scalar(1) - std::pow(adam_config.beta1, Scalar(it + 1));
    const Scalar bc2 = Scalar(1) - std::pow(adam_config.beta2, Scalar(it + 1));
    for (int c = 0; c < 3; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      m[ci] = adam_config.beta1 * m[ci] + (Scalar(1) - adam_config.beta1) * grad.ch[ci];
      v[ci] = adam_config.beta2 * v[ci] + (Scalar(1) - adam_config.beta2) * grad.ch[ci].square();
      image.ch[ci] -= adam_config.lr_pixels * (m[ci] / bc1) / ((v[ci] / bc2).sqrt() + adam_config.epsilon);
      image.ch[ci] = image.ch[ci].max(Scalar(0)).min(Scalar(1));
    }
  }
  return image;
}

}  // namespace strokefield
