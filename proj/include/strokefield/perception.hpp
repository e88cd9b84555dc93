#pragma once

#include "strokefield/random.hpp"
#include "strokefield/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace strokefield {

// One pyramid level: 3x3 convolution (stride 1, zero padding 1), ReLU, then
// 2x2 average pooling.
template <class Scalar>
struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  std::vector<Eigen::Matrix<Scalar, 3, 3>> taps;  // [out * in_channels + in]
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;  // per out channel
};

// Stands in for a pretrained feature extractor: either deterministically
// generated from a seed or loaded from a bank file.
template <class Scalar>
struct FeatureBank {
  enum class Provenance { kGenerated, kLoaded };
  std::vector<ConvLayer<Scalar>> layers;
  Provenance provenance = Provenance::kGenerated;
  std::uint64_t seed = 0;  // meaningful when generated
};

inline std::vector<int> default_layer_plan() { return {16, 32, 64}; }

template <class Scalar>
void validate_bank(const FeatureBank<Scalar>& bank) {
  if (bank.layers.empty()) throw std::invalid_argument("feature bank: no layers");
  int in = 3;
  for (std::size_t l = 0; l < bank.layers.size(); ++l) {
    const auto& layer = bank.layers[l];
    if (layer.in_channels != in)
      throw std::invalid_argument("feature bank: layer " + std::to_string(l) +
                                  " input channels do not chain");
    if (layer.out_channels < 1)
      throw std::invalid_argument("feature bank: layer " + std::to_string(l) + " has no outputs");
    if (static_cast<int>(layer.taps.size()) != layer.out_channels * layer.in_channels ||
        layer.bias.size() != layer.out_channels)
      throw std::invalid_argument("feature bank: layer " + std::to_string(l) +
                                  " weight shapes are inconsistent");
    for (const auto& t : layer.taps)
      if (!t.allFinite())
        throw std::invalid_argument("feature bank: layer " + std::to_string(l) +
                                    " has non-finite weights");
    in = layer.out_channels;
  }
}

// He-style fan-in scaling; weights drawn in (out, in, ky, kx) order so the
// same seed always produces the same bank. Biases start at zero.
template <class Scalar>
FeatureBank<Scalar> generate_bank(std::uint64_t seed,
                                  const std::vector<int>& plan = default_layer_plan()) {
  FeatureBank<Scalar> bank;
  bank.provenance = FeatureBank<Scalar>::Provenance::kGenerated;
  bank.seed = seed;
  Rng rng(seed);
  int in = 3;
  for (const int out : plan) {
    ConvLayer<Scalar> layer;
    layer.in_channels = in;
    layer.out_channels = out;
    layer.taps.resize(static_cast<std::size_t>(out) * static_cast<std::size_t>(in));
    const double stddev = std::sqrt(2.0 / (9.0 * in));
    for (auto& tap : layer.taps)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) tap(ky, kx) = Scalar(rng.gaussian() * stddev);
    layer.bias = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(out);
    bank.layers.push_back(std::move(layer));
    in = out;
  }
  return bank;
}

// Feature maps of one pyramid level, one plane per channel.
template <class Scalar>
struct FeatureLayer {
  std::vector<Plane<Scalar>> channels;

  Index channel_count() const { return static_cast<Index>(channels.size()); }
  Index positions() const { return channels.empty() ? 0 : channels[0].size(); }
};

template <class Scalar>
using FeaturePyramid = std::vector<FeatureLayer<Scalar>>;

namespace detail {

// out += taps (*) in, zero padding 1, spatial size preserved
template <class Scalar>
void accumulate_conv3x3(const Plane<Scalar>& in, const Eigen::Matrix<Scalar, 3, 3>& taps,
                        Plane<Scalar>& out) {
  const Index rows = in.rows(), cols = in.cols();
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const Scalar w = taps(dy + 1, dx + 1);
      if (w == Scalar(0)) continue;
      const Index r0 = std::max<Index>(0, -dy), r1 = std::min<Index>(rows, rows - dy);
      const Index c0 = std::max<Index>(0, -dx), c1 = std::min<Index>(cols, cols - dx);
      out.block(r0, c0, r1 - r0, c1 - c0) += w * in.block(r0 + dy, c0 + dx, r1 - r0, c1 - c0);
    }
  }
}

template <class Scalar>
Plane<Scalar> avg_pool2(const Plane<Scalar>& in) {
  const Index rows = in.rows() / 2, cols = in.cols() / 2;  // trailing odd row/col dropped
  Plane<Scalar> out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      out(i, j) = (in(2 * i, 2 * j) + in(2 * i + 1, 2 * j) + in(2 * i, 2 * j + 1) +
                   in(2 * i + 1, 2 * j + 1)) /
                  Scalar(4);
  return out;
}

template <class Scalar>
Plane<Scalar> avg_pool2_backward(const Plane<Scalar>& grad_out, Index in_rows, Index in_cols) {
  Plane<Scalar> grad_in = Plane<Scalar>::Zero(in_rows, in_cols);
  for (Index i = 0; i < grad_out.rows(); ++i)
    for (Index j = 0; j < grad_out.cols(); ++j) {
      const Scalar g = grad_out(i, j) / Scalar(4);
      grad_in(2 * i, 2 * j) += g;
      grad_in(2 * i + 1, 2 * j) += g;
      grad_in(2 * i, 2 * j + 1) += g;
      grad_in(2 * i + 1, 2 * j + 1) += g;
    }
  return grad_in;
}

template <class Scalar>
Eigen::Matrix<Scalar, 3, 3> rot180(const Eigen::Matrix<Scalar, 3, 3>& taps) {
  Eigen::Matrix<Scalar, 3, 3> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = taps(2 - i, 2 - j);
  return r;
}

}  // namespace detail

// Activations kept around for the backward pass.
template <class Scalar>
struct FeatureTrace {
  std::vector<std::vector<Plane<Scalar>>> act;  // post-ReLU, pre-pool, per layer
  FeaturePyramid<Scalar> pyramid;               // post-pool
};

template <class Scalar>
FeatureTrace<Scalar> forward_trace(const Image<Scalar>& image, const FeatureBank<Scalar>& bank) {
  validate_bank(bank);
  const Index need = Index(1) << bank.layers.size();
  if (image.rows() < need || image.cols() < need)
    throw std::invalid_argument("extract_features: image smaller than the pooling pyramid allows");

  FeatureTrace<Scalar> trace;
  std::vector<Plane<Scalar>> current(image.ch.begin(), image.ch.end());
  for (const auto& layer : bank.layers) {
    std::vector<Plane<Scalar>> act(static_cast<std::size_t>(layer.out_channels));
    for (int o = 0; o < layer.out_channels; ++o) {
      Plane<Scalar> pre = Plane<Scalar>::Constant(current[0].rows(), current[0].cols(),
                                                  layer.bias(o));
      for (int i = 0; i < layer.in_channels; ++i)
        detail::accumulate_conv3x3(current[static_cast<std::size_t>(i)],
                                   layer.taps[static_cast<std::size_t>(o * layer.in_channels + i)],
                                   pre);
      act[static_cast<std::size_t>(o)] = pre.max(Scalar(0));
    }
    FeatureLayer<Scalar> pooled;
    pooled.channels.resize(act.size());
    for (std::size_t o = 0; o < act.size(); ++o)
      pooled.channels[o] = detail::avg_pool2(act[o]);
    current = pooled.channels;
    trace.act.push_back(std::move(act));
    trace.pyramid.push_back(std::move(pooled));
  }
  return trace;
}

template <class Scalar>
FeaturePyramid<Scalar> extract_features(const Image<Scalar>& image,
                                        const FeatureBank<Scalar>& bank) {
  return forward_trace(image, bank).pyramid;
}

// Channels-by-positions view of one level; positions enumerate each plane's
// storage order.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> feature_matrix(
    const FeatureLayer<Scalar>& layer) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> f(layer.channel_count(),
                                                          layer.positions());
  for (Index c = 0; c < layer.channel_count(); ++c) {
    const auto& plane = layer.channels[static_cast<std::size_t>(c)];
    f.row(c) = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(plane.data(),
                                                                          plane.size());
  }
  return f;
}

// Unnormalized channel correlations G = F F^T; the size normalization lives
// in the style loss.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gram(const FeatureLayer<Scalar>& layer) {
  const auto f = feature_matrix(layer);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> g =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(f.rows(), f.rows());
  g.template selfadjointView<Eigen::Lower>().rankUpdate(f);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> full =
      g.template selfadjointView<Eigen::Lower>();
  return full;
}

template <class Scalar>
struct LossWeights {
  Scalar alpha = Scalar(1);
  Scalar beta = Scalar(100);
  std::vector<Scalar> layer_weights = {Scalar(1) / Scalar(3), Scalar(1) / Scalar(3),
                                       Scalar(1) / Scalar(3)};
  int content_layer = 1;
};

template <class Scalar>
void validate_weights(const LossWeights<Scalar>& weights, std::size_t layer_count) {
  if (!(weights.alpha >= Scalar(0)) || !(weights.beta >= Scalar(0)))
    throw std::invalid_argument("loss weights: alpha and beta must be >= 0");
  if (weights.alpha == Scalar(0) && weights.beta == Scalar(0))
    throw std::invalid_argument("loss weights: alpha and beta cannot both be zero");
  if (weights.layer_weights.size() != layer_count)
    throw std::invalid_argument("loss weights: layer weight count must match the bank");
  for (const Scalar w : weights.layer_weights)
    if (!(w >= Scalar(0))) throw std::invalid_argument("loss weights: layer weights must be >= 0");
  if (weights.content_layer < 0 || weights.content_layer >= static_cast<int>(layer_count))
    throw std::invalid_argument("loss weights: content layer out of range");
}

template <class Scalar>
struct LossReport {
  Scalar content = Scalar(0);
  Scalar style = Scalar(0);
  Scalar total = Scalar(0);
  std::vector<Scalar> style_per_layer;  // already layer-weighted; sums to style
};

namespace detail {

template <class Scalar>
Scalar content_term(const FeatureLayer<Scalar>& target, const FeatureLayer<Scalar>& generated) {
  if (target.channel_count() != generated.channel_count() ||
      target.positions() != generated.positions())
    throw std::invalid_argument("content loss: feature dimensions do not match");
  Scalar sum = Scalar(0);
  for (Index c = 0; c < target.channel_count(); ++c)
    sum += (generated.channels[static_cast<std::size_t>(c)] -
            target.channels[static_cast<std::size_t>(c)])
               .square()
               .sum();
  return sum / Scalar(2);
}

}  // namespace detail

// Precomputed targets: the fixed side of every loss evaluation in a run.
template <class Scalar>
struct PerceptualTargets {
  FeaturePyramid<Scalar> content;
  // Style Grams normalized by their own spatial size, so the style image may
  // differ in size from the generated one.
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> style_gram_norm;
};

template <class Scalar>
PerceptualTargets<Scalar> make_perceptual_targets(const Image<Scalar>& content,
                                                  const Image<Scalar>& style,
                                                  const FeatureBank<Scalar>& bank) {
  PerceptualTargets<Scalar> targets;
  targets.content = extract_features(content, bank);
  const auto style_pyramid = extract_features(style, bank);
  targets.style_gram_norm.reserve(style_pyramid.size());
  for (const auto& layer : style_pyramid)
    targets.style_gram_norm.push_back(gram(layer) / Scalar(layer.positions()));
  return targets;
}

// Loss of one generated image against fixed targets; when image_gradient is
// non-null it receives the exact d(total)/d(pixels).
template <class Scalar>
LossReport<Scalar> perceptual_loss(const Image<Scalar>& generated, const FeatureBank<Scalar>& bank,
                                   const PerceptualTargets<Scalar>& targets,
                                   const LossWeights<Scalar>& weights,
                                   Image<Scalar>* image_gradient = nullptr) {
  validate_weights(weights, bank.layers.size());
  FeatureTrace<Scalar> trace = forward_trace(generated, bank);
  const FeaturePyramid<Scalar>& pyramid = trace.pyramid;
  if (targets.content.size() != pyramid.size() ||
      targets.style_gram_norm.size() != pyramid.size())
    throw std::invalid_argument("perceptual loss: targets built for a different bank");

  LossReport<Scalar> report;
  const auto lc = static_cast<std::size_t>(weights.content_layer);
  report.content = detail::content_term(targets.content[lc], pyramid[lc]);

  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  std::vector<Matrix> gen_f(pyramid.size());
  std::vector<Matrix> gram_diff(pyramid.size());
  report.style_per_layer.resize(pyramid.size());
  for (std::size_t l = 0; l < pyramid.size(); ++l) {
    gen_f[l] = feature_matrix(pyramid[l]);
    const Scalar n = Scalar(pyramid[l].channel_count());
    const Scalar m = Scalar(pyramid[l].positions());
    Matrix g = Matrix::Zero(gen_f[l].rows(), gen_f[l].rows());
    g.template selfadjointView<Eigen::Lower>().rankUpdate(gen_f[l]);
    gram_diff[l] = Matrix(g.template selfadjointView<Eigen::Lower>()) / m -
                   targets.style_gram_norm[l];
    report.style_per_layer[l] =
        weights.layer_weights[l] / (Scalar(4) * n * n) * gram_diff[l].squaredNorm();
    report.style += report.style_per_layer[l];
  }
  report.total = weights.alpha * report.content + weights.beta * report.style;

  if (!image_gradient) return report;

  // Per-layer feature gradients, then one backward sweep to the pixels.
  std::vector<std::vector<Plane<Scalar>>> grad_pyramid(pyramid.size());
  for (std::size_t l = 0; l < pyramid.size(); ++l) {
    const auto& layer = pyramid[l];
    const Index rows = layer.channels[0].rows(), cols = layer.channels[0].cols();
    const Scalar n = Scalar(layer.channel_count());
    const Scalar m = Scalar(layer.positions());
    // style: d/dF of w/(4 n^2) * || F F^T / m - target ||^2 = w/(n^2 m) * E F
    const Matrix grad_f = (weights.beta * weights.layer_weights[l] / (n * n * m)) *
                          (gram_diff[l] * gen_f[l]);
    grad_pyramid[l].resize(static_cast<std::size_t>(layer.channel_count()));
    for (Index c = 0; c < layer.channel_count(); ++c) {
      Plane<Scalar> plane(rows, cols);
      Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(plane.data(), plane.size()) =
          grad_f.row(c).transpose();
      if (static_cast<int>(l) == weights.content_layer)
        plane += weights.alpha * (layer.channels[static_cast<std::size_t>(c)] -
                                  targets.content[l].channels[static_cast<std::size_t>(c)]);
      grad_pyramid[l][static_cast<std::size_t>(c)] = std::move(plane);
    }
  }

  // Reverse sweep: pool backward, ReLU mask, then convolution transpose.
  std::vector<Plane<Scalar>> grad_current;
  for (int l = static_cast<int>(bank.layers.size()) - 1; l >= 0; --l) {
    const auto& layer = bank.layers[static_cast<std::size_t>(l)];
    const auto& act = trace.act[static_cast<std::size_t>(l)];
    std::vector<Plane<Scalar>>& grad_out = grad_pyramid[static_cast<std::size_t>(l)];
    if (!grad_current.empty())
      for (std::size_t c = 0; c < grad_out.size(); ++c) grad_out[c] += grad_current[c];

    std::vector<Plane<Scalar>> grad_in(static_cast<std::size_t>(layer.in_channels));
    for (auto& g : grad_in) g = Plane<Scalar>::Zero(act[0].rows(), act[0].cols());
    for (int o = 0; o < layer.out_channels; ++o) {
      Plane<Scalar> gpre =
          detail::avg_pool2_backward(grad_out[static_cast<std::size_t>(o)], act[0].rows(),
                                     act[0].cols());
      gpre *= (act[static_cast<std::size_t>(o)] > Scalar(0)).template cast<Scalar>();
      for (int i = 0; i < layer.in_channels; ++i)
        detail::accumulate_conv3x3(
            gpre,
            detail::rot180(layer.taps[static_cast<std::size_t>(o * layer.in_channels + i)]),
            grad_in[static_cast<std::size_t>(i)]);
    }
    grad_current = std::move(grad_in);
  }

  Image<Scalar>& out = *image_gradient;
  out = Image<Scalar>(generated.rows(), generated.cols());
  for (int c = 0; c < 3; ++c) out.ch[static_cast<std::size_t>(c)] = grad_current[static_cast<std::size_t>(c)];
  return report;
}

// One half of the summed squared feature differences at one layer.
template <class Scalar>
Scalar content_loss(const Image<Scalar>& content, const Image<Scalar>& generated,
                    const FeatureBank<Scalar>& bank, int layer) {
  if (content.rows() != generated.rows() || content.cols() != generated.cols())
    throw std::invalid_argument("content_loss: image dimensions do not match");
  if (layer < 0 || layer >= static_cast<int>(bank.layers.size()))
    throw std::invalid_argument("content_loss: layer out of range");
  const auto pc = extract_features(content, bank);
  const auto pg = extract_features(generated, bank);
  return detail::content_term(pc[static_cast<std::size_t>(layer)],
                              pg[static_cast<std::size_t>(layer)]);
}

// Layer-weighted normalized Gram discrepancies; linear in the layer weights.
template <class Scalar>
Scalar style_loss(const Image<Scalar>& style, const Image<Scalar>& generated,
                  const FeatureBank<Scalar>& bank, const std::vector<Scalar>& layer_weights) {
  if (layer_weights.size() != bank.layers.size())
    throw std::invalid_argument("style_loss: layer weight count must match the bank");
  const auto ps = extract_features(style, bank);
  const auto pg = extract_features(generated, bank);
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Scalar loss = Scalar(0);
  for (std::size_t l = 0; l < bank.layers.size(); ++l) {
    const Scalar n = Scalar(pg[l].channel_count());
    const Matrix diff = gram(pg[l]) / Scalar(pg[l].positions()) -
                        gram(ps[l]) / Scalar(ps[l].positions());
    loss += layer_weights[l] / (Scalar(4) * n * n) * diff.squaredNorm();
  }
  return loss;
}

template <class Scalar>
LossReport<Scalar> total_loss(const Image<Scalar>& content, const Image<Scalar>& style,
                              const Image<Scalar>& generated, const FeatureBank<Scalar>& bank,
                              const LossWeights<Scalar>& weights) {
  const auto targets = make_perceptual_targets(content, style, bank);
  return perceptual_loss(generated, bank, targets, weights);
}

template <class Scalar>
Image<Scalar> loss_image_gradient(const Image<Scalar>& content, const Image<Scalar>& style,
                                  const Image<Scalar>& generated, const FeatureBank<Scalar>& bank,
                                  const LossWeights<Scalar>& weights) {
  const auto targets = make_perceptual_targets(content, style, bank);
  Image<Scalar> grad;
  perceptual_loss(generated, bank, targets, weights, &grad);
  return grad;
}

}  // namespace strokefield
