#pragma once

#include "strokefield/parallel.hpp"
#include "strokefield/stroke.hpp"
#include "strokefield/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace strokefield {

template <class Scalar>
struct Disk {
  Vec2<Scalar> center = Vec2<Scalar>::Zero();
  Scalar radius = Scalar(1);
  Color3<Scalar> color = Color3<Scalar>::Zero();
};

// Per-pixel Euclidean distances to one primitive's geometry.
template <class Scalar>
struct DistanceMap {
  Plane<Scalar> values;
  int index = -1;  // owning disk or stroke
};

// Per-pixel weights over a candidate list (rows: pixels, cols: candidates).
// Hard assignments are one-hot rows; soft assignments sum to 1 per row.
template <class Scalar>
struct AssignmentTensor {
  Plane<Scalar> weights;
};

template <class Scalar>
struct RenderConfig {
  int samples_per_curve = 10;
  int knn = 20;
  Scalar mask_sharpness = Scalar(5);    // 1/px, sigmoid slope of the width mask
  Scalar assign_sharpness = Scalar(2);  // 1/px, softmax slope of the assignment
  Color3<Scalar> background = Color3<Scalar>::Ones();
  int tile_size = 16;
  int threads = 0;  // <= 0: hardware concurrency
};

template <class Scalar>
void validate_config(const RenderConfig<Scalar>& config) {
  if (config.samples_per_curve < 2)
    throw std::invalid_argument("render config: samples_per_curve must be >= 2");
  if (config.knn < 1) throw std::invalid_argument("render config: knn must be >= 1");
  if (!(config.mask_sharpness > Scalar(0)) || !(config.assign_sharpness > Scalar(0)))
    throw std::invalid_argument("render config: sharpness constants must be > 0");
  if (config.tile_size < 1) throw std::invalid_argument("render config: tile_size must be >= 1");
  for (int c = 0; c < 3; ++c)
    if (!(config.background[c] >= Scalar(0) && config.background[c] <= Scalar(1)))
      throw std::invalid_argument("render config: background channel out of [0, 1]");
}

// Saturates cleanly for any argument magnitude.
template <class Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <class Scalar>
DistanceMap<Scalar> disk_distance_map(const Disk<Scalar>& disk, Index rows, Index cols) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("disk_distance_map: canvas dimensions must be >= 1");
  using Col = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using Row = Eigen::Array<Scalar, 1, Eigen::Dynamic>;
  // Squared distance separates along the axes.
  Col dy2 = (Col::LinSpaced(rows, Scalar(0.5), Scalar(rows) - Scalar(0.5)) - disk.center.y())
                .square();
  Row dx2 = (Row::LinSpaced(cols, Scalar(0.5), Scalar(cols) - Scalar(0.5)) - disk.center.x())
                .square();
  DistanceMap<Scalar> map;
  map.values = (dy2.replicate(1, cols) + dx2.replicate(rows, 1)).sqrt();
  return map;
}

// Dense assignment over whole distance maps: row p = flattened
// pixel (row-major), column n = candidate. Hard rows are one-hot on the
// nearest candidate (lowest index on ties).
template <class Scalar>
AssignmentTensor<Scalar> hard_assignment(const std::vector<DistanceMap<Scalar>>& maps) {
  if (maps.empty()) throw std::invalid_argument("hard_assignment: need at least one map");
  const Index rows = maps[0].values.rows(), cols = maps[0].values.cols();
  AssignmentTensor<Scalar> tensor;
  tensor.weights = Plane<Scalar>::Zero(rows * cols, static_cast<Index>(maps.size()));
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      int best = 0;
      for (std::size_t n = 1; n < maps.size(); ++n)
        if (maps[n].values(i, j) < maps[static_cast<std::size_t>(best)].values(i, j))
          best = static_cast<int>(n);
      tensor.weights(i * cols + j, best) = Scalar(1);
    }
  }
  return tensor;
}

// Tempered-softmax relaxation of hard_assignment; rows sum to 1.
template <class Scalar>
AssignmentTensor<Scalar> soft_assignment(const std::vector<DistanceMap<Scalar>>& maps,
                                         Scalar sharpness) {
  if (maps.empty()) throw std::invalid_argument("soft_assignment: need at least one map");
  const Index rows = maps[0].values.rows(), cols = maps[0].values.cols();
  AssignmentTensor<Scalar> tensor;
  tensor.weights.resize(rows * cols, static_cast<Index>(maps.size()));
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      const Index p = i * cols + j;
      Scalar zmax = -std::numeric_limits<Scalar>::infinity();
      for (std::size_t n = 0; n < maps.size(); ++n)
        zmax = std::max(zmax, -sharpness * maps[n].values(i, j));
      Scalar sum = Scalar(0);
      for (std::size_t n = 0; n < maps.size(); ++n) {
        const Scalar e = std::exp(-sharpness * maps[n].values(i, j) - zmax);
        tensor.weights(p, static_cast<Index>(n)) = e;
        sum += e;
      }
      tensor.weights.row(p) /= sum;
    }
  }
  return tensor;
}

// Each pixel takes the nearest disk among those covering it (distance <
// radius); ties keep the lowest index. Uncovered pixels take the background.
template <class Scalar>
Image<Scalar> render_disks_hard(const std::vector<Disk<Scalar>>& disks, Index rows, Index cols,
                                const Color3<Scalar>& background) {
  Image<Scalar> canvas(rows, cols, background);
  std::vector<DistanceMap<Scalar>> maps;
  maps.reserve(disks.size());
  for (const auto& d : disks) {
    if (!(d.radius > Scalar(0))) throw std::invalid_argument("disk: radius must be > 0");
    maps.push_back(disk_distance_map(d, rows, cols));
  }
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      int best = -1;
      Scalar best_d = std::numeric_limits<Scalar>::infinity();
      for (std::size_t n = 0; n < disks.size(); ++n) {
        const Scalar d = maps[n].values(i, j);
        if (d < disks[n].radius && d < best_d) {
          best = static_cast<int>(n);
          best_d = d;
        }
      }
      if (best >= 0) canvas.set_pixel(i, j, disks[static_cast<std::size_t>(best)].color);
    }
  }
  return canvas;
}

// Smallest distance from a point to the sampled spine, plus the argmin sample
// (lowest index on ties).
template <class Scalar>
std::pair<Scalar, int> stroke_distance(std::span<const Vec2<Scalar>> samples,
                                       const Vec2<Scalar>& point) {
  if (samples.empty())
    throw std::invalid_argument("stroke_distance: need at least one sample point");
  Scalar best = std::numeric_limits<Scalar>::infinity();
  int best_index = 0;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Scalar d2 = (samples[s] - point).squaredNorm();
    if (d2 < best) {
      best = d2;
      best_index = static_cast<int>(s);
    }
  }
  return {std::sqrt(best), best_index};
}

struct TileRect {
  Index row0 = 0, col0 = 0, rows = 0, cols = 0;
};

// Candidate stroke ids per pixel tile, each list ascending by stroke index.
struct CandidateGrid {
  Index grid_rows = 0, grid_cols = 0;
  int tile_size = 0;
  Index height = 0, width = 0;
  std::vector<std::vector<int>> tiles;  // row-major over the tile grid

  Index tile_count() const { return grid_rows * grid_cols; }

  TileRect rect(Index tile) const {
    const Index tr = tile / grid_cols;
    const Index tc = tile % grid_cols;
    TileRect r;
    r.row0 = tr * tile_size;
    r.col0 = tc * tile_size;
    r.rows = std::min<Index>(tile_size, height - r.row0);
    r.cols = std::min<Index>(tile_size, width - r.col0);
    return r;
  }
};

namespace detail {

template <class Scalar>
std::vector<std::vector<Vec2<Scalar>>> sample_all(const StrokeField<Scalar>& field, int samples) {
  std::vector<std::vector<Vec2<Scalar>>> out(field.strokes.size());
  for (std::size_t n = 0; n < field.strokes.size(); ++n)
    out[n] = sample_stroke(field.strokes[n], samples);
  return out;
}

template <class Scalar>
std::uint64_t render_fingerprint(const StrokeField<Scalar>& field,
                                 const RenderConfig<Scalar>& config) {
  const ParamMatrix<Scalar> params = pack(field);
  std::uint64_t h = fnv1a(params.data(), static_cast<std::size_t>(params.size()) * sizeof(Scalar));
  const double knobs[] = {static_cast<double>(config.samples_per_curve),
                          static_cast<double>(config.knn),
                          static_cast<double>(config.mask_sharpness),
                          static_cast<double>(config.assign_sharpness),
                          static_cast<double>(config.background[0]),
                          static_cast<double>(config.background[1]),
                          static_cast<double>(config.background[2]),
                          static_cast<double>(config.tile_size),
                          static_cast<double>(field.height),
                          static_cast<double>(field.width)};
  return fnv1a(knobs, sizeof(knobs), h);
}

}  // namespace detail

// K nearest strokes per tile, measured from the tile center to each stroke's
// sample-point set. Selection is not differentiated; it only limits which
// strokes a pixel sees.
template <class Scalar>
CandidateGrid knn_candidates(const StrokeField<Scalar>& field, const RenderConfig<Scalar>& config) {
  validate_config(config);
  CandidateGrid grid;
  grid.tile_size = config.tile_size;
  grid.height = field.height;
  grid.width = field.width;
  grid.grid_rows = (field.height + config.tile_size - 1) / config.tile_size;
  grid.grid_cols = (field.width + config.tile_size - 1) / config.tile_size;
  grid.tiles.assign(static_cast<std::size_t>(grid.tile_count()), {});

  const Index n_strokes = field.size();
  if (n_strokes == 0) return grid;

  const auto samples = detail::sample_all(field, config.samples_per_curve);
  const int k = static_cast<int>(std::min<Index>(config.knn, n_strokes));

  parallel_for(static_cast<int>(grid.tile_count()), config.threads, [&](int tile) {
    const TileRect r = grid.rect(tile);
    const Vec2<Scalar> center(Scalar(r.col0) + Scalar(r.cols) / Scalar(2),
                              Scalar(r.row0) + Scalar(r.rows) / Scalar(2));
    std::vector<std::pair<Scalar, int>> ranked(static_cast<std::size_t>(n_strokes));
    for (Index n = 0; n < n_strokes; ++n) {
      Scalar best = std::numeric_limits<Scalar>::infinity();
      for (const auto& p : samples[static_cast<std::size_t>(n)])
        best = std::min(best, (p - center).squaredNorm());
      ranked[static_cast<std::size_t>(n)] = {best, static_cast<int>(n)};
    }
    std::partial_sort(ranked.begin(), ranked.begin() + k, ranked.end());
    auto& ids = grid.tiles[static_cast<std::size_t>(tile)];
    ids.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) ids[static_cast<std::size_t>(i)] = ranked[static_cast<std::size_t>(i)].second;
    std::sort(ids.begin(), ids.end());
  });
  return grid;
}

// Nearest candidate wins, then its width decides coverage; everything else is
// background.
template <class Scalar>
Image<Scalar> render_hard(const StrokeField<Scalar>& field, const RenderConfig<Scalar>& config) {
  validate_field(field);
  validate_config(config);
  Image<Scalar> canvas(field.height, field.width, config.background);
  if (field.size() == 0) return canvas;

  const auto samples = detail::sample_all(field, config.samples_per_curve);
  const CandidateGrid grid = knn_candidates(field, config);

  parallel_for(static_cast<int>(grid.tile_count()), config.threads, [&](int tile) {
    const TileRect r = grid.rect(tile);
    const auto& ids = grid.tiles[static_cast<std::size_t>(tile)];
    if (ids.empty()) return;
    for (Index i = r.row0; i < r.row0 + r.rows; ++i) {
      for (Index j = r.col0; j < r.col0 + r.cols; ++j) {
        const Vec2<Scalar> pc = pixel_center<Scalar>(i, j);
        int best = -1;
        Scalar best_d2 = std::numeric_limits<Scalar>::infinity();
        for (const int n : ids) {
          Scalar d2 = std::numeric_limits<Scalar>::infinity();
          for (const auto& p : samples[static_cast<std::size_t>(n)])
            d2 = std::min(d2, (p - pc).squaredNorm());
          if (d2 < best_d2) {
            best_d2 = d2;
            best = n;
          }
        }
        const auto& s = field.strokes[static_cast<std::size_t>(best)];
        if (std::sqrt(best_d2) <= s.width) canvas.set_pixel(i, j, s.color);
      }
    }
  });
  return canvas;
}

// Forward-pass bookkeeping for the exact backward pass. Per tile and pixel it
// keeps each candidate's spine distance, argmin sample, coverage and
// assignment weight; enough to reproduce the forward output.
template <class Scalar>
struct RenderTape {
  struct Tile {
    TileRect rect;
    std::vector<int> candidates;  // ascending stroke ids
    // (pixels in tile, candidates); pixel index = local_row * cols + local_col
    Plane<Scalar> dist;
    Plane<Scalar> coverage;
    Plane<Scalar> assign;
    Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic> nearest_sample;
  };
  Index height = 0, width = 0;
  std::uint64_t fingerprint = 0;
  std::vector<Tile> tiles;
};

// Relaxed rasterization: coverage c_n = sigmoid(gamma_m (width_n - d_n)),
// assignment a_n = softmax(-gamma_a d_n) over the pixel's candidates, output
// = sum a_n c_n color_n + (1 - sum a_n c_n) background. The blend is convex,
// so channels stay in [0, 1] with no clamp.
template <class Scalar>
std::pair<Image<Scalar>, RenderTape<Scalar>> render_soft(const StrokeField<Scalar>& field,
                                                         const RenderConfig<Scalar>& config) {
  validate_field(field);
  validate_config(config);
  Image<Scalar> canvas(field.height, field.width, config.background);
  RenderTape<Scalar> tape;
  tape.height = field.height;
  tape.width = field.width;
  tape.fingerprint = detail::render_fingerprint(field, config);
  if (field.size() == 0) return {std::move(canvas), std::move(tape)};

  const auto samples = detail::sample_all(field, config.samples_per_curve);
  const CandidateGrid grid = knn_candidates(field, config);
  tape.tiles.resize(static_cast<std::size_t>(grid.tile_count()));

  parallel_for(static_cast<int>(grid.tile_count()), config.threads, [&](int tile) {
    const TileRect r = grid.rect(tile);
    const auto& ids = grid.tiles[static_cast<std::size_t>(tile)];
    auto& rec = tape.tiles[static_cast<std::size_t>(tile)];
    rec.rect = r;
    rec.candidates = ids;
    if (ids.empty()) return;  // background already in place
    const Index pixels = r.rows * r.cols;
    const Index k = static_cast<Index>(ids.size());
    rec.dist.resize(pixels, k);
    rec.coverage.resize(pixels, k);
    rec.assign.resize(pixels, k);
    rec.nearest_sample.resize(pixels, k);

    for (Index lr = 0; lr < r.rows; ++lr) {
      for (Index lc = 0; lc < r.cols; ++lc) {
        const Index px = lr * r.cols + lc;
        const Vec2<Scalar> pc = pixel_center<Scalar>(r.row0 + lr, r.col0 + lc);
        Scalar zmax = -std::numeric_limits<Scalar>::infinity();
        for (Index c = 0; c < k; ++c) {
          const int n = ids[static_cast<std::size_t>(c)];
          const auto [d, s] =
              stroke_distance<Scalar>(samples[static_cast<std::size_t>(n)], pc);
          rec.dist(px, c) = d;
          rec.nearest_sample(px, c) = s;
          const auto& stroke = field.strokes[static_cast<std::size_t>(n)];
          rec.coverage(px, c) = sigmoid(config.mask_sharpness * (stroke.width - d));
          zmax = std::max(zmax, -config.assign_sharpness * d);
        }
        Scalar z_sum = Scalar(0);
        for (Index c = 0; c < k; ++c) {
          const Scalar e = std::exp(-config.assign_sharpness * rec.dist(px, c) - zmax);
          rec.assign(px, c) = e;
          z_sum += e;
        }
        Color3<Scalar> acc = Color3<Scalar>::Zero();
        Scalar covered = Scalar(0);
        for (Index c = 0; c < k; ++c) {
          rec.assign(px, c) /= z_sum;
          const Scalar w = rec.assign(px, c) * rec.coverage(px, c);
          covered += w;
          acc += w * field.strokes[static_cast<std::size_t>(ids[static_cast<std::size_t>(c)])].color;
        }
        acc += (Scalar(1) - covered) * config.background;
        canvas.set_pixel(r.row0 + lr, r.col0 + lc, acc);
      }
    }
  });
  return {std::move(canvas), std::move(tape)};
}

// Vector-Jacobian product of render_soft: upstream per-pixel gradients in,
// N x 12 parameter gradients out. Gradients reach each distance through its
// argmin sample point (subgradient on ties, none at d = 0) and never flow
// into candidate selection.
template <class Scalar>
ParamMatrix<Scalar> render_vjp(const StrokeField<Scalar>& field, const RenderConfig<Scalar>& config,
                               const RenderTape<Scalar>& tape, const Image<Scalar>& upstream) {
  validate_field(field);
  validate_config(config);
  if (tape.fingerprint != detail::render_fingerprint(field, config) ||
      tape.height != field.height || tape.width != field.width)
    throw std::invalid_argument("render_vjp: tape does not match this field and config");
  if (upstream.rows() != field.height || upstream.cols() != field.width)
    throw std::invalid_argument("render_vjp: upstream dimensions do not match the canvas");

  ParamMatrix<Scalar> grads = ParamMatrix<Scalar>::Zero(field.size(), param::kCount);
  if (field.size() == 0 || tape.tiles.empty()) return grads;

  const auto samples = detail::sample_all(field, config.samples_per_curve);
  const int tile_count = static_cast<int>(tape.tiles.size());
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, param::kCount, Eigen::RowMajor>> local(
      static_cast<std::size_t>(tile_count));

  parallel_for(tile_count, config.threads, [&](int tile) {
    const auto& rec = tape.tiles[static_cast<std::size_t>(tile)];
    const Index k = static_cast<Index>(rec.candidates.size());
    if (k == 0) return;
    auto& acc = local[static_cast<std::size_t>(tile)];
    acc.setZero(k, param::kCount);
    const TileRect& r = rec.rect;
    const Scalar dt = Scalar(1) / Scalar(config.samples_per_curve - 1);

    for (Index lr = 0; lr < r.rows; ++lr) {
      for (Index lc = 0; lc < r.cols; ++lc) {
        const Index px = lr * r.cols + lc;
        const Index row = r.row0 + lr;
        const Index col = r.col0 + lc;
        const Color3<Scalar> g = upstream.pixel(row, col);
        const Vec2<Scalar> pc = pixel_center<Scalar>(row, col);

        // q_n: upstream-weighted advantage of stroke n over the background
        Scalar blended = Scalar(0);  // sum_m a_m c_m q_m
        for (Index c = 0; c < k; ++c) {
          const int n = rec.candidates[static_cast<std::size_t>(c)];
          const auto& stroke = field.strokes[static_cast<std::size_t>(n)];
          const Scalar q = g.dot(stroke.color - config.background);
          blended += rec.assign(px, c) * rec.coverage(px, c) * q;
        }
        for (Index c = 0; c < k; ++c) {
          const int n = rec.candidates[static_cast<std::size_t>(c)];
          const auto& stroke = field.strokes[static_cast<std::size_t>(n)];
          const Scalar a = rec.assign(px, c);
          const Scalar cov = rec.coverage(px, c);
          const Scalar d = rec.dist(px, c);
          const Scalar q = g.dot(stroke.color - config.background);

          // color: out_c gains a * cov * color_n[c]
          for (int ch = 0; ch < 3; ++ch) acc(c, param::kColor + ch) += g[ch] * a * cov;

          const Scalar dcov = cov * (Scalar(1) - cov);  // sigmoid slope
          // width through coverage
          acc(c, param::kWidth) += config.mask_sharpness * dcov * a * q;
          // distance through coverage and through the softmax
          const Scalar dL_dd = -config.mask_sharpness * dcov * a * q -
                               config.assign_sharpness * a * (cov * q - blended);
          if (d > Scalar(0) && dL_dd != Scalar(0)) {
            const int s = rec.nearest_sample(px, c);
            const Vec2<Scalar> sp =
                samples[static_cast<std::size_t>(n)][static_cast<std::size_t>(s)];
            const Vec2<Scalar> unit = (sp - pc) / d;
            const Vec2<Scalar> dL_dsample = dL_dd * unit;
            const auto basis = bezier_basis(Scalar(s) * dt);
            acc(c, param::kLocX) += dL_dsample.x();
            acc(c, param::kLocY) += dL_dsample.y();
            for (int kk = 0; kk < 3; ++kk) {
              acc(c, param::kOffset0 + 2 * kk) += basis[static_cast<std::size_t>(kk)] * dL_dsample.x();
              acc(c, param::kOffset0 + 2 * kk + 1) += basis[static_cast<std::size_t>(kk)] * dL_dsample.y();
            }
          }
        }
      }
    }
  });

  // Deterministic reduction in tile order keeps the result independent of
  // the thread count.
  for (int tile = 0; tile < tile_count; ++tile) {
    const auto& rec = tape.tiles[static_cast<std::size_t>(tile)];
    const auto& acc = local[static_cast<std::size_t>(tile)];
    for (Index c = 0; c < static_cast<Index>(rec.candidates.size()); ++c)
      grads.row(rec.candidates[static_cast<std::size_t>(c)]) += acc.row(c);
  }
  return grads;
}

}  // namespace strokefield
