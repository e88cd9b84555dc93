#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "strokefield/renderer.hpp"

#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace strokefield;
namespace ts = test_support;

TEST_CASE("disk distance map is zero at the disk center's pixel") {
  const Disk<double> disk{{2.5, 3.5}, 1.0, {1, 0, 0}};
  const auto map = disk_distance_map(disk, 8, 8);
  CHECK(map.values(3, 2) == 0.0);  // pixel (i=3, j=2) has center (2.5, 3.5)
}

TEST_CASE("disk distance map reproduces the 3-4-5 triangle") {
  const Disk<double> disk{{0.5, 0.5}, 1.0, {1, 0, 0}};
  const auto map = disk_distance_map(disk, 8, 8);
  // pixel center (3.5, 4.5): dx = 3, dy = 4
  CHECK(map.values(4, 3) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("disk distance map is nonnegative and reflection-symmetric") {
  const Disk<double> disk{{4.5, 4.5}, 1.0, {1, 0, 0}};
  const auto map = disk_distance_map(disk, 9, 9);
  for (Index i = 0; i < 9; ++i)
    for (Index j = 0; j < 9; ++j) {
      CHECK(map.values(i, j) >= 0.0);
      CHECK(map.values(i, j) == doctest::Approx(map.values(8 - i, 8 - j)).epsilon(1e-13));
      const double dx = (static_cast<double>(j) + 0.5) - 4.5;
      const double dy = (static_cast<double>(i) + 0.5) - 4.5;
      CHECK(map.values(i, j) == doctest::Approx(std::hypot(dx, dy)).epsilon(1e-13));
    }
}

TEST_CASE("hard assignment marks exactly one winner per pixel") {
  std::vector<DistanceMap<double>> maps;
  maps.push_back(disk_distance_map<double>({{3.0, 3.0}, 1.0, {1, 0, 0}}, 8, 8));
  maps.push_back(disk_distance_map<double>({{6.0, 5.0}, 1.0, {0, 1, 0}}, 8, 8));
  const auto assign = hard_assignment(maps);
  for (Index p = 0; p < assign.weights.rows(); ++p) {
    double sum = 0;
    for (Index n = 0; n < assign.weights.cols(); ++n) {
      const double w = assign.weights(p, n);
      CHECK((w == 0.0 || w == 1.0));
      sum += w;
    }
    CHECK(sum == 1.0);
  }
}

TEST_CASE("soft assignment rows sum to one") {
  std::vector<DistanceMap<double>> maps;
  maps.push_back(disk_distance_map<double>({{3.0, 3.0}, 1.0, {1, 0, 0}}, 8, 8));
  maps.push_back(disk_distance_map<double>({{6.0, 5.0}, 1.0, {0, 1, 0}}, 8, 8));
  maps.push_back(disk_distance_map<double>({{1.0, 6.0}, 1.0, {0, 0, 1}}, 8, 8));
  const auto assign = soft_assignment(maps, 2.0);
  for (Index p = 0; p < assign.weights.rows(); ++p) {
    double sum = 0;
    for (Index n = 0; n < assign.weights.cols(); ++n) {
      CHECK(assign.weights(p, n) >= 0.0);
      sum += assign.weights(p, n);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("zero disks render as constant background") {
  const Color3<double> bg{0.2, 0.4, 0.6};
  const auto canvas = render_disks_hard<double>({}, 6, 7, bg);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 7; ++j) CHECK(ts::same_color(canvas.pixel(i, j), bg));
}

TEST_CASE("non-overlapping disks equal the sum of their masked images") {
  const std::vector<Disk<double>> disks = {{{4.0, 4.0}, 2.5, {0.8, 0.1, 0.2}},
                                           {{12.0, 10.0}, 3.0, {0.1, 0.7, 0.3}}};
  const Color3<double> black = Color3<double>::Zero();
  const auto combined = render_disks_hard(disks, 16, 16, black);

  // Masked image per disk: color where the center distance is inside the
  // radius, zero elsewhere; disks far enough apart never both cover a pixel.
  Image<double> sum(16, 16, black);
  for (const auto& disk : disks)
    for (Index i = 0; i < 16; ++i)
      for (Index j = 0; j < 16; ++j) {
        const double dx = (static_cast<double>(j) + 0.5) - disk.center.x();
        const double dy = (static_cast<double>(i) + 0.5) - disk.center.y();
        if (std::hypot(dx, dy) < disk.radius)
          sum.set_pixel(i, j, sum.pixel(i, j) + disk.color);
      }
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j) CHECK(ts::same_color(combined.pixel(i, j), sum.pixel(i, j)));
}

TEST_CASE("overlapping disks: nearer center wins, ties to the lower index") {
  const std::vector<Disk<double>> disks = {{{6.0, 8.0}, 4.0, {1.0, 0.0, 0.0}},
                                           {{10.0, 8.0}, 4.0, {0.0, 1.0, 0.0}}};
  const Color3<double> bg{1, 1, 1};
  const auto canvas = render_disks_hard(disks, 16, 16, bg);
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j) {
      const Vec2<double> pc{static_cast<double>(j) + 0.5, static_cast<double>(i) + 0.5};
      double best = std::numeric_limits<double>::infinity();
      int winner = -1;
      for (int n = 0; n < 2; ++n) {
        const double d = (pc - disks[static_cast<std::size_t>(n)].center).norm();
        if (d < disks[static_cast<std::size_t>(n)].radius && d < best) {
          best = d;
          winner = n;
        }
      }
      const Color3<double> expected =
          winner < 0 ? bg : disks[static_cast<std::size_t>(winner)].color;
      CHECK(ts::same_color(canvas.pixel(i, j), expected));
    }
}

TEST_CASE("stroke distance to a single sample is the point distance") {
  const std::vector<Vec2<double>> samples = {{3.0, 4.0}};
  const auto [d, idx] = stroke_distance<double>(samples, {0.0, 0.0});
  CHECK(d == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(idx == 0);
}

TEST_CASE("stroke distance is zero when the pixel sits on a sample") {
  const std::vector<Vec2<double>> samples = {{1.0, 1.0}, {2.5, 3.5}, {4.0, 4.0}};
  const auto [d, idx] = stroke_distance<double>(samples, {2.5, 3.5});
  CHECK(d == 0.0);
  CHECK(idx == 1);
}

TEST_CASE("stroke distance matches a brute-force min and prefers low indices on ties") {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Vec2<double>> samples;
    for (int k = 0; k < 10; ++k) samples.push_back({rng.uniform(0, 32), rng.uniform(0, 32)});
    const Vec2<double> p{rng.uniform(0, 32), rng.uniform(0, 32)};
    const auto [d, idx] = stroke_distance<double>(samples, p);
    double best = std::numeric_limits<double>::infinity();
    int expected = -1;
    for (int k = 0; k < 10; ++k) {
      const double dk = (samples[static_cast<std::size_t>(k)] - p).norm();
      if (dk < best) {
        best = dk;
        expected = k;
      }
    }
    CHECK(d == doctest::Approx(best).epsilon(1e-14));
    CHECK(idx == expected);
  }

  const std::vector<Vec2<double>> tied = {{0.0, 2.0}, {0.0, -2.0}};
  CHECK(stroke_distance<double>(tied, {0.0, 0.0}).second == 0);
}

TEST_CASE("knn with K >= N lists every stroke in every tile") {
  Rng rng(31);
  const auto field = ts::random_field(rng, 5, 48, 48);
  RenderConfig<double> config;
  config.knn = 9;
  config.samples_per_curve = 4;
  const auto grid = knn_candidates(field, config);
  for (Index t = 0; t < grid.tile_count(); ++t) {
    const auto& c = grid.tiles[static_cast<std::size_t>(t)];
    REQUIRE(c.size() == 5);
    for (int n = 0; n < 5; ++n) CHECK(c[static_cast<std::size_t>(n)] == n);
  }
}

TEST_CASE("knn keeps the nearest stroke for a tile sitting on it") {
  StrokeField<double> field;
  field.height = 48;
  field.width = 48;
  for (const auto& loc : {Vec2<double>{8.0, 8.0}, Vec2<double>{40.0, 8.0}, Vec2<double>{24.0, 40.0}}) {
    Stroke<double> s;
    s.location = loc;
    s.offsets = {Vec2<double>{0, 0}, Vec2<double>{1, 0}, Vec2<double>{2, 0}};
    s.width = 1.0;
    s.color = {0.5, 0.5, 0.5};
    field.strokes.push_back(s);
  }
  RenderConfig<double> config;
  config.knn = 1;
  config.tile_size = 16;
  const auto grid = knn_candidates(field, config);
  // Tile (row 2, col 1) has center (24, 40): stroke 2's home.
  const auto& c = grid.tiles[static_cast<std::size_t>(2 * grid.grid_cols + 1)];
  REQUIRE(c.size() == 1);
  CHECK(c[0] == 2);
}

TEST_CASE("knn candidate lists are duplicate-free subsets of the stroke range") {
  Rng rng(37);
  const auto field = ts::random_field(rng, 12, 64, 40);
  RenderConfig<double> config;
  config.knn = 4;
  const auto grid = knn_candidates(field, config);
  for (const auto& c : grid.tiles) {
    CHECK(c.size() <= 4);
    CHECK(std::is_sorted(c.begin(), c.end()));
    CHECK(std::adjacent_find(c.begin(), c.end()) == c.end());
    for (const auto n : c) {
      CHECK(n >= 0);
      CHECK(n < 12);
    }
  }
}

TEST_CASE("empty field renders as background, hard and soft") {
  StrokeField<double> field;
  field.height = 10;
  field.width = 12;
  RenderConfig<double> config;
  config.background = {0.3, 0.5, 0.7};
  const auto hard = render_hard(field, config);
  const auto [soft, tape] = render_soft(field, config);
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 12; ++j) {
      CHECK(ts::same_color(hard.pixel(i, j), config.background));
      CHECK(ts::same_color(soft.pixel(i, j), config.background));
    }
}

TEST_CASE("a straight stroke through the canvas paints pixels within its width") {
  StrokeField<double> field;
  field.height = 32;
  field.width = 32;
  Stroke<double> s;
  s.location = {16.0, 16.0};
  s.offsets = {Vec2<double>{-14.0, 0.0}, Vec2<double>{0.0, 0.0}, Vec2<double>{14.0, 0.0}};
  s.width = 3.0;
  s.color = {0.9, 0.1, 0.1};
  field.strokes.push_back(s);
  RenderConfig<double> config;
  const auto canvas = render_hard(field, config);
  const auto expected = ts::oracle_render_hard(field, config);
  for (Index i = 0; i < 32; ++i)
    for (Index j = 0; j < 32; ++j)
      CHECK(ts::same_color(canvas.pixel(i, j), expected.pixel(i, j)));
}

TEST_CASE("two parallel overlapping strokes split along the equidistant locus") {
  StrokeField<double> field;
  field.height = 24;
  field.width = 32;
  for (const double y : {10.0, 14.0}) {
    Stroke<double> s;
    s.location = {16.0, y};
    s.offsets = {Vec2<double>{-12.0, 0.0}, Vec2<double>{0.0, 0.0}, Vec2<double>{12.0, 0.0}};
    s.width = 4.0;
    s.color = y < 12.0 ? Color3<double>{1, 0, 0} : Color3<double>{0, 0, 1};
    field.strokes.push_back(s);
  }
  RenderConfig<double> config;
  const auto canvas = render_hard(field, config);
  const auto expected = ts::oracle_render_hard(field, config);
  for (Index i = 0; i < 24; ++i)
    for (Index j = 0; j < 32; ++j)
      CHECK(ts::same_color(canvas.pixel(i, j), expected.pixel(i, j)));
}

TEST_CASE("soft render reaches the stroke color at a sample point under high sharpness") {
  StrokeField<double> field;
  field.height = 16;
  field.width = 16;
  Stroke<double> s;
  s.location = {8.5, 8.5};  // pixel (8, 8) center
  s.offsets = {Vec2<double>{0, 0}, Vec2<double>{0, 0}, Vec2<double>{0, 0}};
  s.width = 2.0;
  s.color = {0.25, 0.5, 0.75};
  field.strokes.push_back(s);
  RenderConfig<double> config;
  config.mask_sharpness = 10.0;  // gamma_m * width = 20
  const auto [canvas, tape] = render_soft(field, config);
  CHECK((canvas.pixel(8, 8) - s.color).template lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("soft render stays within [0,1] on random fields") {
  Rng rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    const auto field = ts::random_field(rng, 12, 40, 40);
    RenderConfig<double> config;
    config.samples_per_curve = 6;
    const auto [canvas, tape] = render_soft(field, config);
    for (int c = 0; c < 3; ++c) {
      CHECK(canvas.ch[static_cast<std::size_t>(c)].minCoeff() >= 0.0);
      CHECK(canvas.ch[static_cast<std::size_t>(c)].maxCoeff() <= 1.0);
    }
  }
}

TEST_CASE("pruned soft render matches the unpruned oracle when K covers N") {
  Rng rng(43);
  for (int trial = 0; trial < 3; ++trial) {
    const auto field = ts::random_field(rng, 9, 33, 47);  // clipped edge tiles included
    RenderConfig<double> config;
    config.knn = 9;
    config.samples_per_curve = 5;
    const auto [canvas, tape] = render_soft(field, config);
    const auto expected = ts::oracle_render_soft(field, config);
    for (int c = 0; c < 3; ++c)
      CHECK((canvas.ch[static_cast<std::size_t>(c)] - expected.ch[static_cast<std::size_t>(c)])
                .abs()
                .maxCoeff() < 1e-12);
  }
}

TEST_CASE("permuting stroke order barely moves the soft render") {
  Rng rng(47);
  const auto field = ts::random_field(rng, 10, 32, 32);
  RenderConfig<double> config;
  config.knn = 10;
  StrokeField<double> permuted = field;
  std::rotate(permuted.strokes.begin(), permuted.strokes.begin() + 3, permuted.strokes.end());
  const auto a = render_soft(field, config).first;
  const auto b = render_soft(permuted, config).first;
  for (int c = 0; c < 3; ++c)
    CHECK((a.ch[static_cast<std::size_t>(c)] - b.ch[static_cast<std::size_t>(c)])
              .abs()
              .maxCoeff() < 1e-9);
}

TEST_CASE("sharpened soft render approaches the hard render away from boundaries") {
  Rng rng(53);
  const auto field = ts::random_field(rng, 8, 48, 48);
  RenderConfig<double> base;
  base.knn = 8;
  RenderConfig<double> sharp = base;
  sharp.mask_sharpness *= 1000.0;
  sharp.assign_sharpness *= 1000.0;

  const auto hard = render_hard(field, base);
  const auto soft = render_soft(field, sharp).first;
  const double band = 3.0 / base.mask_sharpness;

  std::vector<std::vector<Vec2<double>>> spines;
  for (const auto& s : field.strokes) spines.push_back(ts::oracle_spine(s, base.samples_per_curve));

  int checked = 0;
  for (Index i = 0; i < 48; ++i)
    for (Index j = 0; j < 48; ++j) {
      const Vec2<double> pc{static_cast<double>(j) + 0.5, static_cast<double>(i) + 0.5};
      std::vector<double> dist;
      for (const auto& spine : spines) dist.push_back(ts::oracle_min_distance(spine, pc));
      bool excluded = false;
      for (std::size_t n = 0; n < dist.size() && !excluded; ++n) {
        if (std::abs(dist[n] - field.strokes[n].width) < band) excluded = true;
        for (std::size_t m = n + 1; m < dist.size() && !excluded; ++m)
          if (std::abs(dist[n] - dist[m]) < band) excluded = true;
      }
      if (excluded) continue;
      ++checked;
      CHECK((soft.pixel(i, j) - hard.pixel(i, j)).template lpNorm<Eigen::Infinity>() <= 1e-2);
    }
  CHECK(checked > 500);  // the bands must not swallow the whole canvas
}

TEST_CASE("zero upstream gives zero gradients") {
  Rng rng(59);
  const auto field = ts::random_field(rng, 6, 24, 24);
  RenderConfig<double> config;
  const auto [canvas, tape] = render_soft(field, config);
  const Image<double> zeros(24, 24);
  const ParamMatrix<double> grads = render_vjp(field, config, tape, zeros);
  CHECK(grads.rows() == 6);
  CHECK(grads.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("strokes outside every tile touched by the upstream get exactly zero gradient") {
  StrokeField<double> field;
  field.height = 64;
  field.width = 64;
  for (const auto& loc : {Vec2<double>{8.0, 8.0}, Vec2<double>{56.0, 56.0}}) {
    Stroke<double> s;
    s.location = loc;
    s.offsets = {Vec2<double>{-2, 0}, Vec2<double>{0, 1}, Vec2<double>{2, 0}};
    s.width = 2.0;
    s.color = {0.2, 0.6, 0.4};
    field.strokes.push_back(s);
  }
  RenderConfig<double> config;
  config.knn = 1;  // tiles near one stroke never list the other
  const auto [canvas, tape] = render_soft(field, config);
  Image<double> upstream(64, 64);
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j) upstream.set_pixel(i, j, {1.0, 1.0, 1.0});
  const ParamMatrix<double> grads = render_vjp(field, config, tape, upstream);
  CHECK(grads.row(0).cwiseAbs().maxCoeff() > 0.0);
  CHECK(grads.row(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vjp rejects a tape from a different configuration") {
  Rng rng(61);
  const auto field = ts::random_field(rng, 4, 16, 16);
  RenderConfig<double> config;
  const auto [canvas, tape] = render_soft(field, config);
  RenderConfig<double> other = config;
  other.mask_sharpness = 9.0;
  const Image<double> upstream(16, 16, {1, 1, 1});
  CHECK_THROWS_AS(render_vjp(field, other, tape, upstream), std::invalid_argument);

  auto shrunk = field;
  shrunk.strokes.pop_back();
  CHECK_THROWS_AS(render_vjp(shrunk, config, tape, upstream), std::invalid_argument);
}

TEST_CASE("thread count does not change the render or its gradients") {
  Rng rng(67);
  const auto field = ts::random_field(rng, 14, 48, 40);
  RenderConfig<double> one;
  one.threads = 1;
  RenderConfig<double> four;
  four.threads = 4;
  const auto [canvas1, tape1] = render_soft(field, one);
  const auto [canvas4, tape4] = render_soft(field, four);
  for (int c = 0; c < 3; ++c)
    CHECK((canvas1.ch[static_cast<std::size_t>(c)] - canvas4.ch[static_cast<std::size_t>(c)])
              .abs()
              .maxCoeff() == 0.0);

  Rng grng(68);
  const Image<double> upstream = ts::random_image(grng, 48, 40, -1.0, 1.0);
  const auto g1 = render_vjp(field, one, tape1, upstream);
  const auto g4 = render_vjp(field, four, tape4, upstream);
  CHECK((g1 - g4).cwiseAbs().maxCoeff() == 0.0);
}
