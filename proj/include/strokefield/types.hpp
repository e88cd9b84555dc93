#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <stdexcept>

namespace strokefield {

using Index = Eigen::Index;

template <class Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

template <class Scalar>
using Color3 = Eigen::Matrix<Scalar, 3, 1>;

template <class Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// One row per stroke: location(2), control offsets(6), width(1), color(3).
template <class Scalar>
using ParamMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 12, Eigen::RowMajor>;

namespace param {
inline constexpr int kLocX = 0;
inline constexpr int kLocY = 1;
inline constexpr int kOffset0 = 2;  // pairs (x, y) for offsets 0..2
inline constexpr int kWidth = 8;
inline constexpr int kColor = 9;
inline constexpr int kCount = 12;
}  // namespace param

// Planar RGB raster. Pixel (i, j) covers [j, j+1) x [i, i+1), so its center
// sits at (j + 0.5, i + 0.5) with i the row (y) and j the column (x).
template <class Scalar>
struct Image {
  std::array<Plane<Scalar>, 3> ch;

  Image() = default;
  Image(Index rows, Index cols, const Color3<Scalar>& fill = Color3<Scalar>::Zero()) {
    for (int c = 0; c < 3; ++c) ch[c] = Plane<Scalar>::Constant(rows, cols, fill[c]);
  }

  Index rows() const { return ch[0].rows(); }
  Index cols() const { return ch[0].cols(); }

  Color3<Scalar> pixel(Index i, Index j) const {
    return {ch[0](i, j), ch[1](i, j), ch[2](i, j)};
  }
  void set_pixel(Index i, Index j, const Color3<Scalar>& c) {
    for (int k = 0; k < 3; ++k) ch[k](i, j) = c[k];
  }
};

template <class Scalar>
Vec2<Scalar> pixel_center(Index row, Index col) {
  return {Scalar(col) + Scalar(0.5), Scalar(row) + Scalar(0.5)};
}

inline std::uint64_t fnv1a(const void* data, std::size_t size,
                           std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace strokefield
