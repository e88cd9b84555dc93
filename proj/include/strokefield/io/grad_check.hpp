#pragma once

#include "strokefield/types.hpp"

#include <cstdint>

namespace strokefield::io {

struct GradCheckOptions {
  int fields = 10;
  Index stroke_count = 8;
  Index canvas_size = 32;
  int samples_per_curve = 5;
  int knn = 8;
  double epsilon = 1e-6;
  double tie_tolerance = 1e-3;  // skip geometry coords this close to a sample-argmin tie
};

struct GradCheckReport {
  double max_rel_error = 0;
  int coords_checked = 0;
  int coords_skipped = 0;
};

// Central finite differences against the renderer's reverse-mode gradients,
// on random fields with a fixed random upstream cotangent.
GradCheckReport grad_check(std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace strokefield::io
