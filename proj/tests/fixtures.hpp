#pragma once

#include "rcbc/simulate.hpp"

namespace fixture {

// 60 x 60 matrix with a 3 x 3 block checkerboard and small Gaussian noise.
inline rcbc::Checkerboard low_noise_60(std::uint64_t seed = 0) {
  rcbc::CheckerboardSpec spec;
  spec.n = 60;
  spec.p = 60;
  spec.row_blocks = 3;
  spec.col_blocks = 3;
  spec.sigma = 1.0;
  spec.seed = seed;
  return rcbc::make_checkerboard(spec);
}

}  // namespace fixture
