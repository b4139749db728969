#pragma once

#include <cmath>
#include <cstdint>

#include "rcbc/error.hpp"

namespace rcbc {

/// Numerical knobs shared by the one-way and biclustering solvers.
///
/// Tolerances are relative: the effective threshold is tol · max(1, ‖X‖_F)
/// for the matrix X handed to the solver.
struct SolverConfig {
  double rho = 0.3;
  double outer_tol = 1e-5;
  int outer_max_iter = 100;
  double inner_tol = 1e-6;
  int inner_max_iter = 10000;
  double fuse_tol = 1e-4;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidParameter("rho must be positive and finite");
    if (!(outer_tol > 0.0)) throw InvalidParameter("outer_tol must be positive");
    if (!(inner_tol > 0.0)) throw InvalidParameter("inner_tol must be positive");
    if (outer_max_iter < 1) throw InvalidParameter("outer_max_iter must be >= 1");
    if (inner_max_iter < 1) throw InvalidParameter("inner_max_iter must be >= 1");
    if (!(fuse_tol >= 0.0)) throw InvalidParameter("fuse_tol must be nonnegative");
  }
};

inline double tolerance_scale(double frobenius) noexcept { return frobenius > 1.0 ? frobenius : 1.0; }

}  // namespace rcbc
