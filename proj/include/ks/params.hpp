#pragma once

#include "ks/errors.hpp"
#include "ks/grid.hpp"

namespace ks {

// Physical constants of the model together with the discretization grid,
// the mean mass f and the positivity floor delta of the extended logarithm.
struct Params {
  double a = 1.0;  // bacteria diffusion
  double b = 1.0;  // chemical diffusion
  double c = 1.0;  // secretion rate
  double d = 1.0;  // decay rate
  double k = 1.0;  // chemotaxis intensity
  GridPtr grid;
  double f = 1.0;      // mean mass, |I|^{-1} integral of u0
  double delta = 0.5;  // extended-log floor, 0 < delta <= f

  void validate() const {
    require(a > 0 && b > 0 && c > 0 && d > 0 && k > 0 && f > 0, errc::precondition,
            "a, b, c, d, k, f must all be strictly positive");
    require(grid != nullptr, errc::precondition, "params need a grid");
    require(delta > 0, errc::nonpositive_delta, "delta must be positive");
    require(delta <= f, errc::precondition, "delta must not exceed the mean mass f");
  }

  // Eigenvalue of A2 = -b d^2/dx^2 + d on cosine mode m.
  double a2_eigenvalue(int m) const { return b * grid->mu(m) + d; }
};

}  // namespace ks
