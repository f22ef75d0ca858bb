#pragma once

#include <cmath>
#include <utility>

#include "ks/field.hpp"
#include "ks/params.hpp"

namespace ks {

// Solution pair V = (v, rho) with v = u - f the zero-mean density shift.
struct State {
  Field v;
  Field rho;
  double t = 0.0;

  const GridPtr& grid() const { return v.grid(); }

  // Density u = v + f at the collocation nodes.
  VectorXd density_values(const Params& p) const {
    return (v.values().array() + p.f).matrix();
  }

  // Density on the 2x padded grid; used for robust positivity checks,
  // since a resolved field can dip between collocation nodes.
  VectorXd density_padded(const Params& p, int factor = 2) const {
    return (v.padded_values(factor).array() + p.f).matrix();
  }

  double min_density(const Params& p) const {
    return std::min(density_values(p).minCoeff(), density_padded(p).minCoeff());
  }
};

// Direction pair H = (h, eta); also the value of dV/dt.
struct TangentState {
  Field dv;
  Field drho;
};

inline State make_state(Field v, Field rho, double t = 0.0) {
  require(v.grid()->same_as(*rho.grid()), errc::precondition,
          "v and rho must share a grid");
  return State{std::move(v), std::move(rho), t};
}

inline bool has_zero_mean(const Field& f, double tol_scale = 1e-10) {
  double sq = 0.0;
  for (int m = 0; m < f.grid()->n(); ++m)
    sq += f.grid()->mode_weight(m) * f.coeffs()[m] * f.coeffs()[m];
  return std::abs(f.mean()) <= tol_scale * std::max(1.0, std::sqrt(sq));
}

}  // namespace ks
