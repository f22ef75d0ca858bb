#pragma once

// Random smooth fields and states for gradient checks and property tests.
// Coefficients decay geometrically, matching the spatial analyticity of the
// states the model produces.

#include <random>

#include "ks/field.hpp"
#include "ks/params.hpp"
#include "ks/state.hpp"

namespace ks {

inline Field random_smooth_field(const GridPtr& grid, std::mt19937_64& rng,
                                 double amplitude = 1.0, double decay = 0.25) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXd c(grid->n());
  for (int m = 0; m < grid->n(); ++m)
    c[m] = amplitude * std::exp(-decay * m) * gauss(rng);
  return Field::from_coeffs(grid, std::move(c));
}

// State with zero-mean v; amplitudes keep |v| of order f/2 so a share of the
// samples exercises the blended region of the extended logarithm.
inline State random_state(const Params& params, std::mt19937_64& rng,
                          double v_amplitude = -1.0, double rho_amplitude = 0.5) {
  if (v_amplitude <= 0.0) v_amplitude = 0.5 * params.f;
  Field v = random_smooth_field(params.grid, rng, v_amplitude);
  VectorXd vc = v.coeffs();
  vc[0] = 0.0;
  Field rho = random_smooth_field(params.grid, rng, rho_amplitude);
  return State{Field::from_coeffs(params.grid, std::move(vc)), std::move(rho), 0.0};
}

inline TangentState random_tangent(const Params& params, std::mt19937_64& rng,
                                   double amplitude = 1.0) {
  Field dv = random_smooth_field(params.grid, rng, amplitude);
  VectorXd c = dv.coeffs();
  c[0] = 0.0;
  Field drho = random_smooth_field(params.grid, rng, amplitude);
  return TangentState{Field::from_coeffs(params.grid, std::move(c)), std::move(drho)};
}

// Strictly positive random density u = f exp(field), returned as a state.
inline State random_positive_state(const Params& params, std::mt19937_64& rng,
                                   double log_amplitude = 0.5) {
  Field expo = random_smooth_field(params.grid, rng, log_amplitude);
  VectorXd u(params.grid->n());
  for (int j = 0; j < params.grid->n(); ++j)
    u[j] = params.f * std::exp(expo.values()[j]);
  Field v = Field::from_values(params.grid, (u.array() - params.f).matrix());
  Field rho = random_smooth_field(params.grid, rng, 0.5);
  return State{std::move(v), std::move(rho), 0.0};
}

}  // namespace ks
