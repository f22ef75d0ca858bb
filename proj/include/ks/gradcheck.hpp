#pragma once

// Finite-difference verification of the Lyapunov gradient and Hessian action
// on random smooth states.  Errors are normalized by the natural X-norm
// scales.

#include <cmath>
#include <random>

#include "ks/model.hpp"
#include "ks/norms.hpp"
#include "ks/sampling.hpp"

namespace ks {

struct GradCheckResult {
  double gradient_max_rel_error = 0.0;
  double hessian_max_rel_error = 0.0;
  int states = 0;
};

inline State axpy(const State& base, double h, const TangentState& dir) {
  return State{base.v + h * dir.dv, base.rho + h * dir.drho, base.t};
}

// Central difference [Phi~(V + hH) - Phi~(V - hH)] / 2h against (Phi~'(V), H)_X
// and [Phi~'(V + hH) - Phi~'(V - hH)] / 2h against Phi~''(V) H.
inline GradCheckResult run_gradcheck(const Params& params, int n_states,
                                     unsigned long long seed,
                                     double h_grad = 1e-5, double h_hess = 1e-7) {
  std::mt19937_64 rng(seed);
  GradCheckResult out;
  out.states = n_states;
  for (int i = 0; i < n_states; ++i) {
    const State v = random_state(params, rng);
    TangentState dir = random_tangent(params, rng);
    const double hnorm = norm_tangent(dir, NormKind::X, params);
    dir = TangentState{dir.dv * (1.0 / hnorm), dir.drho * (1.0 / hnorm)};

    const State grad = lyapunov_gradient(v, params);
    const double pairing = x_inner(grad, State{dir.dv, dir.drho, 0.0}, params);
    const double fd = (lyapunov(axpy(v, h_grad, dir), params) -
                       lyapunov(axpy(v, -h_grad, dir), params)) /
                      (2.0 * h_grad);
    const double gscale = std::max(norm_state(grad, NormKind::X, params), 1e-12);
    out.gradient_max_rel_error =
        std::max(out.gradient_max_rel_error, std::abs(fd - pairing) / gscale);

    const TangentState lh = hessian_apply(v, dir, params);
    const State gp = lyapunov_gradient(axpy(v, h_hess, dir), params);
    const State gm = lyapunov_gradient(axpy(v, -h_hess, dir), params);
    const State fd_h{(gp.v - gm.v) * (1.0 / (2.0 * h_hess)),
                     (gp.rho - gm.rho) * (1.0 / (2.0 * h_hess)), 0.0};
    const State diff{fd_h.v - lh.dv, fd_h.rho - lh.drho, 0.0};
    const double hscale =
        std::max(norm_tangent(lh, NormKind::X, params), 1e-12);
    out.hessian_max_rel_error =
        std::max(out.hessian_max_rel_error,
                 norm_state(diff, NormKind::X, params) / hscale);
  }
  return out;
}

}  // namespace ks
