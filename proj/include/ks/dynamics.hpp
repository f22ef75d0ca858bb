#pragma once

// Time integration of the evolution equation with conservation, positivity
// and energy-decay monitoring.
//
// Scheme: two-stage exponential IMEX (ETD2RK).  The diagonal stiff part
// (a mu_m on v-modes, b mu_m + d on rho-modes) is integrated by its exact
// integrating factor; the chemotaxis flux and the coupling c(v+f) enter
// through the phi1/phi2 weights
//   Vtilde = e^{L dt} V + dt phi1(L dt) N(V)
//   V^+    = Vtilde + dt phi2(L dt) [N(Vtilde) - N(V)]
// with phi1(z) = (e^z - 1)/z, phi2(z) = (e^z - 1 - z)/z^2.  The secant of a
// second-order step tracks dPhi~/dt to O(dt^2), which the dissipation
// diagnostics need.  Every fixed point of the semidiscrete system is a fixed
// point of the scheme, and mode 0 of v is conserved exactly.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "ks/model.hpp"
#include "ks/norms.hpp"
#include "ks/stationary.hpp"
#include "ks/state.hpp"

namespace ks {

struct StepControl {
  double dt = 1e-2;
  double dt_min = 1e-10;
  double dt_max = 1e-2;
  double cfl_safety = 0.5;
  double t_end = 200.0;
  int snapshot_stride = 10;

  void validate() const {
    require(dt_min > 0 && dt_max >= dt_min, errc::precondition,
            "need 0 < dt_min <= dt_max");
    require(cfl_safety > 0 && cfl_safety <= 1, errc::precondition,
            "cfl_safety must lie in (0, 1]");
    require(t_end > 0, errc::precondition, "t_end must be positive");
    require(snapshot_stride >= 1, errc::precondition, "snapshot_stride >= 1");
  }
};

struct DiagnosticsRow {
  double t = 0.0;
  double mass = 0.0;
  double min_u = 0.0;
  double positivity_floor = 0.0;  // delta0 e^{-C_tau (t - t0)}
  double phi = 0.0;
  double dphi_dt_chain = 0.0;
  double dissipation = 0.0;
  double grad_norm_Z = 0.0;
  double vel_norm_Zstar = 0.0;
  double dist_X_to_ref = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
  Params params;
  std::vector<DiagnosticsRow> rows;
  std::vector<State> snapshots;
  std::vector<size_t> snapshot_rows;  // row index of each snapshot
  bool converged = false;
  std::optional<StationaryState> omega_limit;
};

namespace detail {

inline double phi1(double z) {
  if (std::abs(z) < 1e-8) return 1.0 + 0.5 * z;
  return std::expm1(z) / z;
}

inline double phi2(double z) {
  if (std::abs(z) < 1e-4) return 0.5 + z / 6.0 + z * z / 24.0;
  return (std::expm1(z) - z) / (z * z);
}

inline State etd1_stage(const State& state, const VectorXd& flux_coeffs,
                        const Params& params, double dt) {
  const Grid& g = *state.grid();
  VectorXd v(g.n()), rho(g.n());
  for (int m = 0; m < g.n(); ++m) {
    const double zv = -params.a * g.mu(m) * dt;
    v[m] = std::exp(zv) * state.v.coeffs()[m] + dt * phi1(zv) * flux_coeffs[m];
    const double zr = -params.a2_eigenvalue(m) * dt;
    const double u_m = state.v.coeffs()[m] + (m == 0 ? params.f : 0.0);
    rho[m] = std::exp(zr) * state.rho.coeffs()[m] + dt * phi1(zr) * params.c * u_m;
  }
  return State{Field::from_coeffs(state.grid(), std::move(v)),
               Field::from_coeffs(state.grid(), std::move(rho)), state.t + dt};
}

inline State etd2rk_step(const State& state, const VectorXd& flux_coeffs,
                         const Params& params, double dt) {
  const Grid& g = *state.grid();
  State stage = etd1_stage(state, flux_coeffs, params, dt);
  const VectorXd flux_stage = chemotaxis_flux_coeffs(stage, params);
  VectorXd v(g.n()), rho(g.n());
  for (int m = 0; m < g.n(); ++m) {
    const double zv = -params.a * g.mu(m) * dt;
    v[m] = stage.v.coeffs()[m] + dt * phi2(zv) * (flux_stage[m] - flux_coeffs[m]);
    const double zr = -params.a2_eigenvalue(m) * dt;
    const double du_m = stage.v.coeffs()[m] - state.v.coeffs()[m];
    rho[m] = stage.rho.coeffs()[m] + dt * phi2(zr) * params.c * du_m;
  }
  return State{Field::from_coeffs(state.grid(), std::move(v)),
               Field::from_coeffs(state.grid(), std::move(rho)), state.t + dt};
}

struct RowData {
  DiagnosticsRow row;
  TangentState rhs;
  VectorXd flux_coeffs;
  double max_rho_xx = 0.0;
};

inline RowData diagnostics(const State& state, const Params& params) {
  const Grid& g = *state.grid();
  VectorXd flux = chemotaxis_flux_coeffs(state, params);

  VectorXd dv = flux;
  for (int m = 0; m < g.n(); ++m) dv[m] += -params.a * g.mu(m) * state.v.coeffs()[m];
  VectorXd drho(g.n());
  for (int m = 0; m < g.n(); ++m) {
    const double u_m = state.v.coeffs()[m] + (m == 0 ? params.f : 0.0);
    drho[m] = -params.a2_eigenvalue(m) * state.rho.coeffs()[m] + params.c * u_m;
  }
  TangentState rhs{Field::from_coeffs(state.grid(), std::move(dv)),
                   Field::from_coeffs(state.grid(), std::move(drho))};

  const State grad = lyapunov_gradient(state, params);
  DiagnosticsRow r;
  r.t = state.t;
  r.mass = g.length() * (params.f + state.v.coeffs()[0]);
  r.min_u = state.min_density(params);
  r.phi = lyapunov(state, params);
  r.dphi_dt_chain = chain_pairing(grad, rhs, params);
  r.dissipation = dissipation(state, params);
  r.grad_norm_Z = norm_state(grad, NormKind::Z, params);
  r.vel_norm_Zstar = norm_tangent(rhs, NormKind::Zstar, params);

  const Field rho_xx = derivative(state.rho, 2);
  const double max_rho_xx = std::max(rho_xx.values().cwiseAbs().maxCoeff(),
                                     rho_xx.padded_values().cwiseAbs().maxCoeff());
  return RowData{r, std::move(rhs), std::move(flux), max_rho_xx};
}

}  // namespace detail

// One IMEX step.  Throws blow-up on non-finite output; positivity of the
// result is the caller's to check (the step is rejected and dt halved there).
inline State step(const State& state, const Params& params, double dt) {
  require(dt > 0.0, errc::precondition, "dt must be positive");
  require(state.min_density(params) > 0.0, errc::precondition,
          "step needs strictly positive density");
  State next = detail::etd2rk_step(state, detail::chemotaxis_flux_coeffs(state, params),
                                   params, dt);
  require(next.v.coeffs().allFinite() && next.rho.coeffs().allFinite(), errc::blow_up,
          "non-finite values after step");
  return next;
}

// Advective CFL bound dt = clamp(cfl * dx / (k max|rho_x|), dt_min, dt_max).
inline double choose_dt(const State& state, const Params& params,
                        const StepControl& control) {
  const Grid& g = *state.grid();
  const VectorXd rho_x =
      spectral::idst(detail::ddx_sine_coeffs(state.rho), 2 * g.n());
  const double speed = params.k * rho_x.cwiseAbs().maxCoeff();
  const double dt = control.cfl_safety * g.node_spacing() / std::max(1e-30, speed);
  return std::clamp(dt, control.dt_min, control.dt_max);
}

namespace detail {

struct SimulateAttempt {
  Trajectory traj;
  std::optional<double> retry_delta;  // set when delta must shrink and the run redo
};

inline SimulateAttempt simulate_once(const State& initial, const Params& params,
                                     const StepControl& control) {
  SimulateAttempt out;
  Trajectory& traj = out.traj;
  traj.params = params;

  const double t0 = initial.t;
  const double delta0 = initial.min_density(params);
  State state = initial;

  detail::RowData cur = detail::diagnostics(state, params);
  double c_tau = params.k * cur.max_rho_xx;
  cur.row.positivity_floor = delta0;

  auto push_snapshot = [&](const State& s) {
    traj.snapshots.push_back(s);
    traj.snapshot_rows.push_back(traj.rows.size() - 1);
  };

  traj.rows.push_back(cur.row);
  push_snapshot(state);

  int stride = control.snapshot_stride;
  long steps_since_snapshot = 0;
  long snapshots_at_stride = 0;
  int consecutive_rejections = 0;
  double dt_cap = control.dt_max;
  bool delta_validated = false;
  long last_probe_step = -2000;
  long accepted_steps = 0;

  auto grad_small = [&](const DiagnosticsRow& r) {
    return r.grad_norm_Z < 1e-8 * (1.0 + std::abs(r.phi));
  };
  auto diss_small = [&](const DiagnosticsRow& r) {
    return std::abs(r.dissipation) < 1e-12 * (1.0 + std::abs(r.phi));
  };

  bool converged = grad_small(cur.row) && diss_small(cur.row);
  const double t_stop = control.t_end * (1.0 - 1e-12);
  while (!converged && state.t < t_stop) {
    // The dissipation vanishing is delta-independent evidence of
    // stationarity.  If it has flatlined while the extended gradient has
    // not, the configured floor may sit above the omega-limit density:
    // solve for the limit and re-validate delta (Eq. 34 bootstrap).
    if (!delta_validated && diss_small(cur.row) && !grad_small(cur.row) &&
        accepted_steps - last_probe_step >= 2000) {
      last_probe_step = accepted_steps;
      StationaryState probe =
          solve_stationary(params, state, params.grid->length() * params.f);
      if (probe.converged) {
        const Params revalidated = revalidate_delta(params, probe);
        if (revalidated.delta < params.delta) {
          out.retry_delta = revalidated.delta;
          return out;
        }
        delta_validated = true;
      }
    }

    double dt = std::min(choose_dt(state, params, control), dt_cap);
    dt = std::min(dt, control.t_end - state.t);

    State candidate = detail::etd2rk_step(state, cur.flux_coeffs, params, dt);
    require(candidate.v.coeffs().allFinite() && candidate.rho.coeffs().allFinite(),
            errc::blow_up, "non-finite values during simulate");

    std::optional<detail::RowData> next;
    bool accept = candidate.min_density(params) > 0.0;
    if (accept) {
      next = detail::diagnostics(candidate, params);
      const double phi_tol = 0.5e-9 * std::abs(cur.row.phi) + 1e-15;
      accept = next->row.phi <= cur.row.phi + phi_tol;
    }
    if (!accept) {
      ++consecutive_rejections;
      require(!(consecutive_rejections >= 10 && dt <= control.dt_min * (1 + 1e-12)),
              errc::stagnation, "step size pinned at dt_min with repeated rejections");
      dt_cap = std::max(0.5 * dt, control.dt_min);
      continue;
    }
    consecutive_rejections = 0;
    dt_cap = std::min(dt_cap * 2.0, control.dt_max);
    ++accepted_steps;

    state = candidate;
    c_tau = std::max(c_tau, params.k * next->max_rho_xx);
    next->row.positivity_floor = delta0 * std::exp(-c_tau * (state.t - t0));
    cur = std::move(*next);
    traj.rows.push_back(cur.row);

    if (++steps_since_snapshot >= stride) {
      steps_since_snapshot = 0;
      push_snapshot(state);
      if (++snapshots_at_stride >= 1000) {
        snapshots_at_stride = 0;
        stride *= 2;
      }
    }
    converged = grad_small(cur.row) && diss_small(cur.row);
  }

  if (traj.snapshot_rows.back() != traj.rows.size() - 1) push_snapshot(state);

  if (converged) {
    StationaryState omega =
        solve_stationary(params, state, params.grid->length() * params.f);
    if (omega.converged) {
      const Params revalidated = revalidate_delta(params, omega);
      if (revalidated.delta < params.delta) {
        out.retry_delta = revalidated.delta;
        return out;
      }
    }
    if (omega.converged && stationary_residual(omega.state, params) < 1e-6) {
      for (size_t i = 0; i < traj.snapshots.size(); ++i) {
        const State diff{traj.snapshots[i].v - omega.state.v,
                         traj.snapshots[i].rho - omega.state.rho, 0.0};
        traj.rows[traj.snapshot_rows[i]].dist_X_to_ref =
            norm_state(diff, NormKind::X, params);
      }
      traj.converged = true;
      traj.omega_limit = std::move(omega);
    }
  }
  return out;
}

}  // namespace detail

// Advances the initial state to t_end or until stationarity is detected
// (||Phi~'||_Z < 1e-8 (1+|Phi~|) and |D| < 1e-12 (1+|Phi~|)).  Records a
// DiagnosticsRow every accepted step and a state snapshot every
// snapshot_stride steps (the stride doubles after each 1000 snapshots).
// Steps that lose positivity or raise the energy are rejected and retried
// with half the step.  When the omega limit turns out to sit below the
// configured extended-log floor delta, delta is halved until it clears the
// limit and the run is redone; the trajectory's params carry the value used.
inline Trajectory simulate(const State& initial, const Params& params,
                           const StepControl& control) {
  params.validate();
  control.validate();
  require(initial.min_density(params) > 0.0, errc::precondition,
          "initial density must be strictly positive");
  require(has_zero_mean(initial.v), errc::precondition,
          "initial v must have zero mean");

  Params effective = params;
  for (int attempt = 0; attempt < 4; ++attempt) {
    detail::SimulateAttempt result =
        detail::simulate_once(initial, effective, control);
    if (!result.retry_delta) return std::move(result.traj);
    effective.delta = *result.retry_delta;
  }
  return std::move(detail::simulate_once(initial, effective, control).traj);
}

// Empirical bound sup_t (||V||_Z + ||dV/dt||_{Z*}) over the stored snapshots.
inline double observed_r(const Trajectory& traj) {
  double r = 0.0;
  for (const State& s : traj.snapshots) {
    const TangentState rhs = evolution_rhs(s, traj.params);
    r = std::max(r, norm_state(s, NormKind::Z, traj.params) +
                        norm_tangent(rhs, NormKind::Zstar, traj.params));
  }
  return r;
}

}  // namespace ks
