#pragma once

// Post-hoc verification of the convergence machinery along computed
// trajectories: Lojasiewicz exponent fit, angle condition, convergence-rate
// bound, and omega-limit detection.
//
// The late-time window is the set of rows after the energy gap has dropped
// below 10% of its initial value and before it reaches the noise floor
// 1e3 eps |Phi~(Vbar)|.  Fits use the raw row energies; rate-bound margins
// are evaluated at snapshot states with the cancellation-free gap.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "ks/dynamics.hpp"
#include "ks/model.hpp"
#include "ks/norms.hpp"
#include "ks/stationary.hpp"

namespace ks {

struct ConvergenceReport {
  double theta_hat = 0.0;
  double D_hat = 0.0;
  double eps_hat = 0.0;
  double epsP_hat = 0.0;
  double epsPP_hat = 0.0;
  double rate_constant = 0.0;  // (D eps theta)^{-1} surrogate
  int rate_violations = 0;
  double fit_t_lo = 0.0;
  double fit_t_hi = 0.0;
  double fit_residual = 0.0;
};

struct LateWindow {
  size_t lo = 0;  // row indices, inclusive
  size_t hi = 0;
  double gap0 = 0.0;
  double noise_floor = 0.0;
  double phi_bar = 0.0;
};

namespace detail {

inline double row_gap(const DiagnosticsRow& r, double phi_bar) { return r.phi - phi_bar; }

}  // namespace detail

inline LateWindow late_window(const Trajectory& traj) {
  require(traj.converged && traj.omega_limit.has_value(), errc::not_converged,
          "late window needs a converged trajectory");
  require(!traj.rows.empty(), errc::precondition, "trajectory has no rows");
  const double phi_bar = lyapunov(traj.omega_limit->state, traj.params);
  const double gap0 = detail::row_gap(traj.rows.front(), phi_bar);
  const double floor =
      1e3 * std::numeric_limits<double>::epsilon() * std::abs(phi_bar);

  LateWindow w;
  w.gap0 = gap0;
  w.noise_floor = floor;
  w.phi_bar = phi_bar;
  if (gap0 <= floor) {  // stationary from the start: the whole run is "late"
    w.lo = 0;
    w.hi = traj.rows.size() - 1;
    return w;
  }
  size_t lo = 0;
  while (lo < traj.rows.size() && detail::row_gap(traj.rows[lo], phi_bar) > 0.1 * gap0)
    ++lo;
  size_t hi = lo;
  for (size_t i = lo; i < traj.rows.size(); ++i)
    if (detail::row_gap(traj.rows[i], phi_bar) >= floor) hi = i;
  require(lo < traj.rows.size(), errc::window_too_short,
          "energy gap never dropped below 10% of its initial value");
  w.lo = lo;
  w.hi = hi;
  return w;
}

struct LojasiewiczFit {
  double theta_hat = 0.0;
  double D_hat = 0.0;
  double fit_residual = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  size_t rows_used = 0;
};

namespace detail {

// Least-squares fit of log ||Phi~'||_Z against log gap over the last decade
// of gap above the noise floor (widened decade by decade until at least 20
// rows participate).  Slope s gives theta = 1 - s, clamped to (0, 0.55].
inline LojasiewiczFit fit_lojasiewicz_range(const Trajectory& traj, const LateWindow& w,
                                            size_t row_lo, size_t row_hi) {
  std::vector<size_t> usable;
  for (size_t i = row_lo; i <= row_hi; ++i) {
    const double gap = row_gap(traj.rows[i], w.phi_bar);
    if (gap >= w.noise_floor && traj.rows[i].grad_norm_Z > 0.0) usable.push_back(i);
  }
  require(!usable.empty(), errc::energy_gap_at_noise_floor,
          "no rows with energy gap above the noise floor");

  double gap_min = std::numeric_limits<double>::infinity();
  for (size_t i : usable)
    gap_min = std::min(gap_min, row_gap(traj.rows[i], w.phi_bar));

  std::vector<size_t> rows;
  for (double cap = 10.0 * gap_min;; cap *= 10.0) {
    rows.clear();
    for (size_t i : usable)
      if (row_gap(traj.rows[i], w.phi_bar) <= cap) rows.push_back(i);
    if (rows.size() >= 20 || rows.size() == usable.size()) break;
  }
  require(rows.size() >= 20, errc::window_too_short,
          "fewer than 20 usable rows in the fit window");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i : rows) {
    const double x = std::log(row_gap(traj.rows[i], w.phi_bar));
    const double y = std::log(traj.rows[i].grad_norm_Z);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nn = static_cast<double>(rows.size());
  const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / nn;

  double ss = 0;
  for (size_t i : rows) {
    const double x = std::log(row_gap(traj.rows[i], w.phi_bar));
    const double y = std::log(traj.rows[i].grad_norm_Z);
    const double r = y - (intercept + slope * x);
    ss += r * r;
  }

  LojasiewiczFit fit;
  fit.theta_hat = std::clamp(1.0 - slope, 1e-3, 0.55);
  fit.D_hat = std::exp(intercept);
  fit.fit_residual = std::sqrt(ss / nn);
  fit.t_lo = traj.rows[rows.front()].t;
  fit.t_hi = traj.rows[rows.back()].t;
  fit.rows_used = rows.size();
  return fit;
}

}  // namespace detail

// ||Phi~'(V)||_Z >= D |Phi~(V) - Phi~(Vbar)|^{1-theta} fitted in log-log space.
inline LojasiewiczFit fit_lojasiewicz(const Trajectory& traj) {
  const LateWindow w = late_window(traj);
  return detail::fit_lojasiewicz_range(traj, w, w.lo, w.hi);
}

struct AngleEstimates {
  double eps_hat = 0.0;
  double epsP_hat = 0.0;
  double epsPP_hat = 0.0;
};

// eps   = min (-<Phi~', dV/dt>) / (||Phi~'||_Z ||dV/dt||_{Z*})
// eps'  = min |dPhi~/dt| / ||Phi~'||_Z^2
// eps'' = min |dPhi~/dt| / ||dV/dt||_{Z*}^2
// over the late-time window, all from the recorded rows.
inline AngleEstimates angle_condition(const Trajectory& traj) {
  const LateWindow w = late_window(traj);
  AngleEstimates e{std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity()};
  for (size_t i = w.lo; i <= w.hi; ++i) {
    const DiagnosticsRow& r = traj.rows[i];
    require(r.grad_norm_Z > 0.0 && r.vel_norm_Zstar > 0.0, errc::degenerate_row,
            "zero gradient or velocity norm inside the window");
    const double num = -r.dphi_dt_chain;
    e.eps_hat = std::min(e.eps_hat, num / (r.grad_norm_Z * r.vel_norm_Zstar));
    e.epsP_hat = std::min(e.epsP_hat, num / (r.grad_norm_Z * r.grad_norm_Z));
    e.epsPP_hat = std::min(e.epsPP_hat, num / (r.vel_norm_Zstar * r.vel_norm_Zstar));
  }
  return e;
}

struct RateCheckResult {
  int violations = 0;
  double margin = std::numeric_limits<double>::infinity();
};

// Checks ||V(t) - Vbar||_{Z*} <= prefactor gap(t)^theta at every snapshot in
// the late window; returns the violation count and the minimal multiplicative
// margin prefactor gap^theta / dist.
inline RateCheckResult rate_check(const Trajectory& traj, double theta,
                                  double prefactor) {
  require(traj.converged && traj.omega_limit.has_value(), errc::not_converged,
          "rate_check needs a converged trajectory");
  const LateWindow w = late_window(traj);
  const State& ref = traj.omega_limit->state;

  RateCheckResult out;
  for (size_t s = 0; s < traj.snapshots.size(); ++s) {
    const size_t row = traj.snapshot_rows[s];
    if (row < w.lo || row > w.hi) continue;
    const State diff{traj.snapshots[s].v - ref.v, traj.snapshots[s].rho - ref.rho, 0.0};
    const double dist = norm_state(diff, NormKind::Zstar, traj.params);
    const double gap = std::max(0.0, lyapunov_gap(traj.snapshots[s], ref, traj.params));
    const double bound = prefactor * std::pow(gap, theta);
    if (dist > bound) ++out.violations;
    if (dist > 0.0) out.margin = std::min(out.margin, bound / dist);
  }
  return out;
}

// If the final row passes the stationarity thresholds, solves for the
// omega-limit from the final state and verifies Phi~(omega) lies below every
// recorded energy.  Absent is a valid outcome.
inline std::optional<StationaryState> detect_convergence(const Trajectory& traj,
                                                         const Params& params) {
  require(!traj.rows.empty() && !traj.snapshots.empty(), errc::precondition,
          "trajectory is empty");
  const DiagnosticsRow& last = traj.rows.back();
  const double scale = 1.0 + std::abs(last.phi);
  if (!(last.grad_norm_Z < 1e-8 * scale && std::abs(last.dissipation) < 1e-12 * scale))
    return std::nullopt;

  StationaryState omega = solve_stationary(
      params, traj.snapshots.back(), params.grid->length() * params.f);
  if (!omega.converged) return std::nullopt;
  const double phi_bar = lyapunov(omega.state, params);
  for (const DiagnosticsRow& r : traj.rows)
    if (phi_bar > r.phi + 1e-7 * (1.0 + std::abs(r.phi))) return std::nullopt;
  return omega;
}

// True when every Z* mode weight is dominated by its X weight
// (a mu_1 >= 1 and d >= 1), so ||.||_{Z*} <= ||.||_X holds mode-wise.
inline bool zstar_dominated_by_x(const Params& params) {
  return params.a * params.grid->mu(1) >= 1.0 && params.d >= 1.0;
}

// Full verification protocol: full-window fit for the reported exponent,
// angle estimates, then the holdout rate check with theta and prefactor
// taken from the first half of the window.  The rate exponent is capped at
// 1/2: the paper asserts theta <= 1/2, and for gaps below one the bound at
// theta implies the bound at any smaller exponent, so a fitted value above
// 1/2 (fit noise) would test a claim stronger than the asserted one.
inline ConvergenceReport build_report(const Trajectory& traj) {
  const LateWindow w = late_window(traj);
  const LojasiewiczFit fit = detail::fit_lojasiewicz_range(traj, w, w.lo, w.hi);
  const AngleEstimates angle = angle_condition(traj);

  const double t_lo = traj.rows[w.lo].t;
  const double t_hi = traj.rows[w.hi].t;
  const double t_mid = 0.5 * (t_lo + t_hi);
  size_t mid = w.lo;
  while (mid < w.hi && traj.rows[mid].t < t_mid) ++mid;

  const LojasiewiczFit first_half = detail::fit_lojasiewicz_range(traj, w, w.lo, mid);
  const double theta_rate = std::min(first_half.theta_hat, 0.5);

  const State& ref = traj.omega_limit->state;
  double prefactor = 0.0;
  for (size_t s = 0; s < traj.snapshots.size(); ++s) {
    const size_t row = traj.snapshot_rows[s];
    if (row < w.lo || row > mid) continue;
    const State diff{traj.snapshots[s].v - ref.v, traj.snapshots[s].rho - ref.rho, 0.0};
    const double dist = norm_state(diff, NormKind::Zstar, traj.params);
    const double gap = std::max(0.0, lyapunov_gap(traj.snapshots[s], ref, traj.params));
    if (gap > 0.0 && dist > 0.0)
      prefactor = std::max(prefactor, dist / std::pow(gap, theta_rate));
  }
  const RateCheckResult rate = rate_check(traj, theta_rate, prefactor);

  ConvergenceReport rep;
  rep.theta_hat = fit.theta_hat;
  rep.D_hat = fit.D_hat;
  rep.eps_hat = angle.eps_hat;
  rep.epsP_hat = angle.epsP_hat;
  rep.epsPP_hat = angle.epsPP_hat;
  rep.rate_constant = 1.0 / (fit.D_hat * angle.eps_hat * fit.theta_hat);
  rep.rate_violations = rate.violations;
  rep.fit_t_lo = fit.t_lo;
  rep.fit_t_hi = fit.t_hi;
  rep.fit_residual = fit.fit_residual;
  return rep;
}

}  // namespace ks
