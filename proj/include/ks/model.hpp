#pragma once

// Model layer: the extended logarithm, the Lyapunov functional Phi~, its
// X-gradient and Hessian action, the dissipation functional and the
// right-hand side of the evolution equation
//
//   dv/dt   = a v_xx - k [(v + f) rho_x]_x
//   drho/dt = b rho_xx - d rho + c (v + f).
//
// The chemotaxis flux is formed in the sine basis on a 2x zero-padded grid
// (cosine x sine products land on sine modes < 2n, so the padded product is
// alias-free and the retained cosine modes of its derivative are exact).
// Differentiating the sine product leaves cosine mode 0 empty, which makes
// the first component of the right-hand side zero-mean to machine precision.

#include <cmath>

#include "ks/errors.hpp"
#include "ks/field.hpp"
#include "ks/norms.hpp"
#include "ks/params.hpp"
#include "ks/spectral.hpp"
#include "ks/state.hpp"

namespace ks {

// ---------------------------------------------------------------------------
// Extended logarithm.
//
// log~ equals log above delta/2, vanishes on (-inf, 0], and is bridged on
// (0, delta/2] by the minimal-degree polynomial matching value, first and
// second derivative of log at delta/2 and of the zero function at 0:
//   p(xi) = a3 t^3 + a4 t^4 + a5 t^5,  t = 2 xi / delta.
// ell(xi) = xi log~ xi - xi is then C^2 with globally bounded ell'' and
// (piecewise) bounded ell'''.

namespace detail {

struct LogBlend {
  double s;             // junction delta/2
  double a3, a4, a5;    // monomial coefficients in t = xi / s

  explicit LogBlend(double delta) : s(0.5 * delta) {
    const double L = std::log(s);
    a3 = 10.0 * L - 4.5;
    a4 = 8.0 - 15.0 * L;
    a5 = 6.0 * L - 3.5;
  }

  double p(double xi) const {
    const double t = xi / s;
    return ((a5 * t + a4) * t + a3) * t * t * t;
  }
  double dp(double xi) const {
    const double t = xi / s;
    return ((5.0 * a5 * t + 4.0 * a4) * t + 3.0 * a3) * t * t / s;
  }
  double d2p(double xi) const {
    const double t = xi / s;
    return ((20.0 * a5 * t + 12.0 * a4) * t + 6.0 * a3) * t / (s * s);
  }
};

}  // namespace detail

// log~ itself (order 0..2), used by the extension below.
inline double extended_log_tilde(double xi, double delta, int order) {
  require(delta > 0, errc::nonpositive_delta, "delta must be positive");
  const double s = 0.5 * delta;
  if (xi <= 0.0) return 0.0;
  if (xi > s) {
    switch (order) {
      case 0: return std::log(xi);
      case 1: return 1.0 / xi;
      default: return -1.0 / (xi * xi);
    }
  }
  const detail::LogBlend blend(delta);
  switch (order) {
    case 0: return blend.p(xi);
    case 1: return blend.dp(xi);
    default: return blend.d2p(xi);
  }
}

// ell(xi) = xi log~ xi - xi and its first two derivatives.
inline double extended_log(double xi, double delta, int order) {
  require(delta > 0, errc::nonpositive_delta, "delta must be positive");
  require(order >= 0 && order <= 2, errc::precondition, "order must be 0, 1 or 2");
  const double s = 0.5 * delta;
  if (xi <= 0.0) {
    switch (order) {
      case 0: return -xi;
      case 1: return -1.0;
      default: return 0.0;
    }
  }
  if (xi > s) {
    switch (order) {
      case 0: return xi * std::log(xi) - xi;
      case 1: return std::log(xi);
      default: return 1.0 / xi;
    }
  }
  const detail::LogBlend blend(delta);
  switch (order) {
    case 0: return xi * blend.p(xi) - xi;
    case 1: return blend.p(xi) + xi * blend.dp(xi) - 1.0;
    default: return 2.0 * blend.dp(xi) + xi * blend.d2p(xi);
  }
}

// ---------------------------------------------------------------------------
// Projections and A2.

// P_m u = u - |I|^{-1} integral of u; idempotent, kills mode 0 exactly.
inline Field project_zero_mean(const Field& field) {
  VectorXd c = field.coeffs();
  c[0] = 0.0;
  return Field::from_coeffs(field.grid(), std::move(c));
}

inline Field apply_a2(const Field& field, const Params& params) {
  VectorXd c(field.grid()->n());
  for (int m = 0; m < field.grid()->n(); ++m)
    c[m] = params.a2_eigenvalue(m) * field.coeffs()[m];
  return Field::from_coeffs(field.grid(), std::move(c));
}

inline Field apply_a2_inverse(const Field& field, const Params& params) {
  VectorXd c(field.grid()->n());
  for (int m = 0; m < field.grid()->n(); ++m)
    c[m] = field.coeffs()[m] / params.a2_eigenvalue(m);
  return Field::from_coeffs(field.grid(), std::move(c));
}

// ---------------------------------------------------------------------------
// Internal spectral helpers.

namespace detail {

// Sine coefficients (modes 1..n-1) of the first derivative of a cosine field.
inline VectorXd ddx_sine_coeffs(const Field& f) {
  const Grid& g = *f.grid();
  VectorXd s(g.n() - 1);
  for (int m = 1; m < g.n(); ++m)
    s[m - 1] = -(m * M_PI / g.length()) * f.coeffs()[m];
  return s;
}

// Cosine coefficients of d/dx applied to a sine series (modes 1..len).
inline VectorXd ddx_of_sine(const VectorXd& sine_coeffs, double length) {
  VectorXd c(sine_coeffs.size() + 1);
  c[0] = 0.0;
  for (Eigen::Index i = 0; i < sine_coeffs.size(); ++i)
    c[i + 1] = ((i + 1) * M_PI / length) * sine_coeffs[i];
  return c;
}

// Chemotaxis flux divergence -k [(v + f) rho_x]_x as cosine coefficients
// (modes 0..n-1, mode 0 identically zero).
inline VectorXd chemotaxis_flux_coeffs(const State& state, const Params& p) {
  const Grid& g = *state.grid();
  const int n = g.n();
  const int fine = 2 * n;
  const VectorXd u_fine =
      (spectral::idct(state.v.coeffs(), fine).array() + p.f).matrix();
  const VectorXd rho_x_fine = spectral::idst(ddx_sine_coeffs(state.rho), fine);
  const VectorXd q_fine = (u_fine.array() * rho_x_fine.array()).matrix();
  const VectorXd q_sine = spectral::dst(q_fine);           // modes 1..2n-1, exact
  const VectorXd div = ddx_of_sine(q_sine, g.length());    // modes 0..2n-1
  return (-p.k) * div.head(n);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Lyapunov functional and friends.

// Phi~(V) = int { a c ell(v+f) + (bk/2)(rho')^2 + (dk/2) rho^2 - c k (v+f) rho } dx
// by the midpoint rule on the collocation nodes.  That rule integrates cosine
// modes below 2n exactly, so every quadratic term is quadrature-exact, and
// evaluating ell pointwise on the same nodes makes lyapunov_gradient the
// exact adjoint of this discrete functional.  For states with
// min(v+f) > delta/2 the value coincides with the unextended functional.
inline double lyapunov(const State& state, const Params& params) {
  const Grid& g = *state.grid();
  const int n = g.n();
  const VectorXd& rho = state.rho.values();
  const VectorXd rho_x = spectral::idst(detail::ddx_sine_coeffs(state.rho), n);

  VectorXd integrand(n);
  for (int j = 0; j < n; ++j) {
    const double u = state.v.values()[j] + params.f;
    integrand[j] = params.a * params.c * extended_log(u, params.delta, 0) +
                   0.5 * params.b * params.k * rho_x[j] * rho_x[j] +
                   0.5 * params.d * params.k * rho[j] * rho[j] -
                   params.c * params.k * u * rho[j];
  }
  return g.quadrature_weight() * spectral::kahan_sum(integrand);
}

// Energy gap Phi~(state) - Phi~(ref) by pointwise-difference quadrature.
// Forming the difference inside the integrand avoids the catastrophic
// cancellation of two O(1) functional values once the gap is tiny; the
// coefficient differences themselves are exact (same-binade subtractions).
inline double lyapunov_gap(const State& state, const State& ref, const Params& params) {
  const Grid& g = *state.grid();
  require(g.same_as(*ref.grid()), errc::precondition, "states on different grids");
  const int fine = g.n();  // same rule as lyapunov itself
  const double half_delta = 0.5 * params.delta;

  const VectorXd du = spectral::idct((state.v.coeffs() - ref.v.coeffs()).eval(), fine);
  const VectorXd drho = spectral::idct((state.rho.coeffs() - ref.rho.coeffs()).eval(), fine);
  const VectorXd ddrho_x = spectral::idst(
      detail::ddx_sine_coeffs(state.rho - ref.rho), fine);

  const VectorXd u_ref = (spectral::idct(ref.v.coeffs(), fine).array() + params.f).matrix();
  const VectorXd rho_ref = spectral::idct(ref.rho.coeffs(), fine);
  const VectorXd rho_x_ref = spectral::idst(detail::ddx_sine_coeffs(ref.rho), fine);

  VectorXd integrand(fine);
  for (int j = 0; j < fine; ++j) {
    const double ub = u_ref[j];
    const double ua = ub + du[j];
    double entropy;
    if (ua > half_delta && ub > half_delta) {
      // ell(ua) - ell(ub) = du (log ub - 1) + ua log1p(du / ub), exact branch.
      entropy = du[j] * (std::log(ub) - 1.0) + ua * std::log1p(du[j] / ub);
    } else {
      entropy = extended_log(ua, params.delta, 0) - extended_log(ub, params.delta, 0);
    }
    integrand[j] =
        params.a * params.c * entropy +
        0.5 * params.b * params.k * ddrho_x[j] * (2.0 * rho_x_ref[j] + ddrho_x[j]) +
        0.5 * params.d * params.k * drho[j] * (2.0 * rho_ref[j] + drho[j]) -
        params.c * params.k *
            (ub * drho[j] + du[j] * rho_ref[j] + du[j] * drho[j]);
  }
  return (g.length() / fine) * spectral::kahan_sum(integrand);
}

// X-gradient Phi~'(V) = ( c P_m[a ell'(v+f) - k rho], k[rho - c A2^{-1}(v+f)] ).
inline State lyapunov_gradient(const State& state, const Params& params) {
  const Grid& g = *state.grid();
  VectorXd first_vals(g.n());
  for (int j = 0; j < g.n(); ++j) {
    const double u = state.v.values()[j] + params.f;
    first_vals[j] = params.a * extended_log(u, params.delta, 1) -
                    params.k * state.rho.values()[j];
  }
  Field first = project_zero_mean(Field::from_values(state.grid(), std::move(first_vals)));
  first = first * params.c;

  VectorXd second(g.n());
  for (int m = 0; m < g.n(); ++m) {
    const double u_m = state.v.coeffs()[m] + (m == 0 ? params.f : 0.0);
    second[m] = params.k * (state.rho.coeffs()[m] - params.c * u_m / params.a2_eigenvalue(m));
  }
  return State{std::move(first), Field::from_coeffs(state.grid(), std::move(second)),
               state.t};
}

// Hessian action Phi~''(V) H = ( c P_m[a ell''(v+f) h - k eta], k[eta - c A2^{-1} h] ).
inline TangentState hessian_apply(const State& base, const TangentState& direction,
                                  const Params& params) {
  const Grid& g = *base.grid();
  VectorXd first_vals(g.n());
  for (int j = 0; j < g.n(); ++j) {
    const double u = base.v.values()[j] + params.f;
    first_vals[j] = params.a * extended_log(u, params.delta, 2) * direction.dv.values()[j] -
                    params.k * direction.drho.values()[j];
  }
  Field first = project_zero_mean(Field::from_values(base.grid(), std::move(first_vals)));
  first = first * params.c;

  VectorXd second(g.n());
  for (int m = 0; m < g.n(); ++m)
    second[m] = params.k * (direction.drho.coeffs()[m] -
                            params.c * direction.dv.coeffs()[m] / params.a2_eigenvalue(m));
  return TangentState{std::move(first), Field::from_coeffs(base.grid(), std::move(second))};
}

// Right-hand side of the evolution equation.
inline TangentState evolution_rhs(const State& state, const Params& params) {
  const Grid& g = *state.grid();
  VectorXd dv = detail::chemotaxis_flux_coeffs(state, params);
  for (int m = 0; m < g.n(); ++m)
    dv[m] += -params.a * g.mu(m) * state.v.coeffs()[m];

  VectorXd drho(g.n());
  for (int m = 0; m < g.n(); ++m) {
    const double u_m = state.v.coeffs()[m] + (m == 0 ? params.f : 0.0);
    drho[m] = -params.a2_eigenvalue(m) * state.rho.coeffs()[m] + params.c * u_m;
  }
  return TangentState{Field::from_coeffs(state.grid(), std::move(dv)),
                      Field::from_coeffs(state.grid(), std::move(drho))};
}

// Dissipation D(V) = -c int u ([a log u - k rho]_x)^2 dx - k int rho_t^2 dx <= 0,
// with rho_t taken from the model right-hand side.  The first integrand is
// quadrature of pointwise nonnegative terms, so the sign is structural.
inline double dissipation(const State& state, const Params& params) {
  require(state.min_density(params) > 0.0, errc::nonpositive_density,
          "dissipation needs strictly positive density");
  const Grid& g = *state.grid();
  const int fine = 2 * g.n();

  VectorXd w_vals(g.n());
  for (int j = 0; j < g.n(); ++j)
    w_vals[j] = params.a * std::log(state.v.values()[j] + params.f) -
                params.k * state.rho.values()[j];
  const Field w = Field::from_values(state.grid(), std::move(w_vals));

  const VectorXd w_x = spectral::idst(detail::ddx_sine_coeffs(w), fine);
  const VectorXd u = (spectral::idct(state.v.coeffs(), fine).array() + params.f).matrix();
  VectorXd integrand(fine);
  for (int j = 0; j < fine; ++j) integrand[j] = u[j] * w_x[j] * w_x[j];
  const double flux_part = (g.length() / fine) * spectral::kahan_sum(integrand);

  double rho_t_sq = 0.0;
  for (int m = 0; m < g.n(); ++m) {
    const double u_m = state.v.coeffs()[m] + (m == 0 ? params.f : 0.0);
    const double rho_t_m =
        -params.a2_eigenvalue(m) * state.rho.coeffs()[m] + params.c * u_m;
    rho_t_sq += g.mode_weight(m) * rho_t_m * rho_t_m;
  }
  return -params.c * flux_part - params.k * rho_t_sq;
}

// <Phi~'(V), dV/dt>_{Z x Z*}; along solutions this equals d/dt Phi~(V(t)).
inline double chain_pairing(const State& grad, const TangentState& rhs,
                            const Params& params) {
  return duality_pairing(grad, rhs, params);
}

}  // namespace ks
