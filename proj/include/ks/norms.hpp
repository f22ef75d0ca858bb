#pragma once

// Norms of the triplet Z subset X subset Z*.
//
// All norms are evaluated mode-wise from cosine coefficients:
//   L2^2      = sum_m w_m c_m^2                          (w_0 = L, w_m = L/2)
//   H1^2      = sum_m (b mu_m + d) w_m c_m^2             (the A2 form norm)
//   H1m^2     = a sum_{m>=1} mu_m w_m c_m^2              (zero-mean fields)
//   H1m'^2    = sum_{m>=1} w_m c_m^2 / (a mu_m)          (zero-mean fields)
// and on state pairs V = (v, rho):
//   ||V||_{Z*}^2 = ||v||_{H1m'}^2 + ||rho||_{L2}^2
//   ||V||_X^2    = ||v||_{L2}^2   + ||rho||_{H1}^2
//   ||V||_Z^2    = ||v||_{H1m}^2  + ||A2 rho||_{L2}^2
// The X weight of each mode is the geometric mean of its Z and Z* weights,
// which makes the interpolation inequality ||V||_X <= ||V||_Z^1/2 ||V||_{Z*}^1/2
// an exact consequence of Cauchy-Schwarz.

#include <cmath>

#include "ks/field.hpp"
#include "ks/params.hpp"
#include "ks/state.hpp"

namespace ks {

enum class NormKind { L2, H1, H1m_dual, sup, X, Z, Zstar };

namespace detail {

inline double sq_l2(const Field& f) {
  double s = 0.0;
  for (int m = 0; m < f.grid()->n(); ++m)
    s += f.grid()->mode_weight(m) * f.coeffs()[m] * f.coeffs()[m];
  return s;
}

inline double sq_h1(const Field& f, const Params& p) {
  double s = 0.0;
  for (int m = 0; m < f.grid()->n(); ++m)
    s += p.a2_eigenvalue(m) * f.grid()->mode_weight(m) * f.coeffs()[m] * f.coeffs()[m];
  return s;
}

inline double sq_h1m(const Field& f, const Params& p) {
  double s = 0.0;
  for (int m = 1; m < f.grid()->n(); ++m)
    s += p.a * f.grid()->mu(m) * f.grid()->mode_weight(m) * f.coeffs()[m] * f.coeffs()[m];
  return s;
}

inline double sq_h1m_dual(const Field& f, const Params& p) {
  require(has_zero_mean(f), errc::not_zero_mean,
          "H1m' norm requires a zero-mean field");
  double s = 0.0;
  for (int m = 1; m < f.grid()->n(); ++m)
    s += f.grid()->mode_weight(m) * f.coeffs()[m] * f.coeffs()[m] /
         (p.a * f.grid()->mu(m));
  return s;
}

inline double sq_a2_l2(const Field& f, const Params& p) {
  double s = 0.0;
  for (int m = 0; m < f.grid()->n(); ++m) {
    const double lam = p.a2_eigenvalue(m);
    s += lam * lam * f.grid()->mode_weight(m) * f.coeffs()[m] * f.coeffs()[m];
  }
  return s;
}

}  // namespace detail

inline double norm_field(const Field& field, NormKind kind, const Params& params) {
  switch (kind) {
    case NormKind::L2: return std::sqrt(detail::sq_l2(field));
    case NormKind::H1: return std::sqrt(detail::sq_h1(field, params));
    case NormKind::H1m_dual: return std::sqrt(detail::sq_h1m_dual(field, params));
    case NormKind::sup: return field.values().cwiseAbs().maxCoeff();
    default:
      fail(errc::precondition, "X/Z/Zstar norms apply to state pairs; use norm_state");
  }
}

inline double norm_state(const State& state, NormKind kind, const Params& params) {
  switch (kind) {
    case NormKind::Zstar:
      return std::sqrt(detail::sq_h1m_dual(state.v, params) + detail::sq_l2(state.rho));
    case NormKind::X:
      return std::sqrt(detail::sq_l2(state.v) + detail::sq_h1(state.rho, params));
    case NormKind::Z:
      return std::sqrt(detail::sq_h1m(state.v, params) + detail::sq_a2_l2(state.rho, params));
    default:
      fail(errc::precondition, "norm_state accepts X, Z or Zstar");
  }
}

inline double norm_tangent(const TangentState& w, NormKind kind, const Params& params) {
  return norm_state(State{w.dv, w.drho, 0.0}, kind, params);
}

// X inner product (V, W)_X = (v, w)_{L2} + a2(rho, phi).
inline double x_inner(const State& va, const State& vb, const Params& params) {
  const Grid& g = *va.grid();
  double s = 0.0;
  for (int m = 0; m < g.n(); ++m) {
    s += g.mode_weight(m) * va.v.coeffs()[m] * vb.v.coeffs()[m];
    s += params.a2_eigenvalue(m) * g.mode_weight(m) * va.rho.coeffs()[m] * vb.rho.coeffs()[m];
  }
  return s;
}

// Duality product <(v, rho), (w, phi)>_{Z x Z*} = <v, w>_{H1m x H1m'} + (A2 rho, phi)_{L2}.
// On discrete states the first pairing is the plain L2 pairing of the
// zero-mean components.
inline double duality_pairing(const State& zside, const TangentState& zstar_side,
                              const Params& params) {
  const Grid& g = *zside.grid();
  double s = 0.0;
  for (int m = 1; m < g.n(); ++m)
    s += g.mode_weight(m) * zside.v.coeffs()[m] * zstar_side.dv.coeffs()[m];
  for (int m = 0; m < g.n(); ++m)
    s += params.a2_eigenvalue(m) * g.mode_weight(m) * zside.rho.coeffs()[m] *
         zstar_side.drho.coeffs()[m];
  return s;
}

}  // namespace ks
