#pragma once

// Stationary solutions of the reduced system
//   a log u - k rho = const,   b rho_xx - d rho + c u = 0,
// the constant state, linear stability of the constant state, and the
// spectrum/kernel of the Hessian operator L = Phi~''(Vbar) on X.
//
// The first stationarity equation integrates to the Boltzmann relation
// u = M e^{k rho / a} / int e^{k rho / a}, collapsing the system to a
// fixed point in rho alone; a damped fixed-point sweep is followed by a
// Newton polish on the strong residual G(rho) = A2 rho - c u[rho].

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "ks/model.hpp"
#include "ks/norms.hpp"
#include "ks/state.hpp"

namespace ks {

struct HessianSummary {
  std::vector<double> smallest_eigenvalues;  // <= 8, ascending magnitude
  int kernel_dim = 0;
  std::vector<State> kernel_basis;           // X-orthonormal
};

struct StationaryState {
  State state;
  double residual = 0.0;  // combined residual of the reduced equations
  double mass = 0.0;
  bool converged = true;
  std::optional<HessianSummary> hessian_summary;

  double tolerance(const Params& params) const {
    return 1e-10 * (1.0 + norm_state(state, NormKind::Z, params));
  }
};

// || P_m[a log u - k rho] ||_{H1m} + || b rho_xx - d rho + c u ||_{L2}.
inline double stationary_residual(const State& state, const Params& params) {
  require(state.min_density(params) > 0.0, errc::nonpositive_density,
          "stationary residual needs strictly positive density");
  const Grid& g = *state.grid();
  VectorXd w_vals(g.n());
  for (int j = 0; j < g.n(); ++j)
    w_vals[j] = params.a * std::log(state.v.values()[j] + params.f) -
                params.k * state.rho.values()[j];
  const Field w = project_zero_mean(Field::from_values(state.grid(), std::move(w_vals)));
  const double first = std::sqrt(detail::sq_h1m(w, params));

  double second_sq = 0.0;
  for (int m = 0; m < g.n(); ++m) {
    const double u_m = state.v.coeffs()[m] + (m == 0 ? params.f : 0.0);
    const double r = -params.a2_eigenvalue(m) * state.rho.coeffs()[m] + params.c * u_m;
    second_sq += g.mode_weight(m) * r * r;
  }
  return first + std::sqrt(second_sq);
}

inline StationaryState constant_state(const Params& params) {
  const double rho_bar = params.c * params.f / params.d;
  State st = make_state(Field::zero(params.grid),
                        Field::constant(params.grid, rho_bar), 0.0);
  const double res = stationary_residual(st, params);
  return StationaryState{std::move(st), res, params.grid->length() * params.f, true, {}};
}

namespace detail {

// Mass-normalized Boltzmann density u[rho] at the collocation nodes.
inline VectorXd boltzmann_density(const VectorXd& rho_vals, double mass,
                                  const Params& params) {
  const Grid& g = *params.grid;
  VectorXd e(g.n());
  for (int j = 0; j < g.n(); ++j)
    e[j] = std::exp(params.k * rho_vals[j] / params.a);
  const double total = g.quadrature_weight() * e.sum();
  return (mass / total) * e;
}

}  // namespace detail

// Solves the reduced fixed-point system for a stationary state with the
// prescribed mass.  Returns the best iterate with converged = false if the
// residual tolerance is not met within max_iter outer iterations.
inline StationaryState solve_stationary(const Params& params, const State& seed,
                                        double mass, int max_iter = 500) {
  require(mass > 0.0, errc::precondition, "mass must be positive");
  require(seed.min_density(params) > 0.0, errc::precondition,
          "seed must have strictly positive density");
  const Grid& g = *params.grid;
  const int n = g.n();

  auto assemble = [&](const VectorXd& rho_coeffs) {
    VectorXd rho_vals = spectral::idct(rho_coeffs);
    VectorXd u_vals = detail::boltzmann_density(rho_vals, mass, params);
    State st = make_state(Field::from_values(params.grid, (u_vals.array() - params.f).matrix()),
                          Field::from_coeffs(params.grid, rho_coeffs), 0.0);
    return st;
  };
  auto strong_residual = [&](const VectorXd& rho_coeffs) {
    // G(rho) = A2 rho - c u[rho], as cosine coefficients.
    VectorXd rho_vals = spectral::idct(rho_coeffs);
    VectorXd u_coeffs = spectral::dct(detail::boltzmann_density(rho_vals, mass, params));
    VectorXd gres(n);
    for (int m = 0; m < n; ++m)
      gres[m] = params.a2_eigenvalue(m) * rho_coeffs[m] - params.c * u_coeffs[m];
    return gres;
  };
  auto l2_of = [&](const VectorXd& coeffs) {
    double s = 0.0;
    for (int m = 0; m < n; ++m) s += g.mode_weight(m) * coeffs[m] * coeffs[m];
    return std::sqrt(s);
  };

  VectorXd rho = seed.rho.coeffs();
  int iter = 0;

  // Damped fixed-point sweep; handles the unstable regime where the
  // undamped map overshoots.
  const double damp = 0.5;
  for (; iter < max_iter / 2; ++iter) {
    VectorXd rho_vals = spectral::idct(rho);
    VectorXd u_coeffs = spectral::dct(detail::boltzmann_density(rho_vals, mass, params));
    VectorXd rho_next(n);
    for (int m = 0; m < n; ++m)
      rho_next[m] = params.c * u_coeffs[m] / params.a2_eigenvalue(m);
    const double step = l2_of((rho_next - rho).eval());
    rho += damp * (rho_next - rho);
    if (step < 1e-3 * (1.0 + l2_of(rho))) break;
  }

  // Newton polish on the strong residual, Jacobian assembled column-wise.
  auto jacobian = [&](const VectorXd& rho_coeffs) {
    VectorXd rho_vals = spectral::idct(rho_coeffs);
    VectorXd u_vals = detail::boltzmann_density(rho_vals, mass, params);
    Eigen::MatrixXd jac(n, n);
    const double ka = params.k / params.a;
    for (int col = 0; col < n; ++col) {
      VectorXd eta = VectorXd::Zero(n);
      eta[col] = 1.0;
      VectorXd eta_vals = spectral::idct(eta);
      VectorXd weighted = (u_vals.array() * eta_vals.array()).matrix();
      const double avg = g.quadrature_weight() * weighted.sum() / mass;
      VectorXd du_vals = ka * (weighted - avg * u_vals);
      VectorXd du_coeffs = spectral::dct(du_vals);
      for (int m = 0; m < n; ++m)
        jac(m, col) = (m == col ? params.a2_eigenvalue(m) : 0.0) -
                      params.c * du_coeffs[m];
    }
    return jac;
  };

  VectorXd gres = strong_residual(rho);
  double gnorm = l2_of(gres);
  for (; iter < max_iter; ++iter) {
    State cur = assemble(rho);
    const double res = stationary_residual(cur, params);
    const double tol = 1e-10 * (1.0 + norm_state(cur, NormKind::Z, params));
    if (res <= 0.5 * tol) break;
    Eigen::MatrixXd jac = jacobian(rho);
    VectorXd step = jac.partialPivLu().solve((-gres).eval());
    double t = 1.0;
    VectorXd rho_trial;
    double gnorm_trial = gnorm;
    VectorXd gres_trial;
    for (int ls = 0; ls < 6; ++ls, t *= 0.5) {
      rho_trial = rho + t * step;
      gres_trial = strong_residual(rho_trial);
      gnorm_trial = l2_of(gres_trial);
      if (gnorm_trial <= (1.0 - 1e-4 * t) * gnorm) break;
    }
    if (gnorm_trial >= gnorm && gnorm < 1e-13) break;  // at the roundoff floor
    rho = rho_trial;
    gres = gres_trial;
    gnorm = gnorm_trial;
  }

  State result = assemble(rho);
  const double res = stationary_residual(result, params);
  StationaryState out{std::move(result), res, mass, true, {}};
  out.converged = res <= out.tolerance(params);
  return out;
}

// The extended-log floor must sit below the omega-limit density (the paper
// fixes delta from the limit; the artifact bootstraps).  Halves delta until
// the given stationary profile clears it.
inline Params revalidate_delta(Params params, const StationaryState& stationary) {
  const double min_u = stationary.state.min_density(params);
  require(min_u > 0.0, errc::nonpositive_density,
          "stationary state with nonpositive density");
  while (params.delta > min_u) params.delta *= 0.5;
  return params;
}

// ---------------------------------------------------------------------------
// Linear stability of the constant state.

struct ModeStability {
  int mode = 0;
  std::complex<double> lambda_plus;   // larger real part
  std::complex<double> lambda_minus;
  bool unstable = false;
};

// Per-mode eigenvalues of [[-a mu, k f mu], [c, -(b mu + d)]].
inline std::vector<ModeStability> linear_stability(const Params& params, int max_mode) {
  require(max_mode >= 1, errc::precondition, "max_mode must be at least 1");
  std::vector<ModeStability> out;
  out.reserve(max_mode);
  for (int m = 1; m <= max_mode; ++m) {
    const double mu = params.grid->mu(m);
    const double tr = -params.a * mu - params.a2_eigenvalue(m);
    const double det = params.a * mu * params.a2_eigenvalue(m) -
                       params.k * params.f * mu * params.c;
    const std::complex<double> disc =
        std::sqrt(std::complex<double>(tr * tr - 4.0 * det, 0.0));
    ModeStability ms;
    ms.mode = m;
    ms.lambda_plus = 0.5 * (tr + disc);
    ms.lambda_minus = 0.5 * (tr - disc);
    ms.unstable = ms.lambda_plus.real() > 0.0;
    out.push_back(ms);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hessian operator L = Phi~''(Vbar) on X.

namespace detail {

// X-orthonormal cosine product basis: v-modes 1..n-1 then rho-modes 0..n-1.
// Coordinates of a pair (g1, g2) are g1_m sqrt(w_m) and g2_m sqrt(lam_m w_m).
struct XBasis {
  const Grid& g;
  const Params& p;
  int dim() const { return 2 * g.n() - 1; }

  TangentState unit(int i) const {
    VectorXd h = VectorXd::Zero(g.n());
    VectorXd eta = VectorXd::Zero(g.n());
    if (i < g.n() - 1) {
      const int m = i + 1;
      h[m] = 1.0 / std::sqrt(g.mode_weight(m));
    } else {
      const int m = i - (g.n() - 1);
      eta[m] = 1.0 / std::sqrt(p.a2_eigenvalue(m) * g.mode_weight(m));
    }
    return TangentState{Field::from_coeffs(p.grid, std::move(h)),
                        Field::from_coeffs(p.grid, std::move(eta))};
  }

  VectorXd coords(const TangentState& w) const {
    VectorXd x(dim());
    for (int m = 1; m < g.n(); ++m)
      x[m - 1] = w.dv.coeffs()[m] * std::sqrt(g.mode_weight(m));
    for (int m = 0; m < g.n(); ++m)
      x[g.n() - 1 + m] =
          w.drho.coeffs()[m] * std::sqrt(p.a2_eigenvalue(m) * g.mode_weight(m));
    return x;
  }

  TangentState from_coords(const VectorXd& x) const {
    VectorXd h = VectorXd::Zero(g.n());
    VectorXd eta = VectorXd::Zero(g.n());
    for (int m = 1; m < g.n(); ++m) h[m] = x[m - 1] / std::sqrt(g.mode_weight(m));
    for (int m = 0; m < g.n(); ++m)
      eta[m] = x[g.n() - 1 + m] / std::sqrt(p.a2_eigenvalue(m) * g.mode_weight(m));
    return TangentState{Field::from_coeffs(p.grid, std::move(h)),
                        Field::from_coeffs(p.grid, std::move(eta))};
  }
};

}  // namespace detail

// Dense matrix of L in the X-orthonormal basis.
inline Eigen::MatrixXd hessian_matrix(const State& base, const Params& params) {
  detail::XBasis basis{*params.grid, params};
  const int dim = basis.dim();
  Eigen::MatrixXd mat(dim, dim);
  for (int i = 0; i < dim; ++i)
    mat.col(i) = basis.coords(hessian_apply(base, basis.unit(i), params));
  return mat;
}

struct KernelResult {
  int dimension = 0;
  std::vector<State> basis;
};

// Eigendecomposition of L at a stationary state; fills hessian_summary with
// the 8 smallest-magnitude eigenvalues and returns the kernel.  Eigenvectors
// are returned X-orthonormal, ascending |eigenvalue|, first nonzero
// coordinate positive.
inline KernelResult kernel_of_hessian(StationaryState& stat, const Params& params,
                                      double kernel_cut = 1e-8) {
  require(stat.residual <= stat.tolerance(params), errc::not_stationary,
          "kernel_of_hessian needs a converged stationary state");
  detail::XBasis basis{*params.grid, params};
  Eigen::MatrixXd mat = hessian_matrix(stat.state, params);
  mat = 0.5 * (mat + mat.transpose()).eval();  // symmetric up to roundoff
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat);
  require(es.info() == Eigen::Success, errc::no_convergence, "eigensolver failed");

  const VectorXd& lam = es.eigenvalues();
  const int dim = basis.dim();
  std::vector<int> order(dim);
  for (int i = 0; i < dim; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return std::abs(lam[i]) < std::abs(lam[j]);
  });

  const double radius = std::max(std::abs(lam[0]), std::abs(lam[dim - 1]));
  const double cut = kernel_cut * radius;

  auto oriented = [&](int idx) {
    VectorXd vec = es.eigenvectors().col(idx);
    for (int i = 0; i < dim; ++i) {
      if (std::abs(vec[i]) > 1e-12) {
        if (vec[i] < 0.0) vec = -vec;
        break;
      }
    }
    return vec;
  };

  KernelResult result;
  HessianSummary summary;
  for (int i = 0; i < std::min(dim, 8); ++i)
    summary.smallest_eigenvalues.push_back(lam[order[i]]);
  for (int i = 0; i < dim && std::abs(lam[order[i]]) < cut; ++i) {
    TangentState w = basis.from_coords(oriented(order[i]));
    result.basis.push_back(State{std::move(w.dv), std::move(w.drho), 0.0});
  }
  result.dimension = static_cast<int>(result.basis.size());
  summary.kernel_dim = result.dimension;
  summary.kernel_basis = result.basis;
  stat.hessian_summary = std::move(summary);
  return result;
}

}  // namespace ks
