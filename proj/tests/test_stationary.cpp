#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "ks/dynamics.hpp"
#include "ks/model.hpp"
#include "ks/norms.hpp"
#include "ks/stationary.hpp"
#include "oracles.hpp"

using namespace ks;
using Catch::Approx;

namespace {

Params p0(int n = 64, double k = 1.0) {
  Params p;
  p.grid = make_grid(0.0, M_PI, n);
  p.k = k;
  return p;
}

State perturbed_constant(const Params& p, double eps) {
  const double rho_bar = p.c * p.f / p.d;
  return make_state(
      Field::sample(p.grid, [&](double x) { return p.f * eps * std::cos(x); }),
      Field::sample(p.grid, [&](double x) { return rho_bar * (1.0 + eps * std::cos(x)); }));
}

// Dense Jacobian of evolution_rhs in coefficient coordinates; the rhs is
// linear-plus-bilinear, so central differences are exact up to roundoff.
Eigen::MatrixXd dense_flow_jacobian(const State& base, const Params& p) {
  const int n = p.grid->n();
  const int dim = 2 * n;
  const double h = 1e-6;
  Eigen::MatrixXd jac(dim, dim);
  for (int col = 0; col < dim; ++col) {
    VectorXd dv = VectorXd::Zero(n), drho = VectorXd::Zero(n);
    if (col < n)
      dv[col] = h;
    else
      drho[col - n] = h;
    State plus{Field::from_coeffs(p.grid, (base.v.coeffs() + dv).eval()),
               Field::from_coeffs(p.grid, (base.rho.coeffs() + drho).eval()), 0.0};
    State minus{Field::from_coeffs(p.grid, (base.v.coeffs() - dv).eval()),
                Field::from_coeffs(p.grid, (base.rho.coeffs() - drho).eval()), 0.0};
    TangentState fp = evolution_rhs(plus, p);
    TangentState fm = evolution_rhs(minus, p);
    jac.col(col).head(n) = (fp.dv.coeffs() - fm.dv.coeffs()) / (2.0 * h);
    jac.col(col).tail(n) = (fp.drho.coeffs() - fm.drho.coeffs()) / (2.0 * h);
  }
  return jac;
}

}  // namespace

TEST_CASE("constant_state examples", "[stationary]") {
  Params p = p0();
  StationaryState cs = constant_state(p);
  REQUIRE(norm_field(cs.state.v, NormKind::sup, p) == 0.0);
  REQUIRE(cs.state.rho.values()[0] == Approx(1.0).margin(1e-15));
  REQUIRE(cs.residual < 1e-12);
  REQUIRE(cs.mass == Approx(M_PI).margin(1e-14));

  Params q = p0();
  q.c = 2.0;
  q.d = 4.0;
  q.f = 3.0;
  q.delta = 1.0;
  StationaryState cs2 = constant_state(q);
  REQUIRE(cs2.state.rho.values()[17] == Approx(1.5).margin(1e-14));
  REQUIRE(norm_state(lyapunov_gradient(cs2.state, q), NormKind::X, q) < 1e-12);
}

TEST_CASE("solve_stationary returns the constant state from itself", "[stationary]") {
  Params p = p0();
  StationaryState sol = solve_stationary(p, constant_state(p).state, M_PI);
  REQUIRE(sol.converged);
  REQUIRE(sol.residual <= sol.tolerance(p));
  REQUIRE(norm_field(sol.state.v, NormKind::sup, p) < 1e-12);
  REQUIRE(sol.mass == Approx(M_PI).margin(1e-12));
}

TEST_CASE("solve_stationary rejects nonpositive mass", "[stationary]") {
  Params p = p0();
  REQUIRE_THROWS_MATCHES(solve_stationary(p, constant_state(p).state, 0.0), error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("precondition")));
}

TEST_CASE("solve_stationary agrees with the long unstable simulation",
          "[stationary][oracle]") {
  Params p = p0(64, 3.0);
  StepControl control;
  control.snapshot_stride = 10;
  Trajectory traj = simulate(perturbed_constant(p, 0.2), p, control);
  REQUIRE(traj.converged);

  StationaryState sol = solve_stationary(p, traj.snapshots.back(), M_PI);
  REQUIRE(sol.converged);
  REQUIRE(sol.residual <= sol.tolerance(p));
  REQUIRE(lyapunov(sol.state, traj.params) < -1.5 * M_PI);

  const State diff{traj.snapshots.back().v - sol.state.v,
                   traj.snapshots.back().rho - sol.state.rho, 0.0};
  REQUIRE(norm_state(diff, NormKind::X, p) < 1e-5);

  // mass preserved exactly by the Boltzmann construction
  REQUIRE(integrate(sol.state.v) + M_PI * p.f == Approx(M_PI).margin(1e-10));

  // Boltzmann relation: a log u - k rho constant across nodes
  const VectorXd u = sol.state.density_values(p);
  double wmin = 1e300, wmax = -1e300;
  for (int j = 0; j < p.grid->n(); ++j) {
    const double w = p.a * std::log(u[j]) - p.k * sol.state.rho.values()[j];
    wmin = std::min(wmin, w);
    wmax = std::max(wmax, w);
  }
  REQUIRE(wmax - wmin < 1e-8);

  // strict positivity of the omega limit
  REQUIRE(sol.state.min_density(p) > 0.0);
}

TEST_CASE("stationary_residual examples against the quadrature oracle",
          "[stationary][oracle]") {
  Params p = p0();
  REQUIRE(stationary_residual(constant_state(p).state, p) < 1e-12);

  State st = make_state(
      Field::zero(p.grid),
      Field::sample(p.grid, [](double x) { return 1.0 + 0.1 * std::cos(x); }));
  // w = a log f - k rho has derivative -0.1 k sin x; the strong rho-residual
  // is b rho'' - d rho + c f = -0.2 cos x at P0
  auto wx_sq = [&](double x) { return 0.01 * std::sin(x) * std::sin(x); };
  auto res2_sq = [&](double x) {
    const double r = -0.1 * std::cos(x) - (1.0 + 0.1 * std::cos(x)) + 1.0;
    return r * r;
  };
  const double expected = std::sqrt(p.a * oracle::simpson(wx_sq, 0, M_PI, 1 << 13)) +
                          std::sqrt(oracle::simpson(res2_sq, 0, M_PI, 1 << 13));
  const double got = stationary_residual(st, p);
  REQUIRE(got > 0.0);
  REQUIRE(got == Approx(expected).epsilon(1e-8));
}

TEST_CASE("linear_stability closed forms and the dense-eigensolve oracle",
          "[stationary][oracle]") {
  // k = 1: all modes stable
  Params p = p0();
  for (const ModeStability& ms : linear_stability(p, 8)) {
    REQUIRE(!ms.unstable);
    REQUIRE(ms.lambda_plus.real() < 0.0);
  }

  // k = 3: mode-1 eigenvalues (-3 +- sqrt(13))/2
  Params pu = p0(64, 3.0);
  const std::vector<ModeStability> modes = linear_stability(pu, 4);
  REQUIRE(modes[0].unstable);
  REQUIRE(modes[0].lambda_plus.real() ==
          Approx((-3.0 + std::sqrt(13.0)) / 2.0).margin(1e-12));
  REQUIRE(modes[0].lambda_minus.real() ==
          Approx((-3.0 - std::sqrt(13.0)) / 2.0).margin(1e-12));
  REQUIRE(modes[1].lambda_plus.real() < 0.0);

  // k = 2: marginal mode 1
  Params pm = p0(64, 2.0);
  REQUIRE(linear_stability(pm, 1)[0].lambda_plus.real() == Approx(0.0).margin(1e-13));

  // dense eigensolve of the discrete flow Jacobian reproduces mode 1
  Params small = p0(16, 3.0);
  Eigen::MatrixXd jac = dense_flow_jacobian(constant_state(small).state, small);
  Eigen::EigenSolver<Eigen::MatrixXd> es(jac);
  double best = -1e300;
  for (int i = 0; i < jac.rows(); ++i)
    best = std::max(best, es.eigenvalues()[i].real());
  REQUIRE(best == Approx((-3.0 + std::sqrt(13.0)) / 2.0).margin(1e-8));
}

TEST_CASE("hessian kernel at the constant state", "[stationary][oracle]") {
  // k = 1: the resonance a (b mu_m + d) = k c f has no integer solution
  Params p = p0();
  StationaryState cs = constant_state(p);
  KernelResult kr = kernel_of_hessian(cs, p);
  REQUIRE(kr.dimension == 0);
  REQUIRE(cs.hessian_summary.has_value());
  REQUIRE(cs.hessian_summary->smallest_eigenvalues.size() == 8);

  // k = 2: mode 1 resonates, kernel spanned by (cos x, cos(x)/2)
  Params pm = p0(64, 2.0);
  StationaryState cs2 = constant_state(pm);
  KernelResult kr2 = kernel_of_hessian(cs2, pm);
  REQUIRE(kr2.dimension == 1);
  const State& kv = kr2.basis[0];
  State ref = make_state(
      Field::sample(pm.grid, [](double x) { return std::cos(x); }),
      Field::sample(pm.grid, [](double x) { return 0.5 * std::cos(x); }));
  const double scale = 1.0 / norm_state(ref, NormKind::X, pm);
  State ref_normed{ref.v * scale, ref.rho * scale, 0.0};
  const State diff{kv.v - ref_normed.v, kv.rho - ref_normed.rho, 0.0};
  REQUIRE(norm_state(diff, NormKind::X, pm) < 1e-6);
}

TEST_CASE("assembled hessian matrix is symmetric", "[stationary]") {
  Params p = p0(32, 2.0);
  StationaryState cs = constant_state(p);
  Eigen::MatrixXd mat = hessian_matrix(cs.state, p);
  const double asym = (mat - mat.transpose()).cwiseAbs().maxCoeff();
  REQUIRE(asym <= 1e-10 * mat.cwiseAbs().maxCoeff());
}

TEST_CASE("kernel projection annihilates L on both sides", "[stationary]") {
  Params p = p0(32, 2.0);
  StationaryState cs = constant_state(p);
  KernelResult kr = kernel_of_hessian(cs, p);
  REQUIRE(kr.dimension == 1);

  Eigen::MatrixXd mat = hessian_matrix(cs.state, p);
  mat = 0.5 * (mat + mat.transpose()).eval();
  detail::XBasis basis{*p.grid, p};
  Eigen::VectorXd kvec = basis.coords(TangentState{kr.basis[0].v, kr.basis[0].rho});
  Eigen::MatrixXd proj = kvec * kvec.transpose();
  const double radius = mat.cwiseAbs().rowwise().sum().maxCoeff();
  REQUIRE((mat * proj).cwiseAbs().maxCoeff() <= 1e-8 * radius);
  REQUIRE((proj * mat).cwiseAbs().maxCoeff() <= 1e-8 * radius);
}

TEST_CASE("near-zero eigenvalue count is stable under refinement",
          "[stationary][property]") {
  for (double k : {1.0, 2.0}) {
    int counts[2];
    int idx = 0;
    for (int n : {32, 64}) {
      Params p = p0(n, k);
      StationaryState cs = constant_state(p);
      kernel_of_hessian(cs, p);
      counts[idx++] = cs.hessian_summary->kernel_dim;
    }
    REQUIRE(counts[0] == counts[1]);
  }
}

TEST_CASE("kernel_of_hessian rejects non-stationary input", "[stationary]") {
  Params p = p0();
  StationaryState bogus = constant_state(p);
  bogus.state = make_state(
      Field::sample(p.grid, [](double x) { return 0.3 * std::cos(x); }),
      Field::constant(p.grid, 1.0));
  bogus.residual = stationary_residual(bogus.state, p);
  REQUIRE_THROWS_MATCHES(kernel_of_hessian(bogus, p), error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("not-stationary")));
}

TEST_CASE("hessian kernel is empty at the nonconstant attractor", "[stationary]") {
  Params p = p0(64, 3.0);
  StepControl control;
  control.snapshot_stride = 10;
  Trajectory traj = simulate(perturbed_constant(p, 0.2), p, control);
  REQUIRE(traj.converged);
  Params eff = traj.params;  // delta bootstrapped below the attractor density
  REQUIRE(eff.delta <= traj.omega_limit->state.min_density(eff));
  KernelResult kr = kernel_of_hessian(*traj.omega_limit, eff);
  REQUIRE(kr.dimension == 0);
}

TEST_CASE("instability flag matches the energy landscape", "[stationary][property]") {
  // 3x3 grid straddling k c f = a (b mu_1 + d) = 2
  for (double k : {1.6, 2.0, 2.4}) {
    for (double c : {0.9, 1.0, 1.1}) {
      Params p = p0(48, k);
      p.c = c;
      const bool flagged = linear_stability(p, 8)[0].unstable ||
                           linear_stability(p, 8)[1].unstable;
      StationaryState sol = solve_stationary(p, perturbed_constant(p, 0.05), M_PI);
      const double phi_const = lyapunov(constant_state(p).state, p);
      const double phi_sol = lyapunov(sol.state, p);
      const bool found_lower =
          sol.converged &&
          norm_field(sol.state.v, NormKind::sup, p) > 1e-4 &&
          phi_sol < phi_const - 1e-10;
      INFO("k=" << k << " c=" << c << " flagged=" << flagged
               << " found_lower=" << found_lower << " phi_sol=" << phi_sol
               << " phi_const=" << phi_const);
      REQUIRE(flagged == found_lower);
    }
  }
}
