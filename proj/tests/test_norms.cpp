#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ks/norms.hpp"
#include "ks/sampling.hpp"
#include "oracles.hpp"

using namespace ks;
using Catch::Approx;

namespace {
Params p0(int n = 64) {
  Params p;
  p.grid = make_grid(0.0, M_PI, n);
  return p;
}
}  // namespace

TEST_CASE("L2 and H1m' of cos(x) on (0, pi)", "[norms]") {
  Params p = p0();
  Field cosx = Field::sample(p.grid, [](double x) { return std::cos(x); });
  REQUIRE(norm_field(cosx, NormKind::L2, p) == Approx(std::sqrt(M_PI / 2)).margin(1e-12));
  // mu_1 = 1 with a = 1, so the dual norm coincides with the L2 norm here.
  REQUIRE(norm_field(cosx, NormKind::H1m_dual, p) ==
          Approx(std::sqrt(M_PI / 2)).margin(1e-10));
}

TEST_CASE("H1m' matches the dense Neumann-solve oracle", "[norms][oracle]") {
  Params p = p0(96);
  auto g = [](double x) { return std::cos(x) - 0.25 * std::cos(3.0 * x); };
  Field f = Field::sample(p.grid, g);
  const double dense = oracle::h1m_dual_norm(g, 0.0, M_PI, p.a, 2048);
  const double impl = norm_field(f, NormKind::H1m_dual, p);
  REQUIRE(impl == Approx(dense).epsilon(1e-6));

  // analytic value for cos x alone, certified to 1e-10
  Field cosx = Field::sample(p.grid, [](double x) { return std::cos(x); });
  REQUIRE(norm_field(cosx, NormKind::H1m_dual, p) ==
          Approx(std::sqrt(M_PI / 2)).margin(1e-10));
}

TEST_CASE("H1m' rejects fields with nonzero mean", "[norms]") {
  Params p = p0();
  Field two = Field::constant(p.grid, 2.0);
  REQUIRE_THROWS_MATCHES(norm_field(two, NormKind::H1m_dual, p), error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("not-zero-mean")));
}

TEST_CASE("norm_state at elementary states", "[norms]") {
  Params p = p0();
  State zero = make_state(Field::zero(p.grid), Field::zero(p.grid));
  for (NormKind kind : {NormKind::X, NormKind::Z, NormKind::Zstar})
    REQUIRE(norm_state(zero, kind, p) == 0.0);

  // V = (cos x, 0) with a = 1: all three norms equal sqrt(pi/2) since mu_1 = 1.
  State v = make_state(Field::sample(p.grid, [](double x) { return std::cos(x); }),
                       Field::zero(p.grid));
  const double expected = std::sqrt(M_PI / 2);
  REQUIRE(norm_state(v, NormKind::Zstar, p) == Approx(expected).margin(1e-10));
  REQUIRE(norm_state(v, NormKind::X, p) == Approx(expected).margin(1e-10));
  REQUIRE(norm_state(v, NormKind::Z, p) == Approx(expected).margin(1e-10));
}

TEST_CASE("interpolation inequality holds for random states", "[norms][property]") {
  Params p = p0();
  p.a = 0.7;
  p.b = 2.0;
  p.d = 0.3;
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 1000; ++rep) {
    State v = random_state(p, rng);
    const double x = norm_state(v, NormKind::X, p);
    const double z = norm_state(v, NormKind::Z, p);
    const double zs = norm_state(v, NormKind::Zstar, p);
    REQUIRE(x <= std::sqrt(z * zs) * (1.0 + 1e-12));
  }
}

TEST_CASE("norms are absolutely homogeneous", "[norms][property]") {
  Params p = p0();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> scale(-3.0, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    State v = random_state(p, rng);
    const double t = scale(rng);
    State tv{v.v * t, v.rho * t, 0.0};
    for (NormKind kind : {NormKind::X, NormKind::Z, NormKind::Zstar})
      REQUIRE(norm_state(tv, kind, p) ==
              Approx(std::abs(t) * norm_state(v, kind, p)).margin(1e-12));
  }
}

TEST_CASE("boundary-vanishing fields obey the dual-norm bound", "[norms][property]") {
  // eta = sum e_m sin(m pi (x - alpha)/L) vanishes at both endpoints; its
  // derivative is zero-mean and ||eta'||_{H1m'} <= (1/sqrt a) ||eta||_{L2}
  // (an identity for the discrete mode weights).
  Params p = p0(64);
  p.a = 1.7;
  const Grid& g = *p.grid;
  std::mt19937_64 rng(41);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 100; ++rep) {
    VectorXd sine(g.n() - 1);
    for (int m = 1; m < g.n(); ++m) sine[m - 1] = gauss(rng) * std::exp(-0.1 * m);

    // eta' as a cosine field: d/dx sin(m pi xi / L) = (m pi / L) cos(...)
    VectorXd dc = VectorXd::Zero(g.n());
    for (int m = 1; m < g.n(); ++m) dc[m] = (m * M_PI / g.length()) * sine[m - 1];
    Field eta_prime = Field::from_coeffs(p.grid, dc);
    REQUIRE(std::abs(eta_prime.mean()) < 1e-14);

    double eta_l2_sq = 0.0;  // int sin_m sin_m' = (L/2) delta_mm'
    for (int m = 1; m < g.n(); ++m)
      eta_l2_sq += 0.5 * g.length() * sine[m - 1] * sine[m - 1];

    const double dual = norm_field(eta_prime, NormKind::H1m_dual, p);
    REQUIRE(dual <= std::sqrt(eta_l2_sq / p.a) + 1e-8);
    REQUIRE(dual == Approx(std::sqrt(eta_l2_sq / p.a)).epsilon(1e-10));
  }
}
