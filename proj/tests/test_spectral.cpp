#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ks/spectral.hpp"

using namespace ks;
using Catch::Approx;
using Eigen::VectorXd;

TEST_CASE("dct/idct round trip is the identity", "[spectral]") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  for (int n : {8, 64, 257}) {
    VectorXd v(n);
    for (int j = 0; j < n; ++j) v[j] = gauss(rng);
    VectorXd back = spectral::idct(spectral::dct(v));
    REQUIRE((back - v).cwiseAbs().maxCoeff() < 1e-12 * v.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("dct extracts single cosine modes", "[spectral]") {
  const int n = 32;
  for (int mode : {0, 1, 5, n - 1}) {
    VectorXd v(n);
    for (int j = 0; j < n; ++j) v[j] = std::cos(mode * M_PI * (j + 0.5) / n);
    VectorXd c = spectral::dct(v);
    for (int m = 0; m < n; ++m) {
      const double expected = m == mode ? 1.0 : 0.0;
      REQUIRE(c[m] == Approx(expected).margin(1e-12));
    }
  }
}

TEST_CASE("dst/idst resolve sine modes on midpoints", "[spectral]") {
  const int n = 32;
  for (int mode : {1, 2, n - 1}) {
    VectorXd v(n);
    for (int j = 0; j < n; ++j) v[j] = std::sin(mode * M_PI * (j + 0.5) / n);
    VectorXd s = spectral::dst(v);
    for (int m = 1; m < n; ++m)
      REQUIRE(s[m - 1] == Approx(m == mode ? 1.0 : 0.0).margin(1e-12));
    VectorXd back = spectral::idst(s, n);
    REQUIRE((back - v).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("padded evaluation agrees with direct series evaluation", "[spectral]") {
  const int n = 16;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  VectorXd c(n);
  for (int m = 0; m < n; ++m) c[m] = gauss(rng) * std::exp(-0.3 * m);
  VectorXd fine = spectral::idct(c, 2 * n);
  for (int j = 0; j < 2 * n; ++j) {
    double direct = c[0];
    for (int m = 1; m < n; ++m) direct += c[m] * std::cos(m * M_PI * (j + 0.5) / (2 * n));
    REQUIRE(fine[j] == Approx(direct).margin(1e-12));
  }
}

TEST_CASE("midpoint quadrature of resolved products is alias-free", "[spectral]") {
  // cos(m1) * cos(m2) has modes m1 +- m2 < 2n; the mean over the midpoints
  // must equal the analytic mean exactly.
  const int n = 16;
  for (int m1 : {3, n - 1}) {
    for (int m2 : {2, n - 1}) {
      VectorXd prod(n);
      for (int j = 0; j < n; ++j)
        prod[j] = std::cos(m1 * M_PI * (j + 0.5) / n) * std::cos(m2 * M_PI * (j + 0.5) / n);
      const double mean = prod.mean();
      const double expected = m1 == m2 ? 0.5 : 0.0;
      REQUIRE(mean == Approx(expected).margin(1e-13));
    }
  }
}
