#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>

#include "ks/errors.hpp"
#include "ks/grid.hpp"
#include "ks/spectral.hpp"

namespace ks {

using Eigen::VectorXd;

// One scalar function on the interval, held in both the point-value and
// cosine-coefficient representations (kept synchronized on construction).
class Field {
 public:
  static Field from_values(GridPtr grid, VectorXd values) {
    check_size(*grid, values.size());
    VectorXd coeffs = spectral::dct(values);
    return Field(std::move(grid), std::move(values), std::move(coeffs));
  }

  static Field from_coeffs(GridPtr grid, VectorXd coeffs) {
    check_size(*grid, coeffs.size());
    VectorXd values = spectral::idct(coeffs);
    return Field(std::move(grid), std::move(values), std::move(coeffs));
  }

  static Field zero(GridPtr grid) {
    VectorXd c = VectorXd::Zero(grid->n());
    return from_coeffs(std::move(grid), std::move(c));
  }

  static Field constant(GridPtr grid, double value) {
    VectorXd c = VectorXd::Zero(grid->n());
    c[0] = value;
    return from_coeffs(std::move(grid), std::move(c));
  }

  template <typename F>
  static Field sample(GridPtr grid, F&& f) {
    VectorXd v(grid->n());
    for (int j = 0; j < grid->n(); ++j) v[j] = f(grid->nodes()[j]);
    return from_values(std::move(grid), std::move(v));
  }

  const GridPtr& grid() const { return grid_; }
  const VectorXd& values() const { return values_; }
  const VectorXd& coeffs() const { return coeffs_; }
  double mean() const { return coeffs_[0]; }

  // Point values on the m-fold zero-padded midpoint grid.
  VectorXd padded_values(int factor = 2) const {
    return spectral::idct(coeffs_, static_cast<Eigen::Index>(factor) * grid_->n());
  }

  Field operator+(const Field& o) const { return binary(o, coeffs_ + o.coeffs_); }
  Field operator-(const Field& o) const { return binary(o, coeffs_ - o.coeffs_); }
  Field operator*(double s) const { return from_coeffs(grid_, (coeffs_ * s).eval()); }
  friend Field operator*(double s, const Field& f) { return f * s; }

 private:
  Field(GridPtr grid, VectorXd values, VectorXd coeffs)
      : grid_(std::move(grid)), values_(std::move(values)), coeffs_(std::move(coeffs)) {}

  Field binary(const Field& o, VectorXd coeffs) const {
    require(grid_->same_as(*o.grid_), errc::precondition, "grids differ");
    return from_coeffs(grid_, std::move(coeffs));
  }

  static void check_size(const Grid& g, Eigen::Index size) {
    require(size == g.n(), errc::precondition, "field size does not match grid");
  }

  GridPtr grid_;
  VectorXd values_;
  VectorXd coeffs_;
};

enum class Direction { to_spectral, to_physical };

// Both representations are always populated; this returns a copy with the
// requested one (re)derived from the other, so it doubles as a round-trip.
inline Field transform(const Field& field, Direction direction) {
  if (direction == Direction::to_spectral)
    return Field::from_values(field.grid(), field.values());
  return Field::from_coeffs(field.grid(), field.coeffs());
}

// Spectral differentiation.  First derivatives of cosine fields are sine
// series vanishing at both endpoints; the returned Field carries their exact
// node values.  Second derivatives stay in the cosine basis (diagonal).
inline Field derivative(const Field& field, int order) {
  require(order == 1 || order == 2, errc::precondition, "order must be 1 or 2");
  const Grid& g = *field.grid();
  const int n = g.n();
  if (order == 2) {
    VectorXd c(n);
    for (int m = 0; m < n; ++m) c[m] = -g.mu(m) * field.coeffs()[m];
    return Field::from_coeffs(field.grid(), std::move(c));
  }
  VectorXd s(n - 1);
  for (int m = 1; m < n; ++m)
    s[m - 1] = -(m * M_PI / g.length()) * field.coeffs()[m];
  return Field::from_values(field.grid(), spectral::idst(s, n));
}

// Quadrature; exact for every resolved cosine mode and linear in the field.
inline double integrate(const Field& field) {
  return field.grid()->length() * field.coeffs()[0];
}

}  // namespace ks
