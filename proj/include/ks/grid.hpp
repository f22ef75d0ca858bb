#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>

#include "ks/errors.hpp"

namespace ks {

// Collocation grid for the cosine basis on a bounded open interval.
class Grid {
 public:
  static std::shared_ptr<const Grid> make(double alpha, double beta, int n) {
    require(beta > alpha, errc::invalid_interval,
            "interval endpoints must satisfy beta > alpha");
    require(n >= 8, errc::too_coarse, "need at least 8 cosine modes");
    return std::shared_ptr<const Grid>(new Grid(alpha, beta, n));
  }

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  int n() const { return n_; }
  double length() const { return length_; }
  const Eigen::VectorXd& nodes() const { return nodes_; }

  // Minimal (here: uniform) node spacing.
  double node_spacing() const { return length_ / n_; }

  // Laplacian eigenvalue of cosine mode m: mu_m = (m pi / L)^2.
  double mu(int m) const {
    const double w = m * M_PI / length_;
    return w * w;
  }

  // L2 mass of cosine mode m: integral of phi_m^2 over the interval.
  double mode_weight(int m) const { return m == 0 ? length_ : 0.5 * length_; }

  // Uniform midpoint quadrature weight.
  double quadrature_weight() const { return length_ / n_; }

  bool same_as(const Grid& other) const {
    return alpha_ == other.alpha_ && beta_ == other.beta_ && n_ == other.n_;
  }

 private:
  Grid(double alpha, double beta, int n)
      : alpha_(alpha), beta_(beta), n_(n), length_(beta - alpha) {
    nodes_.resize(n);
    for (int j = 0; j < n; ++j)
      nodes_[j] = alpha + length_ * (j + 0.5) / n;
  }

  double alpha_, beta_;
  int n_;
  double length_;
  Eigen::VectorXd nodes_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(double alpha, double beta, int n) {
  return Grid::make(alpha, beta, n);
}

}  // namespace ks
