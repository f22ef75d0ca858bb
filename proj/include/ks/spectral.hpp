#pragma once

// Cosine/sine pseudospectral kernels on midpoint collocation nodes.
//
// A field on (alpha, beta) with homogeneous Neumann conditions is expanded in
// the cosine basis phi_m(x) = cos(m pi (x - alpha) / L), m = 0..n-1, and
// collocated at the n midpoints x_j = alpha + L (j + 1/2) / n.  Derivatives of
// cosine series live in the complementary sine basis sin(m pi (x - alpha) / L),
// m = 1..n-1, which vanishes at both endpoints.  The midpoint rule on these
// nodes integrates cosine modes 0..2n-1 exactly, so products of two resolved
// fields are quadrature-exact; nonlinear compositions are evaluated on a
// 2x zero-padded grid.

#include <fftw3.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace ks::spectral {

using Eigen::VectorXd;

namespace detail {

// FFTW planner calls are not thread-safe; executions via the new-array
// interface are.  Plans are created once per (kind, size) with
// FFTW_UNALIGNED so they apply to arbitrary caller buffers.
class PlanCache {
 public:
  static fftw_plan get(fftw_r2r_kind kind, int n) {
    static PlanCache cache;
    std::lock_guard<std::mutex> lock(cache.mutex_);
    auto key = std::make_pair(static_cast<int>(kind), n);
    auto it = cache.plans_.find(key);
    if (it != cache.plans_.end()) return it->second;
    std::vector<double> in(static_cast<size_t>(n)), out(static_cast<size_t>(n));
    fftw_plan p = fftw_plan_r2r_1d(n, in.data(), out.data(), kind,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache.plans_.emplace(key, p);
    return p;
  }

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline void execute(fftw_r2r_kind kind, const VectorXd& in, VectorXd& out) {
  const int n = static_cast<int>(in.size());
  out.resize(n);
  VectorXd scratch = in;  // r2r plans may clobber their input
  fftw_execute_r2r(PlanCache::get(kind, n), scratch.data(), out.data());
}

}  // namespace detail

// Values at the n midpoints -> cosine coefficients c_0..c_{n-1}.
// c_0 is the mean of the values.
inline VectorXd dct(const VectorXd& values) {
  const auto n = values.size();
  VectorXd out;
  detail::execute(FFTW_REDFT10, values, out);
  out[0] /= 2.0;
  out /= static_cast<double>(n);
  return out;
}

// Cosine coefficients -> values at the midpoints of a grid with
// npoints >= coeffs.size() nodes (zero-padded when strictly larger).
inline VectorXd idct(const VectorXd& coeffs, Eigen::Index npoints) {
  VectorXd in = VectorXd::Zero(npoints);
  in.head(coeffs.size()) = 0.5 * coeffs;
  in[0] = coeffs[0];
  VectorXd out;
  detail::execute(FFTW_REDFT01, in, out);
  return out;
}

inline VectorXd idct(const VectorXd& coeffs) { return idct(coeffs, coeffs.size()); }

// Values at n midpoints -> sine coefficients s_1..s_{n-1} (index i holds
// mode i+1).  The top mode n is dropped: sine fields produced by
// differentiating resolved cosine fields never populate it.
inline VectorXd dst(const VectorXd& values) {
  const auto n = values.size();
  VectorXd out;
  detail::execute(FFTW_RODFT10, values, out);
  return out.head(n - 1) / static_cast<double>(n);
}

// Sine coefficients (modes 1..coeffs.size()) -> values at npoints midpoints.
inline VectorXd idst(const VectorXd& coeffs, Eigen::Index npoints) {
  VectorXd in = VectorXd::Zero(npoints);
  in.head(coeffs.size()) = 0.5 * coeffs;
  VectorXd out;
  detail::execute(FFTW_RODFT01, in, out);
  return out;
}

// Compensated (Kahan) summation; keeps quadrature deterministic and
// accurate to a few ulps independent of n.
inline double kahan_sum(const VectorXd& terms) {
  double sum = 0.0, comp = 0.0;
  for (Eigen::Index i = 0; i < terms.size(); ++i) {
    const double y = terms[i] - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

}  // namespace ks::spectral
