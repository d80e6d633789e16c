#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>

namespace otk {

// Neumaier-compensated sum. Marginal and feasibility checks accumulate
// n values whose rounding residue must stay below the 1e-12 feasibility
// tolerance even at large n.
inline double compensated_sum(const double* data, std::ptrdiff_t n) {
  double sum = 0.0;
  double comp = 0.0;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double x = data[i];
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

inline double compensated_sum(const Eigen::VectorXd& v) {
  return compensated_sum(v.data(), v.size());
}

inline double l1_norm(const Eigen::VectorXd& v) {
  double sum = 0.0;
  double comp = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double x = std::abs(v[i]);
    const double t = sum + x;
    comp += (sum >= x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

inline double l1_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double sum = 0.0;
  double comp = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = std::abs(a[i] - b[i]);
    const double t = sum + x;
    comp += (sum >= x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

inline double l1_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double sum = 0.0;
  double comp = 0.0;
  const double* pa = a.data();
  const double* pb = b.data();
  const std::ptrdiff_t n = a.size();
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double x = std::abs(pa[i] - pb[i]);
    const double t = sum + x;
    comp += (sum >= x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

// log(sum_i exp(x_i)) without overflow. Returns -inf for empty input.
inline double log_sum_exp(const Eigen::VectorXd& x) {
  if (x.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).exp().sum());
}

}  // namespace otk
