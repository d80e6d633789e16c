#pragma once

#include <otkhorn/rng.hpp>
#include <otkhorn/summation.hpp>
#include <otkhorn/types.hpp>

namespace otk::testutil {

inline Measure random_simplex(CounterRng& rng, int n) {
  Vector w(n);
  for (int i = 0; i < n; ++i) w[i] = rng.uniform01() + 1e-3;
  w /= compensated_sum(w);
  return Measure(w);
}

inline CostMatrix random_cost(CounterRng& rng, int n, double scale = 1.0) {
  Matrix c(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) c(i, j) = scale * rng.uniform01();
  }
  return CostMatrix(std::move(c));
}

// Entries uniform, rescaled so ||C||_inf is exactly one.
inline CostMatrix random_cost_unit_sup(CounterRng& rng, int n) {
  Matrix c(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) c(i, j) = rng.uniform01();
  }
  c /= c.maxCoeff();
  return CostMatrix(std::move(c));
}

inline DualPotentials random_potentials(CounterRng& rng, int n, double range) {
  DualPotentials p = DualPotentials::zeros(n);
  for (int i = 0; i < n; ++i) {
    p.u[i] = range * (2.0 * rng.uniform01() - 1.0);
    p.v[i] = range * (2.0 * rng.uniform01() - 1.0);
  }
  return p;
}

inline Measure uniform_measure(int n) {
  return Measure(Vector::Constant(n, 1.0 / n));
}

}  // namespace otk::testutil
