#pragma once

#include "otkhorn/types.hpp"

namespace otk {

// Projects a nonnegative plan onto the transportation polytope of (r, c):
// rows are clipped by min(r_i / r_i(X), 1), then columns by
// min(c_j / c_j(X'), 1), and the missing mass is restored by the rank-one
// correction e_r e_c^T / ||e_r||_1. A zero row or column sum keeps scaling
// factor 1. The output satisfies ||X_hat - X||_1 <= 2 * marginal_error(X, r, c)
// and has exact marginals (feasible flag set).
TransportPlan round_to_feasible(const TransportPlan& plan, const Measure& r,
                                const Measure& c);

}  // namespace otk
