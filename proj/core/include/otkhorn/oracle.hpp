#pragma once

#include <utility>
#include <vector>

#include "otkhorn/types.hpp"

namespace otk {

// A vertex of the transportation polytope together with its spanning-tree
// basis of 2n-1 cells.
struct LpSolution {
  TransportPlan plan;
  double cost = 0.0;
  std::vector<std::pair<int, int>> basis;
};

// Exact minimum-cost transportation plan by exhaustive enumeration of the
// basic feasible solutions (spanning trees of K_{n,n}). Guarded to n <= 4;
// C(16, 7) = 11440 candidate bases at n = 4. Ties resolve to the
// lexicographically smallest basis.
LpSolution exact_ot_lp(const CostMatrix& cost, const Measure& r, const Measure& c);

}  // namespace otk
