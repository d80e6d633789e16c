#pragma once

#include "otkhorn/kernel.hpp"
#include "otkhorn/types.hpp"

namespace otk {

// Scaling state exposed to callers of the normalization trick; solvers keep
// the same quantities internally in the log domain.
struct ClassicState {
  DualPotentials potentials;
  Vector row_sums;  // r(B(u, v))
  Vector col_sums;  // c(B(u, v))
  long iter = 0;
};

struct KhornResult {
  DualPotentials potentials;
  TransportPlan plan;
  SolveReport report;
};

// Alternating full row/column scaling in the log domain. Each half-step
// makes the corresponding marginal exact; the stopping check runs before
// each update so already-feasible inputs cost zero iterations.
KhornResult sinkhorn(const CostMatrix& cost, double eta, const Measure& r,
                     const Measure& c, const SolverConfig& cfg);

// Greedy single row/column scaling: the coordinate with the largest
// rho-progress is updated, row winning ties. Marginal caches are maintained
// incrementally in O(n) per iteration and re-validated every 1000 iterations.
KhornResult greenkhorn(const CostMatrix& cost, double eta, const Measure& r,
                       const Measure& c, const SolverConfig& cfg);

// Shifts u and v by -log(m)/2 each, where m = 1^T B 1, so the total mass
// becomes one. B only changes by the positive scalar 1/m.
ClassicState apply_normalization_trick(const ClassicState& s);

// Greedy coordinate choice shared by Greenkhorn and Gandkhorn: the larger of
// the two argmax rho values wins, row preferred on ties, lowest index within
// a vector.
struct GreedyPick {
  bool row = true;
  int index = 0;
  double value = 0.0;  // rho of the selected coordinate
};
GreedyPick greedy_select(const Vector& rho_rows, const Vector& rho_cols);

// One exact scaling half-step: after Half::kRow, r(B) equals the target
// exactly; after Half::kCol, c(B) does.
enum class Half { kRow, kCol };
void sinkhorn_halfstep(const DualKernel& kernel, const Measure& target, Half half,
                       DualPotentials& p);

}  // namespace otk
