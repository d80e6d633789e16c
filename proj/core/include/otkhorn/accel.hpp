#pragma once

#include "otkhorn/classic.hpp"
#include "otkhorn/types.hpp"

namespace otk {

// theta_{t+1} = theta (sqrt(theta^2 + 4) - theta) / 2; satisfies
// (theta_{t+1}/theta_t)^2 = 1 - theta_{t+1} and theta_t <= 2/(t+2).
double theta_next(double theta);

// Accelerated randomized Sinkhorn: estimate-sequence auxiliary iterates with
// a fair-coin block gradient step, monotone search between the previous
// check iterate and the extrapolated point, then an exact block scaling of
// whichever marginal has more K-progress to give. Deterministic given
// cfg.seed.
KhornResult randkhorn(const CostMatrix& cost, double eta, const Measure& r,
                      const Measure& c, const SolverConfig& cfg);

// Accelerated randomized Greenkhorn: same frame with a single random
// coordinate in the auxiliary step (denominator 8 n eta theta, extrapolation
// 2 n theta) and the greedy rho-coordinate exact step.
KhornResult gandkhorn(const CostMatrix& cost, double eta, const Measure& r,
                      const Measure& c, const SolverConfig& cfg);

}  // namespace otk
