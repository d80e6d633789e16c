#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "otkhorn/types.hpp"

namespace otk {

// Mirror map contract for the adaptive primal-dual mirror descent solver:
// phi must be (1/delta)-strongly convex and 1-smooth with respect to the
// sup norm. Non-quadratic maps must supply their own prox argmin.
struct MirrorMap {
  double delta = 1.0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<double(const Vector&, const Vector&)> bregman;
  // Solves argmin_z { <g, z> + bregman(z, z_prev) / step }.
  std::function<Vector(const Vector& g, const Vector& z_prev, double step)> argmin;

  // phi(z) = ||z||^2 / (2 delta); the prox step is closed-form.
  static MirrorMap scaled_euclidean(double delta);
  // delta = 1 specialization used by the accelerated gradient baseline.
  static MirrorMap euclidean() { return scaled_euclidean(1.0); }
};

// Linearly constrained dual problem min_lambda phi(lambda) with
// phi(lambda) = <lambda, b> + max_x { -f(x) - <A^T lambda, x> } and
// grad phi(lambda) = b - A x(lambda).
struct DualProblem {
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> gradient;
  std::function<Vector(const Vector&)> primal_map;
  std::function<Vector(const Vector&)> apply_A;
  Vector b;
  double a_norm_1to1 = 0.0;
  double primal_strong_convexity = 0.0;  // modulus of f w.r.t. the l1 norm
  int dual_dim = 0;
  // Shared factorization returning (phi(lambda), x(lambda)) in one pass.
  std::function<std::pair<double, Vector>(const Vector&)> value_and_primal;
};

// Entropic OT dual over lambda in R^{2n}, in the simplex-constrained form
// phi(lambda) = <lambda, b> + eta log sum exp((-C_ij - lambda_i -
// lambda_{n+j})/eta), whose primal map is the softmax plan. The scaled duals
// of the scaling form are (alpha, beta) = -lambda + shift, with the shift
// anchored by the unit-mass condition below.
DualProblem make_ot_dual_problem(const CostMatrix& cost, double eta,
                                 const Measure& r, const Measure& c);

// The constant to add to both halves of -lambda so the resulting scaled
// duals put unit mass on the unnormalized plan.
double ot_dual_shift(const CostMatrix& cost, double eta, const Vector& lambda);

// X_ij = exp((-C_ij + alpha_i + beta_j)/eta - 1), materialized from its log.
Matrix x_of_lambda_ot(const Vector& alpha, const Vector& beta,
                      const CostMatrix& cost, double eta);

struct ApdSolution {
  Vector primal;  // weighted primal average x^t
  Vector lambda;  // final dual iterate
  SolveReport report;
};

// Optional theorem-backed runtime checks for OT instances.
struct ApdBoundChecks {
  double dual_radius = 0.0;       // eta * (R + 1/2)
  double iteration_ceiling = 0.0; // 1 + 4 sqrt(2) ||A|| sqrt(delta (R+1/2)/eps')
};

// Adaptive primal-dual accelerated mirror descent with doubling line search
// measured in the sup norm.
ApdSolution apdamd(const DualProblem& problem, const MirrorMap& phi,
                   double eps_prime, const SolverConfig& cfg,
                   const std::optional<ApdBoundChecks>& checks = std::nullopt);

// Euclidean specialization: delta = 1, Bregman term ||z - z'||^2 / 2 and the
// line-search guard measured in the 2-norm.
ApdSolution apdagd(const DualProblem& problem, double eps_prime,
                   const SolverConfig& cfg);

struct OtApproxResult {
  TransportPlan plan;  // rounded to exact marginals
  SolveReport report;
  Vector alpha, beta;  // converged scaled duals of the solved (mixed) problem
};

// Full epsilon-approximation pipeline: eta = eps/(4 log n),
// eps' = eps/(8 ||C||_inf), marginal mixing, dual solve to eps'/2, rounding.
OtApproxResult approx_ot_apdamd(const CostMatrix& cost, const Measure& r,
                                const Measure& c, double eps,
                                const SolverConfig& cfg = {});
OtApproxResult approx_ot_apdagd(const CostMatrix& cost, const Measure& r,
                                const Measure& c, double eps,
                                const SolverConfig& cfg = {});

}  // namespace otk
