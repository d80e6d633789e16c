#pragma once

#include "otkhorn/types.hpp"

namespace otk {

// --- entropic-dual operations -------------------------------------------
//
// B(u, v) = diag(e^u) e^{-C/eta} diag(e^v) is never materialized in the
// plain domain by the solvers; everything is derived from the log-plan
// L_ij = u_i + v_j - C_ij/eta via log-sum-exp.

// Materializes exp(L). Entries may underflow to 0; the log-plan itself stays
// finite for |u|, |v| <= 700 and C/eta <= 1e6.
TransportPlan plan_from_potentials(const DualPotentials& p, const CostMatrix& cost,
                                   double eta);

// f(u, v) = 1^T B(u,v) 1 - <u, r> - <v, c>, with the mass term evaluated by
// log-sum-exp then exponentiation.
double dual_f(const DualPotentials& p, const CostMatrix& cost, double eta,
              const Measure& r, const Measure& c);

// phi(alpha, beta) = eta * sum_ij e^{-(C_ij - alpha_i - beta_j)/eta - 1}
//                    - <alpha, r> - <beta, c> - 1.
double dual_phi(const Vector& alpha, const Vector& beta, const CostMatrix& cost,
                double eta, const Measure& r, const Measure& c);

// ||r(X) - r||_1 + ||c(X) - c||_1; both E_t and the experiments' d(X).
double marginal_error(const TransportPlan& plan, const Measure& r, const Measure& c);
double marginal_error(const Vector& row_sums, const Vector& col_sums,
                      const Measure& r, const Measure& c);

// rho(a, b) = b - a + a log(a/b) with 0 log 0 = 0. Progress of one exact
// coordinate update.
double rho(double a, double b);
// Same value from log(b); stays finite when b underflows.
double rho_log(double a, double log_b);

// K(a, b) = 1^T (b - a) + sum_i a_i log(a_i / b_i), 0 log 0 = 0.
double kl_progress(const Vector& a, const Vector& b);
double kl_progress_log(const Vector& a, const Vector& log_b);

// R = ||C||_inf / eta + log n - 2 log min_{i,j} {r_i, c_j}; an l_inf radius
// containing some optimal dual pair.
double dual_radius_bound(const CostMatrix& cost, double eta, const Measure& r,
                         const Measure& c);

double ot_cost(const TransportPlan& plan, const CostMatrix& cost);

// <C, X> - eta * H(X) with H(X) = -sum X_ij log X_ij, 0 log 0 = 0.
double regularized_objective(const TransportPlan& plan, const CostMatrix& cost,
                             double eta);

// --- solver workspace ----------------------------------------------------

// Holds M = -C/eta and scratch for repeated marginal evaluations.
class DualKernel {
 public:
  DualKernel(const CostMatrix& cost, double eta);

  int size() const { return n_; }
  double eta() const { return eta_; }

  // log r_i(B(u,v)) = u_i + LSE_j(v_j + M_ij); always finite.
  void log_row_sums(const DualPotentials& p, Vector& out) const;
  void log_col_sums(const DualPotentials& p, Vector& out) const;
  void log_both_sums(const DualPotentials& p, Vector& out_rows, Vector& out_cols) const;
  double log_row_sum(const DualPotentials& p, int i) const;
  double log_col_sum(const DualPotentials& p, int j) const;

  // f(u, v) given precomputed log row sums.
  double dual_value(const DualPotentials& p, const Measure& r, const Measure& c,
                    const Vector& log_rows) const;
  double dual_value(const DualPotentials& p, const Measure& r, const Measure& c) const;

  TransportPlan plan(const DualPotentials& p) const;

  const Matrix& log_kernel() const { return log_kernel_; }

 private:
  int n_;
  double eta_;
  Matrix log_kernel_;            // -C/eta
  mutable Matrix scratch_;       // log-plan workspace
};

// Replaces one additive term of a log-domain sum: given lse = log(S) with
// e^{old_term} a summand of S, returns log(S - e^{old_term} + e^{new_term}).
// Returns NaN when cancellation ate the result; callers must then recompute
// the sum from scratch.
double log_replace_term(double lse, double old_term, double new_term);

}  // namespace otk
