#include "otkhorn/accel.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "otkhorn/rng.hpp"
#include "otkhorn/summation.hpp"

namespace otk {

namespace {

using Clock = std::chrono::steady_clock;

long long ns_since(const Clock::time_point& t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0)
      .count();
}

// Shared per-iteration state for the two accelerated variants.
struct AccelState {
  DualPotentials check;
  DualPotentials tilde;
  double theta = 1.0;
  long iter = 0;
  CounterRng rng;

  AccelState(int n, std::uint64_t seed)
      : check(DualPotentials::zeros(n)), tilde(DualPotentials::zeros(n)), rng(seed) {}
};

void advance_theta(AccelState& state, bool assert_bounds, SolveReport& report) {
  const double next = theta_next(state.theta);
  if (assert_bounds) {
    const double ratio = next / state.theta;
    if (std::abs(ratio * ratio - (1.0 - next)) > 1e-12) ++report.bound_violations;
  }
  state.theta = next;
  ++state.iter;
}

}  // namespace

double theta_next(double theta) {
  if (!(theta > 0.0) || theta > 1.0) {
    throw std::domain_error("theta_next: theta must lie in (0, 1]");
  }
  return theta * (std::sqrt(theta * theta + 4.0) - theta) / 2.0;
}

KhornResult randkhorn(const CostMatrix& cost, double eta, const Measure& r,
                      const Measure& c, const SolverConfig& cfg) {
  cfg.validate();
  if (!(r.min_weight() > 0) || !(c.min_weight() > 0)) {
    throw std::invalid_argument("randkhorn requires strictly positive marginals");
  }
  DualKernel kernel(cost, eta);
  const int n = kernel.size();
  if (r.size() != n || c.size() != n) {
    throw std::invalid_argument("randkhorn: marginal dimensions do not match cost");
  }

  const auto t0 = Clock::now();
  AccelState state(n, cfg.seed);
  SolveReport report;
  report.seed = cfg.seed;

  const Vector log_r = r.weights().array().log();
  const Vector log_c = c.weights().array().log();

  Vector lrs(n), lcs(n);  // marginal caches of the check iterate
  kernel.log_both_sums(state.check, lrs, lcs);
  double f_check = kernel.dual_value(state.check, r, c, lrs);

  Vector lrs_hat(n), lcs_hat(n), block(n);

  for (long t = 0;; ++t) {
    const double err = marginal_error(lrs.array().exp(), lcs.array().exp(), r, c);
    report.trace.push_back(TraceRow{t, err, f_check, ns_since(t0)});
    report.iterations = t;

    if (!std::isfinite(err) || !std::isfinite(f_check)) {
      report.termination = Termination::kNumericalFailure;
      break;
    }
    if (err <= cfg.eps_prime) {
      report.termination = Termination::kConverged;
      break;
    }
    if (t >= cfg.max_iter) {
      report.termination = Termination::kMaxIterations;
      break;
    }
    if (cfg.assert_bounds &&
        state.theta > 2.0 / static_cast<double>(t + 2) + 1e-12) {
      ++report.bound_violations;
    }

    const double theta = state.theta;
    DualPotentials bar{(1.0 - theta) * state.check.u + theta * state.tilde.u,
                       (1.0 - theta) * state.check.v + theta * state.tilde.v};

    // Auxiliary block gradient step on a fair coin.
    DualPotentials tilde_new = state.tilde;
    if (!state.rng.bernoulli()) {
      kernel.log_row_sums(bar, block);
      tilde_new.u -= (block.array().exp().matrix() - r.weights()) / (8.0 * eta * theta);
    } else {
      kernel.log_col_sums(bar, block);
      tilde_new.v -= (block.array().exp().matrix() - c.weights()) / (8.0 * eta * theta);
    }

    DualPotentials hat{bar.u + 2.0 * theta * (tilde_new.u - state.tilde.u),
                       bar.v + 2.0 * theta * (tilde_new.v - state.tilde.v)};
    kernel.log_both_sums(hat, lrs_hat, lcs_hat);
    const double f_hat = kernel.dual_value(hat, r, c, lrs_hat);

    // Monotone search; ties keep the check iterate.
    const bool hat_wins = f_hat < f_check;
    const DualPotentials& winner = hat_wins ? hat : state.check;
    const Vector& lrs_w = hat_wins ? lrs_hat : lrs;
    const Vector& lcs_w = hat_wins ? lcs_hat : lcs;
    const double f_winner = hat_wins ? f_hat : f_check;
    if (cfg.assert_bounds && f_winner > f_check + 1e-10) ++report.bound_violations;

    // Exact block scaling of whichever marginal has more K-progress.
    const double k_row = kl_progress_log(r.weights(), lrs_w);
    const double k_col = kl_progress_log(c.weights(), lcs_w);
    DualPotentials next = winner;
    if (k_row >= k_col) {
      next.u += (log_r.array() - lrs_w.array()).matrix();
    } else {
      next.v += (log_c.array() - lcs_w.array()).matrix();
    }
    kernel.log_both_sums(next, lrs, lcs);
    const double f_next = kernel.dual_value(next, r, c, lrs);

    if (cfg.assert_bounds) {
      if (f_next > f_winner + 1e-10) ++report.bound_violations;
      const double slack = 1e-9 * std::max(1.0, std::abs(f_winner));
      if (f_winner - f_next + slack < 0.5 * std::max(k_row, k_col)) {
        ++report.bound_violations;
      }
    }

    state.check = std::move(next);
    state.tilde = std::move(tilde_new);
    f_check = f_next;
    advance_theta(state, cfg.assert_bounds, report);
  }

  return KhornResult{state.check, kernel.plan(state.check), std::move(report)};
}

KhornResult gandkhorn(const CostMatrix& cost, double eta, const Measure& r,
                      const Measure& c, const SolverConfig& cfg) {
  cfg.validate();
  if (!(r.min_weight() > 0) || !(c.min_weight() > 0)) {
    throw std::invalid_argument("gandkhorn requires strictly positive marginals");
  }
  DualKernel kernel(cost, eta);
  const int n = kernel.size();
  if (r.size() != n || c.size() != n) {
    throw std::invalid_argument("gandkhorn: marginal dimensions do not match cost");
  }

  const auto t0 = Clock::now();
  AccelState state(n, cfg.seed);
  SolveReport report;
  report.seed = cfg.seed;

  const Vector log_r = r.weights().array().log();
  const Vector log_c = c.weights().array().log();

  Vector lrs(n), lcs(n);
  kernel.log_both_sums(state.check, lrs, lcs);
  double f_check = kernel.dual_value(state.check, r, c, lrs);

  Vector lrs_hat(n), lcs_hat(n), rho_rows(n), rho_cols(n);
  bool fresh_sums = true;

  for (long t = 0;; ++t) {
    double err = marginal_error(lrs.array().exp(), lcs.array().exp(), r, c);
    // The exact step maintains these sums incrementally; confirm convergence
    // against a fresh factorization before declaring it.
    if (err <= cfg.eps_prime && !fresh_sums) {
      kernel.log_both_sums(state.check, lrs, lcs);
      f_check = kernel.dual_value(state.check, r, c, lrs);
      err = marginal_error(lrs.array().exp(), lcs.array().exp(), r, c);
      fresh_sums = true;
    }
    report.trace.push_back(TraceRow{t, err, f_check, ns_since(t0)});
    report.iterations = t;

    if (!std::isfinite(err) || !std::isfinite(f_check)) {
      report.termination = Termination::kNumericalFailure;
      break;
    }
    if (err <= cfg.eps_prime) {
      report.termination = Termination::kConverged;
      break;
    }
    if (t >= cfg.max_iter) {
      report.termination = Termination::kMaxIterations;
      break;
    }
    if (cfg.assert_bounds &&
        state.theta > 2.0 / static_cast<double>(t + 2) + 1e-12) {
      ++report.bound_violations;
    }

    const double theta = state.theta;
    DualPotentials bar{(1.0 - theta) * state.check.u + theta * state.tilde.u,
                       (1.0 - theta) * state.check.v + theta * state.tilde.v};

    // Single random coordinate of the auxiliary iterate.
    const bool coin = state.rng.bernoulli();
    const int pi = static_cast<int>(state.rng.uniform_below(n));
    DualPotentials tilde_new = state.tilde;
    if (!coin) {
      const double row_sum = std::exp(kernel.log_row_sum(bar, pi));
      tilde_new.u[pi] -= (row_sum - r[pi]) / (8.0 * n * eta * theta);
    } else {
      const double col_sum = std::exp(kernel.log_col_sum(bar, pi));
      tilde_new.v[pi] -= (col_sum - c[pi]) / (8.0 * n * eta * theta);
    }

    DualPotentials hat{bar.u + 2.0 * n * theta * (tilde_new.u - state.tilde.u),
                       bar.v + 2.0 * n * theta * (tilde_new.v - state.tilde.v)};
    kernel.log_both_sums(hat, lrs_hat, lcs_hat);
    const double f_hat = kernel.dual_value(hat, r, c, lrs_hat);

    const bool hat_wins = f_hat < f_check;
    DualPotentials next = hat_wins ? hat : state.check;
    if (hat_wins) {
      lrs = lrs_hat;
      lcs = lcs_hat;
    }
    const double f_winner = hat_wins ? f_hat : f_check;
    if (cfg.assert_bounds && f_winner > f_check + 1e-10) ++report.bound_violations;

    // Greedy exact coordinate step on the winner.
    for (int i = 0; i < n; ++i) rho_rows[i] = rho_log(r[i], lrs[i]);
    for (int j = 0; j < n; ++j) rho_cols[j] = rho_log(c[j], lcs[j]);
    const GreedyPick pick = greedy_select(rho_rows, rho_cols);

    if (pick.row) {
      const int i = pick.index;
      // fresh O(n) sum for the update; see the greedy solver for why
      const double delta = log_r[i] - kernel.log_row_sum(next, i);
      const double u_old = next.u[i];
      next.u[i] += delta;
      for (int j = 0; j < n; ++j) {
        const double term_old = u_old + next.v[j] + kernel.log_kernel()(i, j);
        const double updated = log_replace_term(lcs[j], term_old, term_old + delta);
        lcs[j] = std::isnan(updated) ? kernel.log_col_sum(next, j) : updated;
      }
      lrs[i] = log_r[i];
    } else {
      const int j = pick.index;
      const double delta = log_c[j] - kernel.log_col_sum(next, j);
      const double v_old = next.v[j];
      next.v[j] += delta;
      for (int i = 0; i < n; ++i) {
        const double term_old = next.u[i] + v_old + kernel.log_kernel()(i, j);
        const double updated = log_replace_term(lrs[i], term_old, term_old + delta);
        lrs[i] = std::isnan(updated) ? kernel.log_row_sum(next, i) : updated;
      }
      lcs[j] = log_c[j];
    }

    const double f_next = compensated_sum(Vector(lrs.array().exp())) -
                          next.u.dot(r.weights()) - next.v.dot(c.weights());
    if (cfg.assert_bounds && f_next > f_winner + 1e-10) ++report.bound_violations;

    state.check = std::move(next);
    state.tilde = std::move(tilde_new);
    f_check = f_next;
    fresh_sums = false;
    advance_theta(state, cfg.assert_bounds, report);
  }

  return KhornResult{state.check, kernel.plan(state.check), std::move(report)};
}

}  // namespace otk
