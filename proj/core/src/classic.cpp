#include "otkhorn/classic.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "otkhorn/summation.hpp"

namespace otk {

namespace {

using Clock = std::chrono::steady_clock;

long long ns_since(const Clock::time_point& t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0)
      .count();
}

void require_positive_marginals(const Measure& r, const Measure& c) {
  if (!(r.min_weight() > 0) || !(c.min_weight() > 0)) {
    throw std::invalid_argument("scaling solvers require strictly positive marginals");
  }
}

// log(1^T B 1) from the row log-sums.
double log_mass(const Vector& log_rows) { return log_sum_exp(log_rows); }

}  // namespace

GreedyPick greedy_select(const Vector& rho_rows, const Vector& rho_cols) {
  GreedyPick pick;
  int best_row = 0;
  for (int i = 1; i < rho_rows.size(); ++i) {
    if (rho_rows[i] > rho_rows[best_row]) best_row = i;
  }
  int best_col = 0;
  for (int j = 1; j < rho_cols.size(); ++j) {
    if (rho_cols[j] > rho_cols[best_col]) best_col = j;
  }
  if (rho_rows[best_row] >= rho_cols[best_col]) {
    pick = GreedyPick{true, best_row, rho_rows[best_row]};
  } else {
    pick = GreedyPick{false, best_col, rho_cols[best_col]};
  }
  return pick;
}

void sinkhorn_halfstep(const DualKernel& kernel, const Measure& target, Half half,
                       DualPotentials& p) {
  Vector log_sums;
  if (half == Half::kRow) {
    kernel.log_row_sums(p, log_sums);
    p.u += (target.weights().array().log() - log_sums.array()).matrix();
  } else {
    kernel.log_col_sums(p, log_sums);
    p.v += (target.weights().array().log() - log_sums.array()).matrix();
  }
}

ClassicState apply_normalization_trick(const ClassicState& s) {
  const double mass = compensated_sum(s.row_sums);
  if (!(mass > 0) || !std::isfinite(mass)) {
    throw std::runtime_error("normalization trick: total mass is nonpositive or nonfinite");
  }
  const double shift = 0.5 * std::log(mass);
  ClassicState out = s;
  out.potentials.u.array() -= shift;
  out.potentials.v.array() -= shift;
  out.row_sums /= mass;
  out.col_sums /= mass;
  return out;
}

KhornResult sinkhorn(const CostMatrix& cost, double eta, const Measure& r,
                     const Measure& c, const SolverConfig& cfg) {
  cfg.validate();
  require_positive_marginals(r, c);
  DualKernel kernel(cost, eta);
  const int n = kernel.size();
  if (r.size() != n || c.size() != n) {
    throw std::invalid_argument("sinkhorn: marginal dimensions do not match cost");
  }

  const auto t0 = Clock::now();
  DualPotentials p = DualPotentials::zeros(n);
  SolveReport report;
  report.seed = cfg.seed;

  Vector log_rows(n), log_cols(n), rows(n), cols(n);
  double prev_f = std::numeric_limits<double>::infinity();
  const Vector log_r = r.weights().array().log();
  const Vector log_c = c.weights().array().log();

  for (long t = 0;; ++t) {
    kernel.log_both_sums(p, log_rows, log_cols);
    rows = log_rows.array().exp();
    cols = log_cols.array().exp();
    const double err = marginal_error(rows, cols, r, c);
    const double f =
        compensated_sum(rows) - p.u.dot(r.weights()) - p.v.dot(c.weights());
    report.trace.push_back(TraceRow{t, err, f, ns_since(t0)});
    report.iterations = t;

    if (!std::isfinite(err) || !std::isfinite(f)) {
      report.termination = Termination::kNumericalFailure;
      break;
    }
    if (cfg.assert_bounds && t > 0 && f > prev_f + 1e-10) {
      ++report.bound_violations;
    }
    prev_f = f;

    if (err <= cfg.eps_prime) {
      report.termination = Termination::kConverged;
      break;
    }
    if (t >= cfg.max_iter) {
      report.termination = Termination::kMaxIterations;
      break;
    }

    // Row half-step, then column half-step on the refreshed sums.
    p.u += (log_r.array() - log_rows.array()).matrix();
    kernel.log_col_sums(p, log_cols);
    p.v += (log_c.array() - log_cols.array()).matrix();

    if (cfg.normalization_trick) {
      kernel.log_row_sums(p, log_rows);
      const double shift = 0.5 * log_mass(log_rows);
      p.u.array() -= shift;
      p.v.array() -= shift;
    }
  }

  return KhornResult{p, kernel.plan(p), std::move(report)};
}

KhornResult greenkhorn(const CostMatrix& cost, double eta, const Measure& r,
                       const Measure& c, const SolverConfig& cfg) {
  cfg.validate();
  require_positive_marginals(r, c);
  DualKernel kernel(cost, eta);
  const int n = kernel.size();
  if (r.size() != n || c.size() != n) {
    throw std::invalid_argument("greenkhorn: marginal dimensions do not match cost");
  }

  const auto t0 = Clock::now();
  DualPotentials p = DualPotentials::zeros(n);
  SolveReport report;
  report.seed = cfg.seed;

  Vector log_rows(n), log_cols(n);
  kernel.log_both_sums(p, log_rows, log_cols);
  const Vector log_r = r.weights().array().log();
  const Vector log_c = c.weights().array().log();

  // Theorem-backed iteration ceiling, checked while unconverged.
  double iteration_ceiling = std::numeric_limits<double>::infinity();
  if (cfg.assert_bounds) {
    iteration_ceiling =
        2.0 + 112.0 * n * dual_radius_bound(cost, eta, r, c) / cfg.eps_prime;
  }
  bool ceiling_flagged = false;

  Vector rho_rows(n), rho_cols(n), rows(n), cols(n);
  double prev_f = std::numeric_limits<double>::infinity();
  bool fresh_sums = true;

  for (long t = 0;; ++t) {
    rows = log_rows.array().exp();
    cols = log_cols.array().exp();
    double err = marginal_error(rows, cols, r, c);
    // Convergence is only declared against freshly recomputed sums; the
    // incremental caches drift below ~1e-10 and could both fake and miss it.
    if (err <= cfg.eps_prime && !fresh_sums) {
      kernel.log_both_sums(p, log_rows, log_cols);
      rows = log_rows.array().exp();
      cols = log_cols.array().exp();
      err = marginal_error(rows, cols, r, c);
      fresh_sums = true;
    }
    const double mass = compensated_sum(rows);
    const double f = mass - p.u.dot(r.weights()) - p.v.dot(c.weights());
    report.trace.push_back(TraceRow{t, err, f, ns_since(t0)});
    report.iterations = t;

    if (!std::isfinite(err) || !std::isfinite(f)) {
      report.termination = Termination::kNumericalFailure;
      break;
    }
    if (cfg.assert_bounds && t > 0 && f > prev_f + 1e-10) {
      ++report.bound_violations;
    }
    prev_f = f;

    if (err <= cfg.eps_prime) {
      report.termination = Termination::kConverged;
      break;
    }
    if (t >= cfg.max_iter) {
      report.termination = Termination::kMaxIterations;
      break;
    }
    if (cfg.assert_bounds && !ceiling_flagged &&
        static_cast<double>(t) > iteration_ceiling) {
      ++report.bound_violations;
      ceiling_flagged = true;
    }

    for (int i = 0; i < n; ++i) rho_rows[i] = rho_log(r[i], log_rows[i]);
    for (int j = 0; j < n; ++j) rho_cols[j] = rho_log(c[j], log_cols[j]);
    const GreedyPick pick = greedy_select(rho_rows, rho_cols);

    // The exact coordinate update decreases f by exactly rho of the chosen
    // coordinate; that decrease must dominate E_t^2 / (28 n). The bound
    // presumes a unit-mass iterate, which every exact update restores; the
    // raw kernel at t = 0 carries arbitrary mass and is exempt.
    if (cfg.assert_bounds && std::abs(mass - 1.0) <= 1e-6 &&
        pick.value + 1e-9 * std::max(1.0, std::abs(f)) < err * err / (28.0 * n)) {
      ++report.bound_violations;
    }

    if (pick.row) {
      const int i = pick.index;
      // The update delta comes from a fresh O(n) sum: reusing the cached
      // value feeds its rounding error back into u and the drift compounds
      // geometrically at small eta.
      const double delta = log_r[i] - kernel.log_row_sum(p, i);
      const double u_old = p.u[i];
      p.u[i] += delta;
      for (int j = 0; j < n; ++j) {
        const double term_old = u_old + p.v[j] + kernel.log_kernel()(i, j);
        const double updated =
            log_replace_term(log_cols[j], term_old, term_old + delta);
        log_cols[j] = std::isnan(updated) ? kernel.log_col_sum(p, j) : updated;
      }
      log_rows[i] = log_r[i];
    } else {
      const int j = pick.index;
      const double delta = log_c[j] - kernel.log_col_sum(p, j);
      const double v_old = p.v[j];
      p.v[j] += delta;
      for (int i = 0; i < n; ++i) {
        const double term_old = p.u[i] + v_old + kernel.log_kernel()(i, j);
        const double updated =
            log_replace_term(log_rows[i], term_old, term_old + delta);
        log_rows[i] = std::isnan(updated) ? kernel.log_row_sum(p, i) : updated;
      }
      log_cols[j] = log_c[j];
    }
    fresh_sums = false;

    if (cfg.normalization_trick) {
      const double shift = log_mass(log_rows);
      p.u.array() -= 0.5 * shift;
      p.v.array() -= 0.5 * shift;
      log_rows.array() -= shift;
      log_cols.array() -= shift;
    }

    // Periodic revalidation of the incremental caches.
    if ((t + 1) % 1000 == 0) {
      Vector fresh_rows(n), fresh_cols(n);
      kernel.log_both_sums(p, fresh_rows, fresh_cols);
      if (cfg.assert_bounds) {
        const double drift =
            (fresh_rows - log_rows).cwiseAbs().maxCoeff() +
            (fresh_cols - log_cols).cwiseAbs().maxCoeff();
        if (drift > 1e-9) ++report.bound_violations;
      }
      log_rows.swap(fresh_rows);
      log_cols.swap(fresh_cols);
      fresh_sums = true;
    }
  }

  return KhornResult{p, kernel.plan(p), std::move(report)};
}

}  // namespace otk
