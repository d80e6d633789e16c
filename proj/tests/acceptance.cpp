// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <otkhorn/accel.hpp>
#include <otkhorn/apd.hpp>
#include <otkhorn/classic.hpp>
#include <otkhorn/data.hpp>
#include <otkhorn/driver.hpp>
#include <otkhorn/kernel.hpp>
#include <otkhorn/oracle.hpp>
#include <otkhorn/protocol.hpp>
#include <otkhorn/rng.hpp>
#include <otkhorn/rounding.hpp>
#include <otkhorn/summation.hpp>

using namespace otk;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

Measure random_simplex(CounterRng& rng, int n) {
  Vector w(n);
  for (int i = 0; i < n; ++i) w[i] = rng.uniform01() + 1e-3;
  w /= compensated_sum(w);
  return Measure(w);
}

CostMatrix random_cost_unit_sup(CounterRng& rng, int n) {
  Matrix c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = rng.uniform01();
  c /= c.maxCoeff();
  return CostMatrix(std::move(c));
}

const Method kAllMethods[] = {Method::kSinkhorn, Method::kGreenkhorn,
                              Method::kApdamd,   Method::kApdagd,
                              Method::kRandkhorn, Method::kGandkhorn};

long g_c1_violations = 0;  // accumulated across criterion-1 runs

// Criterion 1: 200 random instances (n in {2,3,4}, ||C||_inf = 1, random
// simplex marginals), all six methods at eps in {0.5, 0.1}; every solve must
// land within eps of the LP oracle with exact marginals, inside 2 minutes.
void criterion1() {
  const auto t0 = Clock::now();
  CounterRng rng(20240601);
  int checked = 0, good = 0;
  double worst_gap = -1e300, worst_marg = 0.0;

  for (int inst = 0; inst < 200; ++inst) {
    const int n = 2 + inst % 3;
    const CostMatrix cost = random_cost_unit_sup(rng, n);
    const Measure r = random_simplex(rng, n);
    const Measure c = random_simplex(rng, n);
    const double optimum = exact_ot_lp(cost, r, c).cost;

    for (Method m : kAllMethods) {
      for (double eps : {0.5, 0.1}) {
        ApproxRequest req;
        req.method = m;
        req.eps = eps;
        req.seed = 1000u * inst + 7u;
        req.assert_bounds = true;
        const DriverResult res = approx_ot(req, cost, r, c);
        g_c1_violations += res.report.bound_violations;
        const double gap = res.record.cost - optimum - eps;
        const double marg = marginal_error(res.plan, r, c);
        worst_gap = std::max(worst_gap, gap);
        worst_marg = std::max(worst_marg, marg);
        ++checked;
        if (gap <= 1e-9 && marg <= 1e-12) ++good;
      }
    }
  }

  const double secs =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count() /
      1000.0;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "oracle equivalence %d/%d solves within eps (worst gap %.2e, worst "
                "marginal %.2e) in %.1f s",
                good, checked, worst_gap, worst_marg, secs);
  report(1, good == checked && secs < 120.0, buf);
}

// Criterion 2: zero theorem-backed assert violations across the criterion-1
// runs plus one 20x20 synthetic pair run with every method.
void criterion2() {
  long violations = g_c1_violations;

  const Measure r = gen_synthetic_image(11, 20).to_measure();
  const Measure c = gen_synthetic_image(12, 20).to_measure();
  const CostMatrix cost = l1_ground_cost(20);
  const double eta = 10.0;

  for (Method m : kAllMethods) {
    SolverConfig cfg;
    cfg.eta = eta;
    cfg.eps_prime = 1e-3;
    cfg.seed = 99;
    cfg.assert_bounds = true;
    switch (m) {
      case Method::kSinkhorn:
        cfg.max_iter = 500;
        violations += sinkhorn(cost, eta, r, c, cfg).report.bound_violations;
        break;
      case Method::kGreenkhorn:
        cfg.max_iter = 200000;
        violations += greenkhorn(cost, eta, r, c, cfg).report.bound_violations;
        break;
      case Method::kRandkhorn:
        cfg.max_iter = 400;
        violations += randkhorn(cost, eta, r, c, cfg).report.bound_violations;
        break;
      case Method::kGandkhorn:
        cfg.max_iter = 4000;
        violations += gandkhorn(cost, eta, r, c, cfg).report.bound_violations;
        break;
      case Method::kApdamd: {
        cfg.max_iter = 300;
        const DualProblem problem = make_ot_dual_problem(cost, eta, r, c);
        const MirrorMap phi = MirrorMap::scaled_euclidean(cost.size());
        const double radius = dual_radius_bound(cost, eta, r, c);
        const ApdBoundChecks checks{
            eta * (radius + 0.5),
            1.0 + 4.0 * std::sqrt(2.0) * 2.0 *
                std::sqrt(phi.delta * (radius + 0.5) / cfg.eps_prime)};
        violations += apdamd(problem, phi, cfg.eps_prime, cfg, checks)
                          .report.bound_violations;
        break;
      }
      case Method::kApdagd: {
        cfg.max_iter = 300;
        const DualProblem problem = make_ot_dual_problem(cost, eta, r, c);
        violations += apdagd(problem, cfg.eps_prime, cfg).report.bound_violations;
        break;
      }
    }
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "theorem-backed runtime asserts: %ld violations across criterion-1 "
                "runs and one 20x20 pair",
                violations);
  report(2, violations == 0, buf);
}

// Criterion 3: constant-cost dual fixture at n in {4, 16}.
void criterion3() {
  bool pass = true;
  std::string detail = "constant-cost dual fixture:";
  const double eps = 0.5;

  for (const int n : {4, 16}) {
    const CostMatrix ones(Matrix::Ones(n, n));
    const Measure u = Measure(Vector::Constant(n, 1.0 / n));
    const double eta = eps / (4.0 * std::log(static_cast<double>(n)));

    const DualProblem problem = make_ot_dual_problem(ones, eta, u, u);
    SolverConfig cfg;
    cfg.max_iter = 5000000;
    const ApdSolution sol =
        apdamd(problem, MirrorMap::scaled_euclidean(n), 1e-8, cfg);

    const double shift = ot_dual_shift(ones, eta, sol.lambda);
    const Vector alpha = (-sol.lambda.head(n)).array() + shift;
    const Vector beta = (-sol.lambda.tail(n)).array() + shift;
    const double target =
        1.0 + eps / (4.0 * std::log(static_cast<double>(n))) - eps / 2.0;
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        worst = std::max(worst, std::abs(alpha[i] + beta[j] - target));

    Vector stacked(2 * n);
    stacked << alpha, beta;
    const double norm_floor = std::sqrt(n / 2.0) * target - 1e-6;
    const bool ok = sol.report.termination == Termination::kConverged &&
                    worst <= 1e-4 && stacked.norm() >= norm_floor;
    pass = pass && ok;
    char buf[128];
    std::snprintf(buf, sizeof(buf), " n=%d worst |a_i+b_j - %.6f| = %.2e norm %.4f>=%.4f;",
                  n, target, worst, stacked.norm(), norm_floor);
    detail += buf;
  }
  report(3, pass, detail);
}

// Criterion 4: ten seeded 20x20 synthetic pairs at eta = 10 under equal
// update budgets; the final-checkpoint median competitive ratio
// log(d_sinkhorn / d_greenkhorn) must be positive, inside 5 minutes.
void criterion4() {
  const auto t0 = Clock::now();
  BenchSpec spec;
  spec.experiment = Experiment::kSyntheticPairs;
  spec.methods = {Method::kSinkhorn, Method::kGreenkhorn};
  spec.pairs = 10;
  spec.side = 20;
  spec.etas = {10.0};
  // Six sinkhorn-equivalents: past that both methods sit at the double
  // precision floor (~1e-15) and the ratio would compare rounding noise.
  spec.max_updates = 12 * 400;
  spec.seed = 424242;
  spec.jobs = 2;

  const BenchResult result = run_bench(spec);
  const double median = result.ratio_summary.back().median;
  const double secs =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count() /
      1000.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "final-checkpoint median log(d_sinkhorn/d_greenkhorn) = %.3f (> 0) "
                "in %.1f s",
                median, secs);
  report(4, median > 0.0 && secs < 300.0, buf);
}

// Criterion 5: eps'-scaling separation between Sinkhorn and Randkhorn on a
// fixed 10x10 synthetic instance, median slopes over 20 seeds. Both methods
// are driven by exact scaling steps in this regime and realize the same
// eps'-exponent, so the 0.3 gap is not reached at desk scale; the check is
// reported as measured.
void criterion5() {
  BenchSpec spec;
  spec.experiment = Experiment::kEpsSweep;
  spec.side = 10;
  spec.eps_grid = {1e-1, 3e-2, 1e-2, 3e-3};
  spec.sweep_seeds = 20;
  spec.sweep_eta = 0.05;
  spec.seed = 31337;

  const BenchResult result = run_bench(spec);
  const double sink = result.sweep_median_slope.at(Method::kSinkhorn);
  const double rand = result.sweep_median_slope.at(Method::kRandkhorn);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "log-iterations slope: sinkhorn %.3f vs randkhorn %.3f (gap %.3f >= 0.3)",
                sink, rand, sink - rand);
  report(5, sink - rand >= 0.3, buf);
}

// Criterion 6: every solver survives eta = eps/(4 log n) at eps = 1e-2 on the
// 20x20 synthetic cost without NaN.
void criterion6() {
  const int side = 20;
  const int n = side * side;
  const CostMatrix cost = l1_ground_cost(side);
  const Measure r = gen_synthetic_image(21, side).to_measure();
  const Measure c = gen_synthetic_image(22, side).to_measure();
  const double eps = 1e-2;
  const double eta = eps / (4.0 * std::log(static_cast<double>(n)));

  bool pass = true;
  std::string bad;
  for (Method m : kAllMethods) {
    SolverConfig cfg;
    cfg.eta = eta;
    cfg.eps_prime = eps / (8.0 * cost.max_abs()) / 2.0;
    cfg.seed = 5;
    SolveReport report_out;
    switch (m) {
      case Method::kSinkhorn:
        cfg.max_iter = 30;
        report_out = sinkhorn(cost, eta, r, c, cfg).report;
        break;
      case Method::kGreenkhorn:
        cfg.max_iter = 2000;
        report_out = greenkhorn(cost, eta, r, c, cfg).report;
        break;
      case Method::kRandkhorn:
        cfg.max_iter = 30;
        report_out = randkhorn(cost, eta, r, c, cfg).report;
        break;
      case Method::kGandkhorn:
        cfg.max_iter = 100;
        report_out = gandkhorn(cost, eta, r, c, cfg).report;
        break;
      case Method::kApdamd: {
        cfg.max_iter = 30;
        const DualProblem problem = make_ot_dual_problem(cost, eta, r, c);
        report_out =
            apdamd(problem, MirrorMap::scaled_euclidean(n), cfg.eps_prime, cfg).report;
        break;
      }
      case Method::kApdagd: {
        cfg.max_iter = 30;
        const DualProblem problem = make_ot_dual_problem(cost, eta, r, c);
        report_out = apdagd(problem, cfg.eps_prime, cfg).report;
        break;
      }
    }
    bool ok = report_out.termination != Termination::kNumericalFailure;
    for (const auto& row : report_out.trace) {
      if (std::isnan(row.error) || std::isnan(row.dual_objective)) ok = false;
    }
    if (!ok) {
      pass = false;
      bad += " " + to_string(m);
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "log-domain robustness at C/eta ~ %.2e: %s%s", cost.max_abs() / eta,
                pass ? "all six methods NaN-free" : "failures:", bad.c_str());
  report(6, pass, buf);
}

// Criterion 7: dual gradient vs central differences and the
// change-of-variables identity between the two dual forms.
void criterion7() {
  CounterRng rng(777);
  bool grad_ok = true;
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 3;
    const CostMatrix cost = random_cost_unit_sup(rng, n);
    const Measure r = random_simplex(rng, n);
    const Measure c = random_simplex(rng, n);
    const double eta = 0.3 + rng.uniform01();
    DualPotentials p;
    p.u = Vector::Zero(n);
    p.v = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      p.u[i] = rng.uniform01() - 0.5;
      p.v[i] = rng.uniform01() - 0.5;
    }
    const auto plan = plan_from_potentials(p, cost, eta);
    const Vector gu = plan.row_sums() - r.weights();
    const Vector gv = plan.col_sums() - c.weights();
    const double h = 1e-6;
    for (int i = 0; i < n; ++i) {
      DualPotentials up = p, dn = p;
      up.u[i] += h;
      dn.u[i] -= h;
      const double fd =
          (dual_f(up, cost, eta, r, c) - dual_f(dn, cost, eta, r, c)) / (2 * h);
      if (std::abs(fd - gu[i]) > 1e-5 * std::max(1.0, std::abs(gu[i]))) grad_ok = false;
      DualPotentials vp = p, vn = p;
      vp.v[i] += h;
      vn.v[i] -= h;
      const double fdv =
          (dual_f(vp, cost, eta, r, c) - dual_f(vn, cost, eta, r, c)) / (2 * h);
      if (std::abs(fdv - gv[i]) > 1e-5 * std::max(1.0, std::abs(gv[i]))) grad_ok = false;
    }
  }

  // phi(alpha, beta) = eta (f(u,v) - 1) - 1 under alpha = eta(u + 1/2),
  // beta = eta(v + 1/2); the -1 is the constant carried by the scaled dual.
  bool ident_ok = true;
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 3;
    const CostMatrix cost = random_cost_unit_sup(rng, n);
    const Measure r = random_simplex(rng, n);
    const Measure c = random_simplex(rng, n);
    const double eta = 0.3 + rng.uniform01();
    DualPotentials p = DualPotentials::zeros(n);
    for (int i = 0; i < n; ++i) {
      p.u[i] = 1.5 * (rng.uniform01() - 0.5);
      p.v[i] = 1.5 * (rng.uniform01() - 0.5);
    }
    const double f = dual_f(p, cost, eta, r, c);
    const double phi =
        dual_phi(p.scaled_alpha(eta), p.scaled_beta(eta), cost, eta, r, c);
    const double expected = eta * (f - 1.0) - 1.0;
    const double rel = std::abs(phi - expected) / std::max(1.0, std::abs(expected));
    worst = std::max(worst, rel);
    if (rel > 1e-9) ident_ok = false;
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "gradient FD checks %s; change-of-variables identity worst rel err "
                "%.2e (<= 1e-9)",
                grad_ok ? "pass" : "fail", worst);
  report(7, grad_ok && ident_ok, buf);
}

// Criterion 8: rounding properties on 100 random plans including the all-zero
// and already-feasible cases.
void criterion8() {
  CounterRng rng(888);
  bool pass = true;
  double worst_marg = 0.0, worst_move = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_below(3));
    const Measure r = random_simplex(rng, n);
    const Measure c = random_simplex(rng, n);
    Matrix x(n, n);
    if (rep == 0) {
      x.setZero();
    } else if (rep == 1) {
      x = r.weights() * c.weights().transpose();
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) x(i, j) = 1.5 * rng.uniform01() / (n * n);
    }
    const TransportPlan input{x, false};
    const double err = marginal_error(input, r, c);
    const TransportPlan rounded = round_to_feasible(input, r, c);
    const double marg = marginal_error(rounded, r, c);
    const double moved = l1_diff(rounded.entries, x);
    worst_marg = std::max(worst_marg, marg);
    worst_move = std::max(worst_move, moved - 2.0 * err);
    if (marg > 1e-12 || moved > 2.0 * err + 1e-12 || !rounded.feasible) pass = false;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "rounding: worst marginal %.2e (<= 1e-12), worst excess movement %.2e "
                "(<= 0)",
                worst_marg, worst_move);
  report(8, pass, buf);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  if (failures == 0) {
    std::printf("acceptance: all 8 criteria pass\n");
  } else {
    std::printf("acceptance: %d criterion(s) failing\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
