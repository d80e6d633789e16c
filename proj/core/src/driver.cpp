#include "otkhorn/driver.hpp"

#include <chrono>
#include <cmath>

#include "otkhorn/accel.hpp"
#include "otkhorn/apd.hpp"
#include "otkhorn/classic.hpp"
#include "otkhorn/kernel.hpp"
#include "otkhorn/rounding.hpp"

namespace otk {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kLogDomainFloor = 1e14;  // max tolerated ||C||_inf / eta

std::optional<double> theorem_iteration_bound(Method m, int n, double eta, double radius,
                                              double target) {
  const double nn = static_cast<double>(n);
  switch (m) {
    case Method::kGreenkhorn:
      return 2.0 + 112.0 * nn * radius / target;
    case Method::kApdamd:
      // delta = n for the default mirror map, ||A||_{1->1} = 2.
      return 1.0 + 4.0 * std::sqrt(2.0) * 2.0 * std::sqrt(nn * (radius + 0.5) / target);
    case Method::kRandkhorn:
      return 2.0 + 100.0 * std::cbrt(nn * eta) * std::pow(radius, 2.0 / 3.0) *
                       std::pow(target, -2.0 / 3.0);
    case Method::kGandkhorn:
      return 2.0 + 100.0 * std::pow(nn, 4.0 / 3.0) * std::cbrt(eta) *
                       std::pow(radius, 2.0 / 3.0) * std::pow(target, -2.0 / 3.0);
    case Method::kSinkhorn:
    case Method::kApdagd:
      return std::nullopt;  // no pinned constant-level theorem for these two
  }
  return std::nullopt;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::kSinkhorn: return "sinkhorn";
    case Method::kGreenkhorn: return "greenkhorn";
    case Method::kApdamd: return "apdamd";
    case Method::kApdagd: return "apdagd";
    case Method::kRandkhorn: return "randkhorn";
    case Method::kGandkhorn: return "gandkhorn";
  }
  return "unknown";
}

std::optional<Method> method_from_string(const std::string& name) {
  if (name == "sinkhorn") return Method::kSinkhorn;
  if (name == "greenkhorn") return Method::kGreenkhorn;
  if (name == "apdamd") return Method::kApdamd;
  if (name == "apdagd") return Method::kApdagd;
  if (name == "randkhorn") return Method::kRandkhorn;
  if (name == "gandkhorn") return Method::kGandkhorn;
  return std::nullopt;
}

std::pair<Measure, Measure> mix_marginals(const Measure& r, const Measure& c,
                                          double eps_prime) {
  if (!(eps_prime > 0.0) || !(eps_prime < 8.0)) {
    throw std::domain_error("mix_marginals: eps_prime must lie in (0, 8)");
  }
  const double keep = 1.0 - eps_prime / 8.0;
  const double floor_r = eps_prime / (8.0 * r.size());
  const double floor_c = eps_prime / (8.0 * c.size());
  return {Measure((keep * r.weights()).array() + floor_r),
          Measure((keep * c.weights()).array() + floor_c)};
}

DriverResult approx_ot(const ApproxRequest& req, const CostMatrix& cost,
                       const Measure& r, const Measure& c) {
  const int n = cost.size();
  if (n < 2) throw std::invalid_argument("approx_ot: requires n >= 2");
  if (r.size() != n || c.size() != n) {
    throw std::invalid_argument("approx_ot: dimension mismatch");
  }
  if (!(req.eps > 0)) throw std::invalid_argument("approx_ot: eps must be > 0");

  const auto t0 = Clock::now();
  DriverResult out;
  out.record.method = req.method;
  out.record.n = n;
  out.record.eps = req.eps;
  out.record.seed = req.seed.value_or(0);

  // Zero cost: every feasible plan is optimal; return the independent
  // coupling (the eps' schedule would divide by ||C||_inf).
  if (cost.max_abs() == 0.0) {
    out.plan = TransportPlan{r.weights() * c.weights().transpose(), true};
    out.report.iterations = 0;
    out.report.termination = Termination::kConverged;
    out.report.seed = out.record.seed;
    out.report.trace.push_back(TraceRow{0, 0.0, 0.0, 0});
    out.record.eta = req.eta.value_or(req.eps / (4.0 * std::log(n)));
    out.record.eps_prime = req.eps_prime.value_or(0.0);
    out.record.cost = 0.0;
    if (r.min_weight() > 0 && c.min_weight() > 0) {
      out.record.r_bound = std::log(static_cast<double>(n)) -
                           2.0 * std::log(std::min(r.min_weight(), c.min_weight()));
    }
    out.record.note = "zero cost matrix: returned the independent coupling r c^T";
    out.record.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                             Clock::now() - t0)
                             .count();
    return out;
  }

  const double eta = req.eta.value_or(req.eps / (4.0 * std::log(n)));
  const double eps_prime = req.eps_prime.value_or(req.eps / (8.0 * cost.max_abs()));
  if (cost.max_abs() / eta > kLogDomainFloor) {
    throw ConfigError("approx_ot: eta too small; ||C||_inf/eta exceeds the log-domain "
                      "precision floor of 1e14");
  }
  const double target = eps_prime / 2.0;

  SolverConfig cfg;
  cfg.eta = eta;
  cfg.eps_prime = target;
  cfg.max_iter = req.max_iter.value_or(cfg.max_iter);
  cfg.seed = req.seed.value_or(0);
  cfg.normalization_trick = req.normalization_trick;
  cfg.assert_bounds = req.assert_bounds;

  auto [rt, ct] = mix_marginals(r, c, eps_prime);
  const double radius = dual_radius_bound(cost, eta, rt, ct);

  TransportPlan x_tilde;
  switch (req.method) {
    case Method::kSinkhorn: {
      auto res = sinkhorn(cost, eta, rt, ct, cfg);
      x_tilde = std::move(res.plan);
      out.report = std::move(res.report);
      break;
    }
    case Method::kGreenkhorn: {
      auto res = greenkhorn(cost, eta, rt, ct, cfg);
      x_tilde = std::move(res.plan);
      out.report = std::move(res.report);
      break;
    }
    case Method::kRandkhorn: {
      auto res = randkhorn(cost, eta, rt, ct, cfg);
      x_tilde = std::move(res.plan);
      out.report = std::move(res.report);
      break;
    }
    case Method::kGandkhorn: {
      auto res = gandkhorn(cost, eta, rt, ct, cfg);
      x_tilde = std::move(res.plan);
      out.report = std::move(res.report);
      break;
    }
    case Method::kApdamd:
    case Method::kApdagd: {
      const DualProblem problem = make_ot_dual_problem(cost, eta, rt, ct);
      ApdSolution sol;
      if (req.method == Method::kApdamd) {
        const MirrorMap phi = MirrorMap::scaled_euclidean(static_cast<double>(n));
        std::optional<ApdBoundChecks> checks;
        if (cfg.assert_bounds) {
          checks = ApdBoundChecks{
              eta * (radius + 0.5),
              1.0 + 4.0 * std::sqrt(2.0) * problem.a_norm_1to1 *
                  std::sqrt(phi.delta * (radius + 0.5) / target)};
        }
        sol = apdamd(problem, phi, target, cfg, checks);
      } else {
        sol = apdagd(problem, target, cfg);
      }
      Eigen::Map<const Matrix> x_map(sol.primal.data(), n, n);
      x_tilde = TransportPlan{x_map, false};
      out.report = std::move(sol.report);
      break;
    }
  }

  out.plan = round_to_feasible(x_tilde, r, c);
  out.record.eta = eta;
  out.record.eps_prime = eps_prime;
  out.record.r_bound = radius;
  out.record.bound_iterations =
      theorem_iteration_bound(req.method, n, eta, radius, target);
  out.record.actual_iterations = out.report.iterations;
  out.record.cost = ot_cost(out.plan, cost);
  out.record.termination = out.report.termination;
  out.record.wall_ns =
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
  return out;
}

}  // namespace otk
