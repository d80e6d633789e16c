#include "otkhorn/apd.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "otkhorn/driver.hpp"
#include "otkhorn/kernel.hpp"
#include "otkhorn/rounding.hpp"
#include "otkhorn/summation.hpp"

namespace otk {

namespace {

using Clock = std::chrono::steady_clock;

long long ns_since(const Clock::time_point& t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0)
      .count();
}

enum class GuardNorm { kInf, kTwo };

double guard_norm_sq(const Vector& d, GuardNorm norm) {
  if (norm == GuardNorm::kInf) {
    const double m = d.cwiseAbs().maxCoeff();
    return m * m;
  }
  return d.squaredNorm();
}

ApdSolution apd_solve(const DualProblem& problem, const MirrorMap& phi,
                      double eps_prime, const SolverConfig& cfg, GuardNorm norm,
                      const std::optional<ApdBoundChecks>& checks) {
  if (!(eps_prime > 0)) throw std::invalid_argument("apd solver: eps_prime must be > 0");
  if (cfg.max_iter < 1) throw std::invalid_argument("apd solver: max_iter must be >= 1");
  const int d = problem.dual_dim;
  const double delta = phi.delta;
  const double a_norm = problem.a_norm_1to1;
  const double strong = problem.primal_strong_convexity;

  const auto t0 = Clock::now();
  ApdSolution sol;
  sol.report.seed = cfg.seed;

  Vector lambda = Vector::Zero(d);
  Vector z = lambda;
  Vector x_avg;  // stays the zero primal until the first accepted step
  double alpha_bar = 0.0;
  double lipschitz = 1.0;  // L^0 = 1
  long oracle_calls = 0;
  bool ceiling_flagged = false;

  double residual = l1_norm(problem.b);
  double dual_value = problem.objective(lambda);
  sol.report.trace.push_back(TraceRow{0, residual, dual_value, ns_since(t0)});

  for (long t = 0;; ++t) {
    sol.report.iterations = t;
    if (!std::isfinite(residual) || !std::isfinite(dual_value)) {
      sol.report.termination = Termination::kNumericalFailure;
      break;
    }
    if (residual <= eps_prime) {
      sol.report.termination = Termination::kConverged;
      break;
    }
    if (t >= cfg.max_iter) {
      sol.report.termination = Termination::kMaxIterations;
      break;
    }
    if (cfg.assert_bounds && checks && !ceiling_flagged &&
        static_cast<double>(t) > checks->iteration_ceiling) {
      ++sol.report.bound_violations;
      ceiling_flagged = true;
    }

    double m_trial = lipschitz / 2.0;
    double alpha = 0.0, alpha_bar_new = 0.0;
    Vector mu, z_new, lambda_new, grad_mu, x_mu;
    double value_mu = 0.0, value_lambda = 0.0;
    bool failed = false;

    for (;;) {
      m_trial *= 2.0;
      if (!(m_trial < 1e300)) {
        failed = true;
        break;
      }
      alpha = (1.0 + std::sqrt(1.0 + 4.0 * delta * m_trial * alpha_bar)) /
              (2.0 * delta * m_trial);
      alpha_bar_new = alpha_bar + alpha;
      mu = (alpha * z + alpha_bar * lambda) / alpha_bar_new;
      auto [vm, xm] = problem.value_and_primal(mu);
      value_mu = vm;
      x_mu = std::move(xm);
      grad_mu = problem.b - problem.apply_A(x_mu);
      z_new = phi.argmin(grad_mu, z, alpha);
      lambda_new = (alpha * z_new + alpha_bar * lambda) / alpha_bar_new;
      value_lambda = problem.objective(lambda_new);
      oracle_calls += 2;

      const Vector diff = lambda_new - mu;
      const double lhs = value_lambda - value_mu - grad_mu.dot(diff);
      // The slack covers cancellation noise in lhs once the dual values
      // agree to machine precision; without it the guard rejects forever
      // and M blows up while the primal average still needs iterations.
      const double noise =
          1e-14 * std::max({1.0, std::abs(value_mu), std::abs(value_lambda)});
      if (lhs <= (m_trial / 2.0) * guard_norm_sq(diff, norm) + noise) break;
    }
    if (failed) {
      sol.report.termination = Termination::kNumericalFailure;
      break;
    }

    if (x_avg.size() == 0) x_avg = Vector::Zero(x_mu.size());
    x_avg = (alpha * x_mu + alpha_bar * x_avg) / alpha_bar_new;

    if (cfg.assert_bounds) {
      // Step-size identity: delta M (alpha^{t+1})^2 = alpha_bar^{t+1}.
      const double lhs = delta * m_trial * alpha * alpha;
      if (std::abs(lhs - alpha_bar_new) > 1e-10 * std::max(1.0, alpha_bar_new)) {
        ++sol.report.bound_violations;
      }
      // Accepted trial never exceeds twice the dual smoothness constant.
      if (strong > 0 &&
          m_trial > 2.0 * a_norm * a_norm / strong * (1.0 + 1e-12) &&
          m_trial > lipschitz) {
        ++sol.report.bound_violations;
      }
    }

    lambda = std::move(lambda_new);
    z = std::move(z_new);
    alpha_bar = alpha_bar_new;
    lipschitz = m_trial / 2.0;

    residual = l1_diff(problem.apply_A(x_avg), problem.b);
    dual_value = value_lambda;
    const long done = t + 1;
    sol.report.trace.push_back(TraceRow{done, residual, dual_value, ns_since(t0)});

    if (cfg.assert_bounds) {
      // Accumulator growth floor.
      if (strong > 0 && a_norm > 0) {
        // The growth floor's derivation caps M at 2||A||^2/strong; when the
        // L^0 = 1 start already exceeds that cap (large strong convexity)
        // the first accepted trial is L^0 and the floor relaxes accordingly.
        const double m_max = std::max(2.0 * a_norm * a_norm / strong, 1.0);
        const double floor = static_cast<double>(done + 1) *
                             static_cast<double>(done + 1) /
                             (4.0 * delta * m_max);
        if (alpha_bar < floor * (1.0 - 1e-12)) ++sol.report.bound_violations;
      }
      // Gradient-oracle audit.
      if (strong > 0 && a_norm > 0) {
        const double audit =
            4.0 * static_cast<double>(done) + 4.0 +
            2.0 * std::log(a_norm * a_norm / (2.0 * strong)) / std::log(2.0);
        if (static_cast<double>(oracle_calls) > audit + 0.5) {
          ++sol.report.bound_violations;
        }
      }
      // Residual ceiling from the dual radius.
      if (checks) {
        const double cap = 4.0 * checks->dual_radius / alpha_bar;
        if (residual > cap * (1.0 + 1e-9) + 1e-15) ++sol.report.bound_violations;
      }
    }
  }

  if (x_avg.size() == 0) x_avg = Vector::Zero(problem.primal_map(lambda).size());
  sol.primal = std::move(x_avg);
  sol.lambda = std::move(lambda);
  return sol;
}

void check_ot_dims(const CostMatrix& cost, const Measure& r, const Measure& c) {
  if (r.size() != cost.size() || c.size() != cost.size()) {
    throw std::invalid_argument("OT dual problem: dimension mismatch");
  }
}

}  // namespace

MirrorMap MirrorMap::scaled_euclidean(double delta) {
  if (!(delta > 0)) throw std::invalid_argument("MirrorMap: delta must be > 0");
  MirrorMap map;
  map.delta = delta;
  map.value = [delta](const Vector& z) { return z.squaredNorm() / (2.0 * delta); };
  map.gradient = [delta](const Vector& z) { return Vector(z / delta); };
  map.bregman = [delta](const Vector& z, const Vector& zp) {
    return (z - zp).squaredNorm() / (2.0 * delta);
  };
  map.argmin = [delta](const Vector& g, const Vector& z_prev, double step) {
    return Vector(z_prev - delta * step * g);
  };
  return map;
}

Matrix x_of_lambda_ot(const Vector& alpha, const Vector& beta,
                      const CostMatrix& cost, double eta) {
  if (!(eta > 0)) throw std::invalid_argument("x_of_lambda_ot: eta must be > 0");
  const int n = cost.size();
  if (alpha.size() != n || beta.size() != n) {
    throw std::invalid_argument("x_of_lambda_ot: dimension mismatch");
  }
  Matrix log_x = (-cost.entries() / eta).array() - 1.0;
  log_x.colwise() += (alpha / eta);
  log_x.rowwise() += (beta / eta).transpose();
  Matrix x(log_x.rows(), log_x.cols());
  const double* in = log_x.data();
  double* out = x.data();
  for (std::ptrdiff_t k = 0; k < log_x.size(); ++k) out[k] = std::exp(in[k]);
  return x;
}

DualProblem make_ot_dual_problem(const CostMatrix& cost, double eta,
                                 const Measure& r, const Measure& c) {
  check_ot_dims(cost, r, c);
  if (!(eta > 0)) throw std::invalid_argument("make_ot_dual_problem: eta must be > 0");
  const int n = cost.size();

  DualProblem problem;
  problem.dual_dim = 2 * n;
  problem.a_norm_1to1 = 2.0;
  problem.primal_strong_convexity = eta;
  problem.b.resize(2 * n);
  problem.b << r.weights(), c.weights();

  // Simplex-constrained dual: phi(lambda) = <lambda, b> + eta LSE(s) with
  // s_ij = (-C_ij - lambda_i - lambda_{n+j})/eta, and x(lambda) the softmax
  // of s. The unit primal mass keeps the entropic objective eta-strongly
  // convex in l1 where the iterates live, so the dual smoothness constant
  // really is ||A||^2/eta and the line-search and accumulator bounds hold.
  // The unconstrained scaling form differs only by the one flat shift
  // direction, fixed at reporting time by the unit-mass anchor.
  auto softmax = [cost, eta, n](const Vector& lambda) {
    Matrix s = (-cost.entries() / eta);
    s.colwise() -= (lambda.head(n) / eta);
    s.rowwise() -= (lambda.tail(n) / eta).transpose();
    const double m = s.maxCoeff();
    Matrix x(n, n);
    double total = 0.0;
    const double* in = s.data();
    double* out = x.data();
    for (std::ptrdiff_t k = 0; k < s.size(); ++k) {
      out[k] = std::exp(in[k] - m);
      total += out[k];
    }
    x /= total;
    const double log_mass = m + std::log(total);
    return std::make_pair(std::move(x), log_mass);
  };

  problem.primal_map = [softmax, n](const Vector& lambda) {
    const auto [x, log_mass] = softmax(lambda);
    return Vector(Eigen::Map<const Vector>(x.data(), n * n));
  };
  problem.apply_A = [n](const Vector& x_vec) {
    Eigen::Map<const Matrix> x(x_vec.data(), n, n);
    Vector out(2 * n);
    out.head(n) = x.rowwise().sum();
    out.tail(n) = x.colwise().sum().transpose();
    return out;
  };
  problem.value_and_primal = [softmax, b = problem.b, eta, n](const Vector& lambda) {
    const auto [x, log_mass] = softmax(lambda);
    const double value = lambda.dot(b) + eta * log_mass;
    return std::make_pair(value, Vector(Eigen::Map<const Vector>(x.data(), n * n)));
  };
  problem.objective = [value_and_primal = problem.value_and_primal](const Vector& lambda) {
    return value_and_primal(lambda).first;
  };
  problem.gradient = [value_and_primal = problem.value_and_primal,
                      apply_A = problem.apply_A, b = problem.b](const Vector& lambda) {
    return Vector(b - apply_A(value_and_primal(lambda).second));
  };
  return problem;
}

// Shift that moves the solver's dual onto the unit-mass normalization of the
// scaling form, where alpha_i + beta_j is pinned at the optimum.
double ot_dual_shift(const CostMatrix& cost, double eta, const Vector& lambda) {
  const int n = cost.size();
  Matrix s = (-cost.entries() / eta);
  s.colwise() -= (lambda.head(n) / eta);
  s.rowwise() -= (lambda.tail(n) / eta).transpose();
  const double m = s.maxCoeff();
  const double log_mass = m + std::log((s.array() - m).exp().sum());
  return 0.5 * eta * (1.0 - log_mass);
}

ApdSolution apdamd(const DualProblem& problem, const MirrorMap& phi,
                   double eps_prime, const SolverConfig& cfg,
                   const std::optional<ApdBoundChecks>& checks) {
  return apd_solve(problem, phi, eps_prime, cfg, GuardNorm::kInf, checks);
}

ApdSolution apdagd(const DualProblem& problem, double eps_prime,
                   const SolverConfig& cfg) {
  return apd_solve(problem, MirrorMap::euclidean(), eps_prime, cfg,
                   GuardNorm::kTwo, std::nullopt);
}

namespace {

OtApproxResult approx_ot_apd(const CostMatrix& cost, const Measure& r,
                             const Measure& c, double eps, const SolverConfig& cfg,
                             bool mirror_variant) {
  const int n = cost.size();
  if (n < 2) throw std::invalid_argument("approx_ot: requires n >= 2");
  if (!(eps > 0)) throw std::invalid_argument("approx_ot: eps must be > 0");
  if (!(cost.max_abs() > 0)) {
    throw std::invalid_argument("approx_ot apd: zero cost matrix; use the driver");
  }

  const double eta = eps / (4.0 * std::log(static_cast<double>(n)));
  const double eps_prime = eps / (8.0 * cost.max_abs());
  if (cost.max_abs() / eta > 1e14) {
    throw ConfigError("approx_ot: eps so small that C/eta exceeds the log-domain "
                      "precision floor (1e14)");
  }

  auto [rt, ct] = mix_marginals(r, c, eps_prime);
  const DualProblem problem = make_ot_dual_problem(cost, eta, rt, ct);
  const double target = eps_prime / 2.0;

  ApdSolution sol;
  if (mirror_variant) {
    const MirrorMap phi = MirrorMap::scaled_euclidean(static_cast<double>(n));
    std::optional<ApdBoundChecks> checks;
    if (cfg.assert_bounds) {
      const double radius = dual_radius_bound(cost, eta, rt, ct);
      checks = ApdBoundChecks{
          eta * (radius + 0.5),
          1.0 + 4.0 * std::sqrt(2.0) * problem.a_norm_1to1 *
              std::sqrt(phi.delta * (radius + 0.5) / target)};
    }
    sol = apdamd(problem, phi, target, cfg, checks);
  } else {
    sol = apdagd(problem, target, cfg);
  }

  Eigen::Map<const Matrix> x_tilde(sol.primal.data(), n, n);
  OtApproxResult out;
  out.plan = round_to_feasible(TransportPlan{x_tilde, false}, r, c);
  out.report = std::move(sol.report);
  const double shift = ot_dual_shift(cost, eta, sol.lambda);
  out.alpha = (-sol.lambda.head(n)).array() + shift;
  out.beta = (-sol.lambda.tail(n)).array() + shift;
  return out;
}

}  // namespace

OtApproxResult approx_ot_apdamd(const CostMatrix& cost, const Measure& r,
                                const Measure& c, double eps,
                                const SolverConfig& cfg) {
  return approx_ot_apd(cost, r, c, eps, cfg, true);
}

OtApproxResult approx_ot_apdagd(const CostMatrix& cost, const Measure& r,
                                const Measure& c, double eps,
                                const SolverConfig& cfg) {
  return approx_ot_apd(cost, r, c, eps, cfg, false);
}

}  // namespace otk
