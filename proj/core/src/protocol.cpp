#include "otkhorn/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "otkhorn/accel.hpp"
#include "otkhorn/apd.hpp"
#include "otkhorn/classic.hpp"
#include "otkhorn/kernel.hpp"
#include "otkhorn/oracle.hpp"
#include "otkhorn/rng.hpp"
#include "otkhorn/rounding.hpp"

namespace otk {

namespace {

struct DirectRun {
  SolveReport report;
  TransportPlan plan;
};

// Runs one solver directly at a fixed eta (no schedule, no mixing, no
// rounding); this is the unit the pairwise plots compare.
DirectRun direct_solve(Method m, const CostMatrix& cost, double eta, const Measure& r,
                       const Measure& c, const SolverConfig& cfg) {
  switch (m) {
    case Method::kSinkhorn: {
      auto res = sinkhorn(cost, eta, r, c, cfg);
      return DirectRun{std::move(res.report), std::move(res.plan)};
    }
    case Method::kGreenkhorn: {
      auto res = greenkhorn(cost, eta, r, c, cfg);
      return DirectRun{std::move(res.report), std::move(res.plan)};
    }
    case Method::kRandkhorn: {
      auto res = randkhorn(cost, eta, r, c, cfg);
      return DirectRun{std::move(res.report), std::move(res.plan)};
    }
    case Method::kGandkhorn: {
      auto res = gandkhorn(cost, eta, r, c, cfg);
      return DirectRun{std::move(res.report), std::move(res.plan)};
    }
    case Method::kApdamd:
    case Method::kApdagd: {
      const int n = cost.size();
      const DualProblem problem = make_ot_dual_problem(cost, eta, r, c);
      ApdSolution sol;
      if (m == Method::kApdamd) {
        const MirrorMap phi = MirrorMap::scaled_euclidean(static_cast<double>(n));
        std::optional<ApdBoundChecks> checks;
        if (cfg.assert_bounds) {
          const double radius = dual_radius_bound(cost, eta, r, c);
          checks = ApdBoundChecks{
              eta * (radius + 0.5),
              1.0 + 4.0 * std::sqrt(2.0) * problem.a_norm_1to1 *
                  std::sqrt(phi.delta * (radius + 0.5) / cfg.eps_prime)};
        }
        sol = apdamd(problem, phi, cfg.eps_prime, cfg, checks);
      } else {
        sol = apdagd(problem, cfg.eps_prime, cfg);
      }
      Eigen::Map<const Matrix> x(sol.primal.data(), n, n);
      return DirectRun{std::move(sol.report), TransportPlan{x, false}};
    }
  }
  throw std::logic_error("direct_solve: unknown method");
}

double error_at_budget(const SolveReport& report, long upd_per_iter, long budget) {
  const long iter = std::min<long>(budget / upd_per_iter,
                                   static_cast<long>(report.trace.size()) - 1);
  return report.trace[static_cast<std::size_t>(std::max<long>(iter, 0))].error;
}

std::vector<long> checkpoint_grid(long budget, int n) {
  const long unit = 2L * n;
  std::vector<long> points;
  if (budget < unit) {
    points.push_back(budget);
    return points;
  }
  for (long u = unit; u <= budget; u += unit) points.push_back(u);
  return points;
}

std::vector<double> default_etas(Experiment e) {
  if (e == Experiment::kMnistPairs) return {1.0, 5.0, 9.0};
  return {1.0, 10.0, 100.0};
}

struct Instance {
  Measure r;
  Measure c;
};

std::vector<Instance> make_instances(const BenchSpec& spec, int count,
                                     int& side_out) {
  std::vector<Instance> out;
  if (spec.experiment == Experiment::kMnistPairs) {
    auto images = load_mnist_idx(spec.images_path,
                                 spec.labels_path.empty()
                                     ? std::nullopt
                                     : std::optional<std::string>(spec.labels_path));
    if (static_cast<int>(images.size()) < 2 * count) {
      throw std::runtime_error("MNIST file holds fewer than 2*pairs images");
    }
    side_out = images.front().side;
    for (int p = 0; p < count; ++p) {
      out.push_back(Instance{images[2 * p].to_measure(), images[2 * p + 1].to_measure()});
    }
  } else {
    side_out = spec.side;
    for (int p = 0; p < count; ++p) {
      const auto a = gen_synthetic_image(CounterRng::derive(spec.seed, 2 * p), spec.side);
      const auto b =
          gen_synthetic_image(CounterRng::derive(spec.seed, 2 * p + 1), spec.side);
      out.push_back(Instance{a.to_measure(), b.to_measure()});
    }
  }
  return out;
}

void run_eta_sweep(const BenchSpec& spec, const CostMatrix& cost, const Instance& inst,
                   const std::vector<double>& etas, long budget, BenchResult& result) {
  const int n = cost.size();
  const auto checkpoints = checkpoint_grid(budget, n);

  std::vector<Method> methods = spec.methods;
  if (methods.empty()) methods = {Method::kSinkhorn, Method::kGreenkhorn};

  long run_index = 0;
  for (double eta : etas) {
    for (Method m : methods) {
      const long upd = updates_per_iteration(m, n);
      // A fixed seed per (eta, method) makes reruns revisit the same
      // trajectory, so the plan at each checkpoint is recovered by capping
      // the iteration budget.
      const std::uint64_t run_seed = CounterRng::derive(spec.seed, 7000 + run_index++);
      for (std::size_t k = 0; k < checkpoints.size(); ++k) {
        SolverConfig cfg;
        cfg.eta = eta;
        cfg.eps_prime = std::numeric_limits<double>::min();
        cfg.max_iter = std::max<long>(checkpoints[k] / upd, 1);
        cfg.seed = run_seed;
        cfg.assert_bounds = spec.assert_bounds;
        DirectRun run = direct_solve(m, cost, eta, inst.r, inst.c, cfg);
        result.total_bound_violations += run.report.bound_violations;
        const TransportPlan rounded = round_to_feasible(run.plan, inst.r, inst.c);
        result.eta_sweep.push_back(EtaSweepRow{
            m, eta, checkpoints[k], ot_cost(rounded, cost),
            regularized_objective(run.plan, cost, eta)});
      }
    }
  }

  // Baseline: the exact LP on oracle-sized instances, otherwise a
  // high-precision scaling reference (never labeled exact).
  if (n <= 4) {
    result.baseline_value = exact_ot_lp(cost, inst.r, inst.c).cost;
    result.baseline_kind = "oracle";
  } else {
    SolverConfig cfg;
    const double eta_ref = *std::min_element(etas.begin(), etas.end());
    cfg.eta = eta_ref;
    cfg.eps_prime = 1e-9;
    cfg.max_iter = 30000;
    auto res = sinkhorn(cost, eta_ref, inst.r, inst.c, cfg);
    result.baseline_value =
        ot_cost(round_to_feasible(res.plan, inst.r, inst.c), cost);
    result.baseline_kind = "reference";
  }
}

void run_pairwise(const BenchSpec& spec, BenchResult& result) {
  if (spec.methods.size() != 2) {
    throw std::invalid_argument("pairwise experiments need exactly two methods");
  }
  int side = 0;
  const auto instances = make_instances(spec, spec.pairs, side);
  const CostMatrix cost = l1_ground_cost(side);
  const int n = cost.size();
  const long budget = spec.max_updates > 0 ? spec.max_updates : 20L * n;
  const auto checkpoints = checkpoint_grid(budget, n);
  const std::vector<double> etas = spec.etas.empty() ? default_etas(spec.experiment)
                                                     : spec.etas;
  const double eta_trace = etas.front();

  struct PairOutput {
    std::vector<PairTraceRow> rows;
    std::vector<double> d_a, d_b;  // per checkpoint
    long violations = 0;
  };
  std::vector<PairOutput> outputs(instances.size());

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int p = next.fetch_add(1);
      if (p >= static_cast<int>(instances.size())) return;
      PairOutput& out = outputs[p];
      for (int slot = 0; slot < 2; ++slot) {
        const Method m = spec.methods[slot];
        const long upd = updates_per_iteration(m, n);
        SolverConfig cfg;
        cfg.eta = eta_trace;
        cfg.eps_prime = std::numeric_limits<double>::min();
        cfg.max_iter = std::max<long>(budget / upd, 1);
        cfg.seed = CounterRng::derive(spec.seed, 16L * p + slot);
        cfg.assert_bounds = spec.assert_bounds;
        const DirectRun run =
            direct_solve(m, cost, eta_trace, instances[p].r, instances[p].c, cfg);
        out.violations += run.report.bound_violations;
        for (long point : checkpoints) {
          const double d = error_at_budget(run.report, upd, point);
          out.rows.push_back(PairTraceRow{p, m, point, d});
          (slot == 0 ? out.d_a : out.d_b).push_back(d);
        }
      }
    }
  };

  const int jobs = std::max(1, spec.jobs);
  std::vector<std::thread> threads;
  for (int w = 0; w < jobs - 1; ++w) threads.emplace_back(worker);
  worker();
  for (auto& th : threads) th.join();

  for (const auto& out : outputs) {
    result.total_bound_violations += out.violations;
    result.pair_traces.insert(result.pair_traces.end(), out.rows.begin(),
                              out.rows.end());
  }
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    std::vector<double> ratios;
    ratios.reserve(outputs.size());
    for (const auto& out : outputs) {
      const double da = std::max(out.d_a[k], 1e-300);
      const double db = std::max(out.d_b[k], 1e-300);
      ratios.push_back(competitive_ratio(da, db));
    }
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    result.ratio_summary.push_back(RatioRow{checkpoints[k], sorted.back(),
                                            median_of(ratios), sorted.front()});
  }

  run_eta_sweep(spec, cost, instances.front(), etas, budget, result);
}

void run_eps_sweep(const BenchSpec& spec, BenchResult& result) {
  std::vector<Method> methods = spec.methods;
  if (methods.empty()) methods = {Method::kSinkhorn, Method::kRandkhorn};
  std::vector<double> grid = spec.eps_grid;
  if (grid.empty()) grid = {1e-1, 3e-2, 1e-2, 3e-3};

  int side = 0;
  const auto instances = make_instances(spec, 1, side);
  const CostMatrix cost = l1_ground_cost(side);
  const Instance& inst = instances.front();

  for (Method m : methods) {
    std::vector<double> slopes;
    for (int s = 0; s < spec.sweep_seeds; ++s) {
      std::vector<double> log_inv_eps, log_iters;
      for (double eps_prime : grid) {
        SolverConfig cfg;
        cfg.eta = spec.sweep_eta;
        cfg.eps_prime = eps_prime;
        cfg.max_iter = 2000000;
        cfg.seed = CounterRng::derive(spec.seed, 100000 + 97L * s);
        cfg.assert_bounds = spec.assert_bounds;
        const DirectRun run = direct_solve(m, cost, spec.sweep_eta, inst.r, inst.c, cfg);
        result.total_bound_violations += run.report.bound_violations;
        result.eps_sweep.push_back(
            EpsSweepRow{m, cfg.seed, eps_prime, run.report.iterations});
        log_inv_eps.push_back(std::log(1.0 / eps_prime));
        log_iters.push_back(std::log(static_cast<double>(
            std::max<long>(run.report.iterations, 1))));
      }
      slopes.push_back(least_squares_slope(log_inv_eps, log_iters));
    }
    result.sweep_median_slope[m] = median_of(slopes);
  }
}

void run_eta_only(const BenchSpec& spec, BenchResult& result) {
  int side = 0;
  const auto instances = make_instances(spec, 1, side);
  const CostMatrix cost = l1_ground_cost(side);
  const int n = cost.size();
  const long budget = spec.max_updates > 0 ? spec.max_updates : 20L * n;
  const std::vector<double> etas =
      spec.etas.empty() ? default_etas(spec.experiment) : spec.etas;
  run_eta_sweep(spec, cost, instances.front(), etas, budget, result);
}

}  // namespace

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::kSyntheticPairs: return "synthetic-pairs";
    case Experiment::kMnistPairs: return "mnist-pairs";
    case Experiment::kEpsSweep: return "eps-sweep";
    case Experiment::kEtaSweep: return "eta-sweep";
  }
  return "unknown";
}

std::optional<Experiment> experiment_from_string(const std::string& name) {
  if (name == "synthetic-pairs") return Experiment::kSyntheticPairs;
  if (name == "mnist-pairs") return Experiment::kMnistPairs;
  if (name == "eps-sweep") return Experiment::kEpsSweep;
  if (name == "eta-sweep") return Experiment::kEtaSweep;
  return std::nullopt;
}

void BenchSpec::validate() const {
  if (pairs < 1) throw std::invalid_argument("BenchSpec: pairs must be >= 1");
  if (max_updates < 0) throw std::invalid_argument("BenchSpec: negative budget");
  if (side < 2) throw std::invalid_argument("BenchSpec: side must be >= 2");
  if ((experiment == Experiment::kSyntheticPairs ||
       experiment == Experiment::kMnistPairs) &&
      methods.size() != 2) {
    throw std::invalid_argument("BenchSpec: pairwise experiments take two methods");
  }
}

long updates_per_iteration(Method m, int n) {
  switch (m) {
    case Method::kSinkhorn: return 2L * n;
    case Method::kGreenkhorn: return 1;
    case Method::kRandkhorn: return 2L * n + 2;
    case Method::kGandkhorn: return 3;
    case Method::kApdamd:
    case Method::kApdagd: return 2L * n;
  }
  return 1;
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median_of: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("least_squares_slope: need >= 2 points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

BenchResult run_bench(const BenchSpec& spec) {
  spec.validate();
  BenchResult result;
  switch (spec.experiment) {
    case Experiment::kSyntheticPairs:
    case Experiment::kMnistPairs:
      run_pairwise(spec, result);
      break;
    case Experiment::kEpsSweep:
      run_eps_sweep(spec, result);
      break;
    case Experiment::kEtaSweep:
      run_eta_only(spec, result);
      break;
  }
  return result;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

void put(std::ofstream& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

void write_pair_traces_csv(const std::string& path,
                           const std::vector<PairTraceRow>& rows) {
  auto out = open_out(path);
  out << "pair,method,updates,d\n";
  for (const auto& row : rows) {
    out << row.pair << ',' << to_string(row.method) << ',' << row.updates << ',';
    put(out, row.error);
    out << '\n';
  }
}

void write_ratio_summary_csv(const std::string& path, const std::vector<RatioRow>& rows,
                             Method a, Method b) {
  auto out = open_out(path);
  out << "updates,ratio_max,ratio_median,ratio_min,ratio_of\n";
  for (const auto& row : rows) {
    out << row.updates << ',';
    put(out, row.max);
    out << ',';
    put(out, row.median);
    out << ',';
    put(out, row.min);
    out << ",log(d_" << to_string(a) << "/d_" << to_string(b) << ")\n";
  }
}

void write_eta_sweep_csv(const std::string& path, const BenchResult& result) {
  auto out = open_out(path);
  out << "method,eta,updates,cost_rounded,reg_objective,baseline,baseline_kind\n";
  for (const auto& row : result.eta_sweep) {
    out << to_string(row.method) << ',';
    put(out, row.eta);
    out << ',' << row.updates << ',';
    put(out, row.cost_rounded);
    out << ',';
    put(out, row.reg_objective);
    out << ',';
    put(out, result.baseline_value);
    out << ',' << result.baseline_kind << '\n';
  }
}

void write_eps_sweep_csv(const std::string& path, const BenchResult& result) {
  auto out = open_out(path);
  out << "method,seed,eps_prime,iterations\n";
  for (const auto& row : result.eps_sweep) {
    out << to_string(row.method) << ',' << row.seed << ',';
    put(out, row.eps_prime);
    out << ',' << row.iterations << '\n';
  }
}

}  // namespace otk
