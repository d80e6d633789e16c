#pragma once

#include <map>
#include <string>
#include <vector>

#include "otkhorn/data.hpp"
#include "otkhorn/driver.hpp"
#include "otkhorn/types.hpp"

namespace otk {

enum class Experiment { kSyntheticPairs, kMnistPairs, kEpsSweep, kEtaSweep };

std::string to_string(Experiment e);
std::optional<Experiment> experiment_from_string(const std::string& name);

// One benchmark run. Pairwise experiments compare methods[0] against
// methods[1] at equal row/column-update budgets; the eta sweep reruns every
// listed method over the eta grid; the eps sweep fits log(iterations)
// against log(1/eps') per seed.
struct BenchSpec {
  Experiment experiment = Experiment::kSyntheticPairs;
  std::vector<Method> methods;
  int pairs = 10;
  std::vector<double> etas;      // empty -> {1, 10, 100} synthetic, {1, 5, 9} MNIST
  std::vector<double> eps_grid;  // empty -> {1e-1, 3e-2, 1e-2, 3e-3}
  long max_updates = 0;          // 0 -> 10 Sinkhorn-equivalents (20 n)
  std::uint64_t seed = 0;
  int side = 20;
  int jobs = 1;
  int sweep_seeds = 20;
  double sweep_eta = 0.05;  // eps-sweep regularization
  bool assert_bounds = false;
  std::string images_path;  // MNIST experiments
  std::string labels_path;

  void validate() const;
};

struct PairTraceRow {
  int pair = 0;
  Method method = Method::kSinkhorn;
  long updates = 0;
  double error = 0.0;  // d(X) of the iterate at this budget
};

struct RatioRow {
  long updates = 0;
  double max = 0.0, median = 0.0, min = 0.0;  // log(d_a / d_b) across pairs
};

struct EtaSweepRow {
  Method method = Method::kSinkhorn;
  double eta = 0.0;
  long updates = 0;
  double cost_rounded = 0.0;   // <C, round(X_t)>
  double reg_objective = 0.0;  // <C, X_t> - eta H(X_t)
};

struct EpsSweepRow {
  Method method = Method::kSinkhorn;
  std::uint64_t seed = 0;
  double eps_prime = 0.0;
  long iterations = 0;
};

struct BenchResult {
  std::vector<PairTraceRow> pair_traces;
  std::vector<RatioRow> ratio_summary;
  std::vector<EtaSweepRow> eta_sweep;
  double baseline_value = 0.0;
  std::string baseline_kind;  // "oracle" or "reference"
  std::vector<EpsSweepRow> eps_sweep;
  std::map<Method, double> sweep_median_slope;
  long total_bound_violations = 0;
};

BenchResult run_bench(const BenchSpec& spec);

// Cost of one iteration in row/column updates, the unit that makes the
// pairwise plots budget-fair: Sinkhorn rescales all 2n coordinates,
// Greenkhorn one, Randkhorn two full blocks plus the amortized search,
// Gandkhorn three coordinate-level touches, and the primal-dual methods one
// full-matrix pass (2n) per iteration.
long updates_per_iteration(Method m, int n);

double median_of(std::vector<double> values);
// Least-squares slope of y against x.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

// CSV emission for the CLI; headers are fixed and all floats use 17
// significant digits.
void write_pair_traces_csv(const std::string& path, const std::vector<PairTraceRow>&);
void write_ratio_summary_csv(const std::string& path, const std::vector<RatioRow>&,
                             Method a, Method b);
void write_eta_sweep_csv(const std::string& path, const BenchResult&);
void write_eps_sweep_csv(const std::string& path, const BenchResult&);

}  // namespace otk
