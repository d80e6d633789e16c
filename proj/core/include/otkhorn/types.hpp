#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace otk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// l1 tolerance for exact-feasibility claims; double rounding leaves an
// O(n*ulp) residue below this for every size we support.
inline constexpr double kFeasibilityTol = 1e-12;
inline constexpr double kSimplexTol = 1e-12;

// Thrown when a requested regularization is too extreme for stable
// log-domain evaluation.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Probability vector on n atoms.
class Measure {
 public:
  explicit Measure(Vector weights);

  int size() const { return static_cast<int>(weights_.size()); }
  const Vector& weights() const { return weights_; }
  double operator[](int i) const { return weights_[i]; }
  double min_weight() const { return weights_.minCoeff(); }

 private:
  Vector weights_;
};

// Nonnegative square cost matrix with its sup-norm cached.
class CostMatrix {
 public:
  explicit CostMatrix(Matrix entries);

  int size() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }
  double max_abs() const { return max_abs_; }

 private:
  Matrix entries_;
  double max_abs_;
};

// Log-scalings (u, v) of the kernel e^{-C/eta}. The scaled duals
// alpha_i = eta*(u_i + 1/2), beta_j = eta*(v_j + 1/2) are a derived view.
struct DualPotentials {
  Vector u;
  Vector v;

  static DualPotentials zeros(int n) {
    return DualPotentials{Vector::Zero(n), Vector::Zero(n)};
  }
  bool all_finite() const { return u.allFinite() && v.allFinite(); }
  Vector scaled_alpha(double eta) const { return eta * (u.array() + 0.5).matrix(); }
  Vector scaled_beta(double eta) const { return eta * (v.array() + 0.5).matrix(); }
};

// Nonnegative coupling candidate; `feasible` records whether the marginals
// were verified against a stated pair (r, c) within kFeasibilityTol in l1.
struct TransportPlan {
  Matrix entries;
  bool feasible = false;

  Vector row_sums() const;
  Vector col_sums() const;
  bool check_feasible(const Measure& r, const Measure& c) const;
};

struct SolverConfig {
  double eta = 1.0;
  double eps_prime = 1e-6;
  long max_iter = 1000000;
  std::uint64_t seed = 0;
  bool normalization_trick = false;
  bool assert_bounds = false;

  void validate() const {
    if (!(eta > 0)) throw std::invalid_argument("SolverConfig: eta must be > 0");
    if (!(eps_prime > 0)) throw std::invalid_argument("SolverConfig: eps_prime must be > 0");
    if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
  }
};

enum class Termination { kConverged, kMaxIterations, kNumericalFailure };

std::string to_string(Termination t);

struct TraceRow {
  long iter = 0;
  double error = 0.0;           // E_t / d(X) for scaling solvers, ||Ax-b||_1 for primal-dual
  double dual_objective = 0.0;  // f(u^t, v^t) or the dual value at lambda^t
  long long elapsed_ns = 0;
};

struct SolveReport {
  long iterations = 0;
  std::vector<TraceRow> trace;  // always iterations + 1 rows, iterate 0 first
  Termination termination = Termination::kConverged;
  std::uint64_t seed = 0;
  long bound_violations = 0;

  double final_error() const { return trace.empty() ? 0.0 : trace.back().error; }
};

}  // namespace otk
