#include "otkhorn/rounding.hpp"

#include <stdexcept>

#include "otkhorn/summation.hpp"

namespace otk {

TransportPlan round_to_feasible(const TransportPlan& plan, const Measure& r,
                                const Measure& c) {
  const int n = r.size();
  if (plan.entries.rows() != n || plan.entries.cols() != c.size()) {
    throw std::invalid_argument("round_to_feasible: dimension mismatch");
  }
  if ((plan.entries.array() < 0.0).any()) {
    throw std::invalid_argument("round_to_feasible: plan must be nonnegative");
  }

  Matrix x = plan.entries;

  // Row clip: scale row i by min(r_i / r_i(X), 1); a zero row sum keeps
  // factor 1 and leaves the correction below to restore that row's mass.
  Vector rows = x.rowwise().sum();
  for (int i = 0; i < n; ++i) {
    if (rows[i] > r[i]) x.row(i) *= r[i] / rows[i];
  }

  Vector cols = x.colwise().sum().transpose();
  for (int j = 0; j < c.size(); ++j) {
    if (cols[j] > c[j]) x.col(j) *= c[j] / cols[j];
  }

  Vector err_r = r.weights() - x.rowwise().sum();
  Vector err_c = c.weights() - x.colwise().sum().transpose();
  err_r = err_r.cwiseMax(0.0);
  err_c = err_c.cwiseMax(0.0);
  const double missing = compensated_sum(err_r);
  if (missing > 0.0) {
    x.noalias() += err_r * (err_c / missing).transpose();
  }
  return TransportPlan{std::move(x), true};
}

}  // namespace otk
