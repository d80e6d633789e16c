#include "otkhorn/types.hpp"

#include <cmath>

#include "otkhorn/summation.hpp"

namespace otk {

Measure::Measure(Vector weights) : weights_(std::move(weights)) {
  if (weights_.size() == 0) {
    throw std::invalid_argument("Measure: empty weight vector");
  }
  if (!weights_.allFinite() || (weights_.array() < 0.0).any()) {
    throw std::invalid_argument("Measure: weights must be finite and nonnegative");
  }
  const double total = compensated_sum(weights_);
  if (std::abs(total - 1.0) > kSimplexTol) {
    throw std::invalid_argument("Measure: weights must sum to 1 within 1e-12, got " +
                                std::to_string(total));
  }
}

CostMatrix::CostMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw std::invalid_argument("CostMatrix: entries must be square and nonempty");
  }
  if (!entries_.allFinite() || (entries_.array() < 0.0).any()) {
    throw std::invalid_argument("CostMatrix: entries must be finite and nonnegative");
  }
  max_abs_ = entries_.maxCoeff();
}

Vector TransportPlan::row_sums() const { return entries.rowwise().sum(); }

Vector TransportPlan::col_sums() const { return entries.colwise().sum().transpose(); }

bool TransportPlan::check_feasible(const Measure& r, const Measure& c) const {
  if (entries.rows() != r.size() || entries.cols() != c.size()) return false;
  const double err =
      l1_diff(row_sums(), r.weights()) + l1_diff(col_sums(), c.weights());
  return err <= kFeasibilityTol;
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kConverged: return "converged";
    case Termination::kMaxIterations: return "max_iterations";
    case Termination::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

}  // namespace otk
