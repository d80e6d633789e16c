#pragma once

#include <optional>
#include <string>
#include <utility>

#include "otkhorn/types.hpp"

namespace otk {

enum class Method { kSinkhorn, kGreenkhorn, kApdamd, kApdagd, kRandkhorn, kGandkhorn };

std::string to_string(Method m);
std::optional<Method> method_from_string(const std::string& name);

struct ApproxRequest {
  Method method = Method::kSinkhorn;
  double eps = 0.1;  // additive transportation-cost tolerance
  std::optional<double> eta;
  std::optional<double> eps_prime;
  std::optional<long> max_iter;
  std::optional<std::uint64_t> seed;
  bool normalization_trick = false;
  bool assert_bounds = false;
};

// Everything needed to audit one approximate solve: the tolerance chain, the
// dual radius, the method's theorem ceiling (when one exists) and what
// actually happened.
struct GuaranteeRecord {
  Method method = Method::kSinkhorn;
  int n = 0;
  double eps = 0.0;
  double eta = 0.0;
  double eps_prime = 0.0;
  double r_bound = 0.0;
  std::optional<double> bound_iterations;
  long actual_iterations = 0;
  double cost = 0.0;
  long long wall_ns = 0;
  std::uint64_t seed = 0;
  Termination termination = Termination::kConverged;
  std::string note;
};

struct DriverResult {
  TransportPlan plan;  // exact marginals
  SolveReport report;
  GuaranteeRecord record;
};

// (r~, c~) = (1 - eps'/8)(r, c) + (eps'/(8n)) 1; keeps the simplex and bounds
// every entry below by eps'/(8n).
std::pair<Measure, Measure> mix_marginals(const Measure& r, const Measure& c,
                                          double eps_prime);

// The unified epsilon-approximation pipeline: schedule eta = eps/(4 log n),
// eps' = eps/(8 ||C||_inf) (unless overridden), mix the marginals, solve to
// eps'/2 with the requested method, round to (r, c), and record the chain.
DriverResult approx_ot(const ApproxRequest& req, const CostMatrix& cost,
                       const Measure& r, const Measure& c);

}  // namespace otk
