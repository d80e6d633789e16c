#include "otkhorn/oracle.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace otk {

namespace {

constexpr int kMaxOracleSize = 4;

// Solves for the basic variables on a candidate edge set by peeling leaves
// of the bipartite graph. Returns false if the set contains a cycle or a
// variable goes below -1e-12.
bool solve_basis(int n, const std::vector<std::pair<int, int>>& cells,
                 const Measure& r, const Measure& c, std::vector<double>& values) {
  const int vertices = 2 * n;
  std::array<int, 8> degree{};
  std::array<double, 8> remaining{};
  for (int i = 0; i < n; ++i) remaining[i] = r[i];
  for (int j = 0; j < n; ++j) remaining[n + j] = c[j];

  const int k = static_cast<int>(cells.size());
  for (const auto& [i, j] : cells) {
    ++degree[i];
    ++degree[n + j];
  }

  values.assign(k, 0.0);
  std::vector<bool> used(k, false);
  for (int solved = 0; solved < k; ++solved) {
    int leaf = -1;
    int edge = -1;
    for (int v = 0; v < vertices && leaf < 0; ++v) {
      if (degree[v] != 1) continue;
      for (int e = 0; e < k; ++e) {
        if (used[e]) continue;
        const int a = cells[e].first;
        const int b = n + cells[e].second;
        if (a == v || b == v) {
          leaf = v;
          edge = e;
          break;
        }
      }
    }
    if (leaf < 0) return false;  // remaining edges form a cycle

    const double x = remaining[leaf];
    if (x < -1e-12) return false;
    values[edge] = std::max(x, 0.0);
    used[edge] = true;
    const int a = cells[edge].first;
    const int b = n + cells[edge].second;
    const int other = (a == leaf) ? b : a;
    remaining[leaf] = 0.0;
    remaining[other] -= x;
    --degree[a];
    --degree[b];
  }

  for (int v = 0; v < vertices; ++v) {
    if (std::abs(remaining[v]) > 1e-9) return false;
  }
  return true;
}

}  // namespace

LpSolution exact_ot_lp(const CostMatrix& cost, const Measure& r, const Measure& c) {
  const int n = cost.size();
  if (n > kMaxOracleSize) {
    throw std::invalid_argument("exact_ot_lp: guarded to n <= 4 (enumeration is exponential)");
  }
  if (r.size() != n || c.size() != n) {
    throw std::invalid_argument("exact_ot_lp: dimension mismatch");
  }

  const int cells = n * n;
  const int k = 2 * n - 1;

  std::vector<int> combo(k);
  for (int i = 0; i < k; ++i) combo[i] = i;

  LpSolution best;
  best.cost = std::numeric_limits<double>::infinity();
  std::vector<std::pair<int, int>> basis(k);
  std::vector<double> values;

  bool more = true;
  while (more) {
    for (int e = 0; e < k; ++e) {
      basis[e] = {combo[e] / n, combo[e] % n};
    }
    if (solve_basis(n, basis, r, c, values)) {
      double candidate_cost = 0.0;
      for (int e = 0; e < k; ++e) {
        candidate_cost += cost(basis[e].first, basis[e].second) * values[e];
      }
      // Strict improvement keeps the lexicographically earliest basis on ties.
      if (!std::isfinite(best.cost) ||
          candidate_cost < best.cost - 1e-12 * std::max(1.0, std::abs(best.cost))) {
        Matrix plan = Matrix::Zero(n, n);
        for (int e = 0; e < k; ++e) {
          plan(basis[e].first, basis[e].second) = values[e];
        }
        best.cost = candidate_cost;
        best.basis = basis;
        best.plan.entries = std::move(plan);
      }
    }

    // next lexicographic (cells choose k) combination
    int pos = k - 1;
    while (pos >= 0 && combo[pos] == cells - k + pos) --pos;
    if (pos < 0) {
      more = false;
    } else {
      ++combo[pos];
      for (int q = pos + 1; q < k; ++q) combo[q] = combo[q - 1] + 1;
    }
  }

  if (!std::isfinite(best.cost)) {
    throw std::runtime_error("exact_ot_lp: no feasible basis found");
  }
  best.plan.feasible = best.plan.check_feasible(r, c);
  return best;
}

}  // namespace otk
