#include "poas/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "poas/error.hpp"

namespace poas {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr long kIterationCap = 1000000;

struct Tableau {
  // rows x (cols + 1); the trailing column is the right-hand side.
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;
  std::vector<int> basis;  // basic variable of each row

  double* row(std::size_t i) { return a.data() + i * (cols + 1); }
  double& rhs(std::size_t i) { return row(i)[cols]; }
};

void pivot(Tableau& t, std::vector<double>& cost, double& cost_rhs, std::size_t pr, std::size_t pc) {
  double* prow = t.row(pr);
  const double inv = 1.0 / prow[pc];
  for (std::size_t j = 0; j <= t.cols; ++j) prow[j] *= inv;
  prow[pc] = 1.0;  // kill roundoff on the pivot itself
  for (std::size_t i = 0; i < t.rows; ++i) {
    if (i == pr) continue;
    double* r = t.row(i);
    const double f = r[pc];
    if (f == 0.0) continue;
    for (std::size_t j = 0; j <= t.cols; ++j) r[j] -= f * prow[j];
    r[pc] = 0.0;
  }
  const double f = cost[pc];
  if (f != 0.0) {
    for (std::size_t j = 0; j < t.cols; ++j) cost[j] -= f * prow[j];
    cost_rhs -= f * prow[t.cols];
    cost[pc] = 0.0;
  }
}

// Bland's rule: entering = lowest-index improving column, leaving = the
// minimum-ratio row with the lowest basic-variable index.
long run_phase(Tableau& t, std::vector<double>& cost, double& cost_rhs, std::size_t enter_limit,
               long iterations) {
  for (;;) {
    std::size_t pc = t.cols;
    for (std::size_t j = 0; j < enter_limit; ++j) {
      if (cost[j] < -kCostTol) {
        pc = j;
        break;
      }
    }
    if (pc == t.cols) return iterations;  // optimal

    std::size_t pr = t.rows;
    double best = 0.0;
    for (std::size_t i = 0; i < t.rows; ++i) {
      const double aij = t.row(i)[pc];
      if (aij <= kPivotTol) continue;
      const double ratio = t.rhs(i) / aij;
      if (pr == t.rows || ratio < best || (ratio == best && t.basis[i] < t.basis[pr])) {
        pr = i;
        best = ratio;
      }
    }
    if (pr == t.rows) fail(errc::numerical_failure, "linear program is unbounded");

    pivot(t, cost, cost_rhs, pr, pc);
    t.basis[pr] = static_cast<int>(pc);
    if (++iterations > kIterationCap)
      fail(errc::numerical_failure, "simplex iteration limit reached");
  }
}

}  // namespace

SimplexSolution solve_simplex(const SimplexProblem& p) {
  const std::size_t n = static_cast<std::size_t>(p.num_vars);
  if (p.objective.size() != n) fail(errc::invalid_argument, "objective length mismatch");
  if (p.eq_a.size() != p.eq_b.size() || p.ge_a.size() != p.ge_b.size())
    fail(errc::invalid_argument, "constraint matrix/rhs length mismatch");
  for (const auto& r : p.eq_a)
    if (r.size() != n) fail(errc::invalid_argument, "equality row length mismatch");
  for (const auto& r : p.ge_a)
    if (r.size() != n) fail(errc::invalid_argument, "inequality row length mismatch");

  const std::size_t n_ge = p.ge_a.size();
  const std::size_t m = p.eq_a.size() + n_ge;
  const std::size_t n_struct = n + n_ge;  // structural plus surplus

  Tableau t;
  t.rows = m;
  t.cols = n_struct + m;  // one artificial per row
  t.a.assign(t.rows * (t.cols + 1), 0.0);
  t.basis.assign(t.rows, 0);

  // Equalities first, then inequalities with their surplus column.
  for (std::size_t i = 0; i < m; ++i) {
    double* r = t.row(i);
    const bool is_ge = i >= p.eq_a.size();
    const std::vector<double>& src = is_ge ? p.ge_a[i - p.eq_a.size()] : p.eq_a[i];
    double b = is_ge ? p.ge_b[i - p.eq_a.size()] : p.eq_b[i];
    for (std::size_t j = 0; j < n; ++j) r[j] = src[j];
    if (is_ge) r[n + (i - p.eq_a.size())] = -1.0;
    r[t.cols] = b;

    // Row equilibration: scale to a unit largest coefficient so mixed units
    // (seconds vs shares) do not skew the pivot tolerances.
    double scale = 0.0;
    for (std::size_t j = 0; j < n_struct; ++j) scale = std::max(scale, std::fabs(r[j]));
    if (scale > 0.0) {
      const double inv = 1.0 / scale;
      for (std::size_t j = 0; j < n_struct; ++j) r[j] *= inv;
      r[t.cols] *= inv;
    } else if (std::fabs(r[t.cols]) > kFeasTol) {
      fail(errc::numerical_failure, "linear program is infeasible (null row)");
    }

    if (r[t.cols] < 0.0)
      for (std::size_t j = 0; j <= t.cols; ++j) r[j] = -r[j];

    r[n_struct + i] = 1.0;
    t.basis[i] = static_cast<int>(n_struct + i);
  }

  // Phase 1: minimize the artificial sum. Reduced costs follow from the
  // all-artificial starting basis.
  std::vector<double> cost(t.cols, 0.0);
  double cost_rhs = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double* r = t.row(i);
    for (std::size_t j = 0; j < n_struct; ++j) cost[j] -= r[j];
    cost_rhs -= r[t.cols];
  }
  long iterations = run_phase(t, cost, cost_rhs, n_struct, 0);
  if (-cost_rhs > kFeasTol) fail(errc::numerical_failure, "linear program is infeasible");

  // Drive leftover artificials out of the basis. A row with no usable
  // structural coefficient is redundant and stays parked at zero.
  for (std::size_t i = 0; i < m; ++i) {
    if (t.basis[i] < static_cast<int>(n_struct)) continue;
    std::size_t pc = t.cols;
    for (std::size_t j = 0; j < n_struct; ++j) {
      if (std::fabs(t.row(i)[j]) > kPivotTol) {
        pc = j;
        break;
      }
    }
    if (pc == t.cols) continue;
    pivot(t, cost, cost_rhs, i, pc);
    t.basis[i] = static_cast<int>(pc);
  }

  // Phase 2 over the real objective (zero on surplus columns).
  std::fill(cost.begin(), cost.end(), 0.0);
  cost_rhs = 0.0;
  for (std::size_t j = 0; j < n; ++j) cost[j] = p.objective[j];
  for (std::size_t i = 0; i < m; ++i) {
    const int b = t.basis[i];
    if (b >= static_cast<int>(n)) continue;  // surplus or parked artificial: zero cost
    const double cb = p.objective[static_cast<std::size_t>(b)];
    if (cb == 0.0) continue;
    const double* r = t.row(i);
    for (std::size_t j = 0; j < t.cols; ++j) cost[j] -= cb * r[j];
    cost_rhs -= cb * r[t.cols];
  }
  iterations = run_phase(t, cost, cost_rhs, n_struct, iterations);

  SimplexSolution sol;
  sol.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const int b = t.basis[i];
    if (b >= 0 && b < static_cast<int>(n)) sol.x[static_cast<std::size_t>(b)] = t.rhs(i);
  }
  sol.objective = -cost_rhs;
  sol.iterations = iterations;
  return sol;
}

}  // namespace poas
