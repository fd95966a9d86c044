#pragma once

// Dense two-phase simplex for the small planning LPs (tens of variables).
// Minimizes c.x subject to Ax = b, Gx >= h, x >= 0.

#include <vector>

namespace poas {

struct SimplexProblem {
  int num_vars = 0;
  std::vector<double> objective;          // length num_vars
  std::vector<std::vector<double>> eq_a;  // each row length num_vars
  std::vector<double> eq_b;
  std::vector<std::vector<double>> ge_a;
  std::vector<double> ge_b;
};

struct SimplexSolution {
  std::vector<double> x;
  double objective = 0.0;
  long iterations = 0;
};

// Throws Error(errc::numerical_failure) on infeasible, unbounded, or
// iteration-capped problems. Bland's rule, so cycling cannot happen; the
// cap only guards against pathological inputs.
SimplexSolution solve_simplex(const SimplexProblem& problem);

}  // namespace poas
