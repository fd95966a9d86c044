#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "poas/error.hpp"
#include "poas/rng.hpp"
#include "poas/simplex.hpp"

using namespace poas;

TEST_CASE("simplex solves a textbook inequality problem") {
  // min -3x - 5y  s.t.  x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), -36.
  SimplexProblem p;
  p.num_vars = 2;
  p.objective = {-3, -5};
  p.ge_a = {{-1, 0}, {0, -2}, {-3, -2}};
  p.ge_b = {-4, -12, -18};
  const SimplexSolution s = solve_simplex(p);
  CHECK(s.x[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(s.x[1] == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(s.objective == doctest::Approx(-36.0).epsilon(1e-9));
  MESSAGE("optimum (", s.x[0], ", ", s.x[1], ") in ", s.iterations, " iterations");
}

TEST_CASE("simplex handles equality constraints") {
  // min x + 2y + 3z  s.t.  x + y + z = 1, y >= 0.25  ->  (0.75, 0.25, 0).
  SimplexProblem p;
  p.num_vars = 3;
  p.objective = {1, 2, 3};
  p.eq_a = {{1, 1, 1}};
  p.eq_b = {1};
  p.ge_a = {{0, 1, 0}};
  p.ge_b = {0.25};
  const SimplexSolution s = solve_simplex(p);
  CHECK(s.x[0] == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(s.x[1] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(s.x[2] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(s.objective == doctest::Approx(1.25).epsilon(1e-9));
}

TEST_CASE("simplex reports infeasible and unbounded problems") {
  SUBCASE("infeasible") {
    SimplexProblem p;
    p.num_vars = 1;
    p.objective = {1};
    p.eq_a = {{1}};
    p.eq_b = {2};
    p.ge_a = {{-1}};
    p.ge_b = {-1};  // x <= 1 contradicts x = 2
    CHECK_THROWS_AS(solve_simplex(p), Error);
  }
  SUBCASE("unbounded") {
    SimplexProblem p;
    p.num_vars = 1;
    p.objective = {-1};  // minimize -x with x unbounded above
    p.ge_a = {{1}};
    p.ge_b = {0};
    CHECK_THROWS_AS(solve_simplex(p), Error);
  }
}

TEST_CASE("simplex survives a classic cycling construction") {
  // Beale's example cycles under naive most-negative pivoting; Bland's rule
  // must terminate at the optimum -0.05.
  SimplexProblem p;
  p.num_vars = 4;
  p.objective = {-0.75, 150, -0.02, 6};
  // 0.25x1 - 60x2 - 0.04x3 + 9x4 <= 0, 0.5x1 - 90x2 - 0.02x3 + 3x4 <= 0,
  // x3 <= 1, as >= rows.
  p.ge_a = {{-0.25, 60, 0.04, -9}, {-0.5, 90, 0.02, -3}, {0, 0, -1, 0}};
  p.ge_b = {0, 0, -1};
  const SimplexSolution s = solve_simplex(p);
  CHECK(s.objective == doctest::Approx(-0.05).epsilon(1e-9));
  MESSAGE("Beale's problem solved in ", s.iterations, " iterations");
}

TEST_CASE("random box problems match the separable optimum") {
  // min c.x over the unit box: each coordinate independently picks 0 or 1,
  // so the optimum is the sum of the negative costs.
  Rng rng(0xb0c5ULL);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = int(rng.next_int(1, 6));
    SimplexProblem p;
    p.num_vars = n;
    double expect = 0.0;
    for (int i = 0; i < n; ++i) {
      const double c = rng.next_range(-10.0, 10.0);
      p.objective.push_back(c);
      expect += std::min(c, 0.0);
      std::vector<double> row(n, 0.0);
      row[i] = -1.0;
      p.ge_a.push_back(row);
      p.ge_b.push_back(-1.0);
    }
    const SimplexSolution s = solve_simplex(p);
    REQUIRE(s.objective == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("random transport problems match the greedy optimum") {
  // min c.x  s.t.  sum x = 1, x >= 0: put everything on the cheapest
  // coordinate.
  Rng rng(0x7a95ULL);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = int(rng.next_int(2, 8));
    SimplexProblem p;
    p.num_vars = n;
    double best = 1e300;
    for (int i = 0; i < n; ++i) {
      const double c = rng.next_range(-5.0, 5.0);
      p.objective.push_back(c);
      best = std::min(best, c);
    }
    p.eq_a.assign(1, std::vector<double>(n, 1.0));
    p.eq_b = {1.0};
    const SimplexSolution s = solve_simplex(p);
    REQUIRE(s.objective == doctest::Approx(best).epsilon(1e-9));
  }
}
