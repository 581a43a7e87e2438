#include <cmath>
#include <functional>

#include "bdtt/lp.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace bdtt;

TEST_CASE("solveLP: bound rows give the textbook dual") {
  LinearProgram lp;
  int x = lp.addVariable(-kInfinity, kInfinity, 1.0, false, "x");
  int lo = lp.addRow(RowSense::GreaterEqual, 3.0, {{x, 1.0}}, "x_ge_3");
  lp.addRow(RowSense::LessEqual, 10.0, {{x, 1.0}}, "x_le_10");
  LPSolution sol = solveLP(lp);
  REQUIRE(sol.status == LPStatus::Optimal);
  CHECK(sol.primal[x] == doctest::Approx(3.0));
  CHECK(sol.dual[lo] == doctest::Approx(1.0));
  CHECK(sol.dualityResidual <= tol::dualityGap * (1.0 + std::abs(sol.objective)));
}

TEST_CASE("solveLP: infeasible rows are reported") {
  LinearProgram lp;
  int x = lp.addVariable(-kInfinity, kInfinity, 0.0);
  lp.addRow(RowSense::GreaterEqual, 1.0, {{x, 1.0}});
  lp.addRow(RowSense::LessEqual, 0.0, {{x, 1.0}});
  CHECK(solveLP(lp).status == LPStatus::Infeasible);
}

TEST_CASE("solveLP: simplex reaches the simplex vertex") {
  LinearProgram lp;
  int x = lp.addVariable(0.0, kInfinity, -1.0);
  int y = lp.addVariable(0.0, kInfinity, -1.0);
  lp.addRow(RowSense::LessEqual, 1.0, {{x, 1.0}, {y, 1.0}});
  LPSolution sol = solveLP(lp);
  REQUIRE(sol.status == LPStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-1.0));
  CHECK(sol.primal[x] + sol.primal[y] == doctest::Approx(1.0));
}

TEST_CASE("solveLP: unbounded detection") {
  LinearProgram lp;
  int x = lp.addVariable(0.0, kInfinity, -1.0);
  lp.addRow(RowSense::GreaterEqual, 0.0, {{x, 1.0}});
  CHECK(solveLP(lp).status == LPStatus::Unbounded);
}

TEST_CASE("solveLP: iteration limit is surfaced, not silently truncated") {
  LinearProgram lp;
  for (int j = 0; j < 6; ++j) lp.addVariable(0.0, 10.0, -1.0);
  for (int i = 0; i < 4; ++i) {
    SparseVec coeffs;
    for (int j = 0; j < 6; ++j) coeffs.push_back({j, 1.0 + (i + j) % 3});
    lp.addRow(RowSense::LessEqual, 7.0, std::move(coeffs));
  }
  LPSolveOptions opts;
  opts.maxPivots = 1;
  CHECK(solveLP(lp, nullptr, opts).status == LPStatus::IterationLimit);
}

TEST_CASE("solveLP agrees with the vertex-enumeration oracle on 1000 LPs") {
  int disagreements = 0;
  int feasibleCount = 0;
  for (int k = 0; k < 1000; ++k) {
    LinearProgram lp = testsupport::randomBoxedLP(20240601, k, 6, 6);
    auto oracle = testsupport::vertexEnumerationOracle(lp);
    LPSolution sol = solveLP(lp);
    if (oracle.feasible) {
      ++feasibleCount;
      if (sol.status != LPStatus::Optimal ||
          std::abs(sol.objective - oracle.objective) >
              1e-6 * (1.0 + std::abs(oracle.objective)))
        ++disagreements;
      if (sol.status == LPStatus::Optimal &&
          sol.dualityResidual > tol::dualityGap * (1.0 + std::abs(sol.objective)))
        ++disagreements;
    } else if (sol.status != LPStatus::Infeasible) {
      ++disagreements;
    }
  }
  CHECK(disagreements == 0);
  CHECK(feasibleCount > 200);  // the generator must exercise both outcomes
  CHECK(feasibleCount < 1000);
}

TEST_CASE("solveLP handles larger random boxed LPs (8x8)") {
  int disagreements = 0;
  for (int k = 0; k < 25; ++k) {
    LinearProgram lp = testsupport::randomBoxedLP(777, k, 8, 8);
    auto oracle = testsupport::vertexEnumerationOracle(lp);
    LPSolution sol = solveLP(lp);
    if (oracle.feasible) {
      if (sol.status != LPStatus::Optimal ||
          std::abs(sol.objective - oracle.objective) >
              1e-6 * (1.0 + std::abs(oracle.objective)))
        ++disagreements;
    } else if (sol.status != LPStatus::Infeasible) {
      ++disagreements;
    }
  }
  CHECK(disagreements == 0);
}

TEST_CASE("warm-started re-solve after adding a row matches a cold solve") {
  for (int k = 0; k < 50; ++k) {
    LinearProgram lp = testsupport::randomBoxedLP(99, k, 6, 5);
    LPSolution first = solveLP(lp);
    if (first.status != LPStatus::Optimal) continue;
    // Add a cutting row through the midpoint of the optimum.
    SparseVec coeffs;
    double act = 0.0;
    for (int j = 0; j < lp.numVariables(); ++j) {
      coeffs.push_back({j, 1.0});
      act += first.primal[j];
    }
    lp.addRow(RowSense::LessEqual, act * 0.75 + 0.5, std::move(coeffs));
    LPSolution warm = solveLP(lp, &first.basis);
    LPSolution cold = solveLP(lp);
    REQUIRE(warm.status == cold.status);
    if (warm.status == LPStatus::Optimal)
      CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-7));
  }
}

TEST_CASE("extractFarkasRay: two-row contradiction") {
  LinearProgram lp;
  int x = lp.addVariable(-kInfinity, kInfinity, 0.0);
  lp.addRow(RowSense::GreaterEqual, 3.0, {{x, 1.0}});
  lp.addRow(RowSense::LessEqual, 1.0, {{x, 1.0}});
  REQUIRE(solveLP(lp).status == LPStatus::Infeasible);
  FarkasRay ray = extractFarkasRay(lp);
  CHECK(ray.value == doctest::Approx(2.0));
  CHECK(ray.dual[0] >= 0.0);   // >= row
  CHECK(ray.dual[1] <= 0.0);   // <= row
  CHECK(std::abs(ray.dual[0]) > 1e-9);
  CHECK(std::abs(ray.dual[1]) > 1e-9);
}

TEST_CASE("extractFarkasRay: certificate over several rows") {
  LinearProgram lp;
  int x = lp.addVariable(-kInfinity, kInfinity, 0.0);
  int y = lp.addVariable(-kInfinity, kInfinity, 0.0);
  lp.addRow(RowSense::GreaterEqual, 2.0, {{x, 1.0}, {y, 1.0}});
  lp.addRow(RowSense::LessEqual, 0.0, {{x, 1.0}});
  lp.addRow(RowSense::LessEqual, 0.0, {{y, 1.0}});
  FarkasRay ray = extractFarkasRay(lp);
  CHECK(ray.value > 1e-7);
  CHECK(ray.dual[0] >= 0.0);
  CHECK(ray.dual[1] <= 0.0);
  CHECK(ray.dual[2] <= 0.0);
}

TEST_CASE("extractFarkasRay rejects feasible LPs") {
  LinearProgram lp;
  int x = lp.addVariable(0.0, 1.0, 0.0);
  lp.addRow(RowSense::LessEqual, 2.0, {{x, 1.0}});
  CHECK_THROWS_AS(extractFarkasRay(lp), std::logic_error);
}

TEST_CASE("LinearProgram validation catches structural mistakes") {
  LinearProgram lp;
  int x = lp.addVariable(1.0, 0.0, 0.0);  // inverted bounds
  lp.addRow(RowSense::LessEqual, 1.0, {{x, 1.0}, {x, 2.0}});  // duplicate col
  auto problems = lp.validate();
  CHECK(problems.size() == 2);
}

TEST_CASE("dumpCplexLp emits all sections") {
  LinearProgram lp;
  int x = lp.addVariable(0.0, 5.0, 1.5, true, "count");
  lp.addRow(RowSense::GreaterEqual, 2.0, {{x, 1.0}}, "atleast");
  std::string text = lp.dumpCplexLp();
  CHECK(text.find("Minimize") != std::string::npos);
  CHECK(text.find("atleast") != std::string::npos);
  CHECK(text.find("Generals") != std::string::npos);
  CHECK(text.find("count") != std::string::npos);
}
