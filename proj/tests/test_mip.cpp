#include <cmath>

#include "bdtt/mip.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace bdtt;

TEST_CASE("solveMIPReference: tiny knapsack") {
  // max 3x + 2y s.t. x + y <= 1, binaries  ==  min -3x - 2y.
  LinearProgram lp;
  int x = lp.addVariable(0.0, 1.0, -3.0, true);
  int y = lp.addVariable(0.0, 1.0, -2.0, true);
  lp.addRow(RowSense::LessEqual, 1.0, {{x, 1.0}, {y, 1.0}});
  MIPResult res = solveMIPReference(lp);
  REQUIRE(res.status == MIPStatus::Optimal);
  CHECK(res.objective == doctest::Approx(-3.0));
  CHECK(res.values[x] == doctest::Approx(1.0));
}

TEST_CASE("solveMIPReference: interval-bound problems solve at the root") {
  LinearProgram lp;
  lp.addVariable(2.0, 5.0, 1.0, true);
  lp.addVariable(1.0, 3.0, 2.0, true);
  MIPResult res = solveMIPReference(lp);
  REQUIRE(res.status == MIPStatus::Optimal);
  CHECK(res.objective == doctest::Approx(4.0));
  CHECK(res.nodeCount == 1);
}

TEST_CASE("solveMIPReference: fractional-only window is infeasible") {
  LinearProgram lp;
  int x = lp.addVariable(0.0, 1.0, 0.0, true);
  lp.addRow(RowSense::GreaterEqual, 0.4, {{x, 1.0}});
  lp.addRow(RowSense::LessEqual, 0.6, {{x, 1.0}});
  CHECK(solveMIPReference(lp).status == MIPStatus::Infeasible);
}

namespace {

// Exhaustive oracle over all-binary problems.
struct BinaryOracle {
  bool feasible = false;
  double objective = 0.0;
};

BinaryOracle enumerateBinary(const LinearProgram& lp) {
  const int n = lp.numVariables();
  BinaryOracle out;
  out.objective = kInfinity;
  for (int mask = 0; mask < (1 << n); ++mask) {
    bool ok = true;
    for (int i = 0; i < lp.numRows() && ok; ++i) {
      double act = 0.0;
      for (const auto& [c, v] : lp.row(i).coeffs)
        act += v * ((mask >> c) & 1);
      switch (lp.row(i).sense) {
        case RowSense::LessEqual: ok = act <= lp.row(i).rhs + 1e-9; break;
        case RowSense::GreaterEqual: ok = act >= lp.row(i).rhs - 1e-9; break;
        case RowSense::Equal: ok = std::abs(act - lp.row(i).rhs) <= 1e-9; break;
      }
    }
    if (!ok) continue;
    double obj = 0.0;
    for (int j = 0; j < n; ++j) obj += lp.variable(j).objective * ((mask >> j) & 1);
    out.feasible = true;
    out.objective = std::min(out.objective, obj);
  }
  return out;
}

}  // namespace

TEST_CASE("solveMIPReference matches exhaustive enumeration on binaries") {
  int checked = 0;
  for (int k = 0; k < 40; ++k) {
    LinearProgram lp = testsupport::randomBoxedLP(424242, k, 8, 5);
    // Make it all-binary.
    for (int j = 0; j < lp.numVariables(); ++j) {
      lp.variable(j).lower = 0.0;
      lp.variable(j).upper = 1.0;
      lp.variable(j).integral = true;
    }
    BinaryOracle oracle = enumerateBinary(lp);
    MIPResult res = solveMIPReference(lp);
    if (oracle.feasible) {
      REQUIRE(res.status == MIPStatus::Optimal);
      CHECK(res.objective == doctest::Approx(oracle.objective).epsilon(1e-9));
      CHECK(res.bound <=
            res.objective + 1e-6 * (1.0 + std::abs(res.objective)));
    } else {
      CHECK(res.status == MIPStatus::Infeasible);
    }
    ++checked;
  }
  CHECK(checked == 40);
}

TEST_CASE("solveMIPReference honors the time limit with incumbent carry") {
  LinearProgram lp = testsupport::randomBoxedLP(7, 3, 8, 6);
  for (int j = 0; j < lp.numVariables(); ++j) {
    lp.variable(j).lower = 0.0;
    lp.variable(j).upper = 1.0;
    lp.variable(j).integral = true;
  }
  MIPOptions opts;
  opts.timeLimitSeconds = 0.0;  // expires immediately
  MIPResult res = solveMIPReference(lp, opts);
  CHECK(res.status == MIPStatus::TimeLimit);
}
