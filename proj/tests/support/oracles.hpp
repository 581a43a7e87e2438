#pragma once

// Brute-force oracles used by the tests. These are written independently of
// the solver code paths they check: plain dense linear algebra and
// exhaustive enumeration only.

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "bdtt/instance.hpp"
#include "bdtt/lp.hpp"

namespace testsupport {

struct VertexOracleResult {
  bool feasible = false;
  double objective = 0.0;
};

// Enumerates every candidate vertex of a *boxed* LP (all variable bounds
// finite): choose k rows active plus n-k variables at a bound, solve the
// dense system, keep feasible points. A bounded nonempty polyhedron has an
// optimal vertex, so the minimum over vertices is the LP optimum.
inline VertexOracleResult vertexEnumerationOracle(const bdtt::LinearProgram& lp) {
  const int n = lp.numVariables();
  const int m = lp.numRows();
  VertexOracleResult result;
  double best = std::numeric_limits<double>::infinity();
  bool found = false;

  std::vector<std::vector<double>> rowDense(m, std::vector<double>(n, 0.0));
  for (int i = 0; i < m; ++i)
    for (const auto& [c, v] : lp.row(i).coeffs) rowDense[i][c] = v;

  std::vector<int> rowsPicked;
  std::vector<int> varsFree;

  auto checkPoint = [&](const std::vector<double>& x) {
    for (int j = 0; j < n; ++j) {
      if (x[j] < lp.variable(j).lower - 1e-7) return;
      if (x[j] > lp.variable(j).upper + 1e-7) return;
    }
    for (int i = 0; i < m; ++i) {
      double act = 0.0;
      for (int j = 0; j < n; ++j) act += rowDense[i][j] * x[j];
      double rhs = lp.row(i).rhs;
      switch (lp.row(i).sense) {
        case bdtt::RowSense::LessEqual:
          if (act > rhs + 1e-7) return;
          break;
        case bdtt::RowSense::GreaterEqual:
          if (act < rhs - 1e-7) return;
          break;
        case bdtt::RowSense::Equal:
          if (std::abs(act - rhs) > 1e-7) return;
          break;
      }
    }
    double obj = 0.0;
    for (int j = 0; j < n; ++j) obj += lp.variable(j).objective * x[j];
    found = true;
    best = std::min(best, obj);
  };

  // Solve the k x k system over the free variables with the others pinned.
  auto tryCombination = [&](const std::vector<int>& activeRows,
                            const std::vector<int>& freeVars,
                            const std::vector<double>& pinned) {
    const int k = static_cast<int>(freeVars.size());
    if (static_cast<int>(activeRows.size()) != k) return;
    std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
    for (int r = 0; r < k; ++r) {
      double rhs = lp.row(activeRows[r]).rhs;
      for (int j = 0; j < n; ++j) {
        if (std::isnan(pinned[j])) continue;
        rhs -= rowDense[activeRows[r]][j] * pinned[j];
      }
      for (int c = 0; c < k; ++c)
        a[r][c] = rowDense[activeRows[r]][freeVars[c]];
      a[r][k] = rhs;
    }
    // Gaussian elimination with partial pivoting.
    for (int col = 0; col < k; ++col) {
      int pivot = -1;
      double bestAbs = 1e-10;
      for (int r = col; r < k; ++r) {
        if (std::abs(a[r][col]) > bestAbs) {
          bestAbs = std::abs(a[r][col]);
          pivot = r;
        }
      }
      if (pivot < 0) return;  // singular; not a vertex system
      std::swap(a[col], a[pivot]);
      for (int r = 0; r < k; ++r) {
        if (r == col) continue;
        double f = a[r][col] / a[col][col];
        if (f == 0.0) continue;
        for (int c = col; c <= k; ++c) a[r][c] -= f * a[col][c];
      }
    }
    std::vector<double> x(pinned);
    for (int c = 0; c < k; ++c) x[freeVars[c]] = a[c][k] / a[c][c];
    checkPoint(x);
  };

  // Enumerate bound assignments for each subset of free variables, and
  // active-row subsets of the matching size.
  const int total = 1 << n;
  for (int freeMask = 0; freeMask < total; ++freeMask) {
    std::vector<int> freeVars;
    for (int j = 0; j < n; ++j)
      if (freeMask & (1 << j)) freeVars.push_back(j);
    const int k = static_cast<int>(freeVars.size());
    if (k > m && k > 0) continue;  // not enough rows to pin the free vars
    // Bound choices for pinned variables.
    std::vector<int> pinnedVars;
    for (int j = 0; j < n; ++j)
      if (!(freeMask & (1 << j))) pinnedVars.push_back(j);
    const int boundsTotal = 1 << pinnedVars.size();
    for (int boundMask = 0; boundMask < boundsTotal; ++boundMask) {
      std::vector<double> pinned(n, std::numeric_limits<double>::quiet_NaN());
      for (size_t p = 0; p < pinnedVars.size(); ++p) {
        int j = pinnedVars[p];
        pinned[j] = (boundMask & (1 << p)) ? lp.variable(j).upper
                                           : lp.variable(j).lower;
      }
      if (k == 0) {
        std::vector<double> x(pinned);
        checkPoint(x);
        continue;
      }
      // Choose k active rows.
      std::vector<int> rows(k);
      std::function<void(int, int)> chooseRows = [&](int start, int depth) {
        if (depth == k) {
          tryCombination(rows, freeVars, pinned);
          return;
        }
        for (int r = start; r < m; ++r) {
          rows[depth] = r;
          chooseRows(r + 1, depth + 1);
        }
      };
      chooseRows(0, 0);
    }
  }
  result.feasible = found;
  result.objective = best;
  return result;
}

// Random boxed LP, reproducible from (seed, index) via the same
// counter-based generator the instance module uses.
inline bdtt::LinearProgram randomBoxedLP(uint64_t seed, int index, int maxVars,
                                         int maxRows) {
  auto u01 = [&](uint64_t counter) {
    return bdtt::uniform01(seed, static_cast<uint64_t>(index) * 100003ULL + counter);
  };
  bdtt::LinearProgram lp;
  int n = 2 + static_cast<int>(u01(0) * (maxVars - 1));
  int m = 1 + static_cast<int>(u01(1) * maxRows);
  n = std::min(n, maxVars);
  m = std::min(m, maxRows);
  for (int j = 0; j < n; ++j) {
    double lo = 0.0;
    double hi = 1.0 + std::floor(u01(10 + j) * 5.0);
    double c = std::floor(u01(30 + j) * 11.0) - 5.0;
    lp.addVariable(lo, hi, c);
  }
  for (int i = 0; i < m; ++i) {
    bdtt::SparseVec coeffs;
    for (int j = 0; j < n; ++j) {
      double r = u01(1000 + i * 37 + j);
      if (r < 0.55) {
        double v = std::floor(u01(5000 + i * 37 + j) * 7.0) - 3.0;
        if (v != 0.0) coeffs.push_back({j, v});
      }
    }
    if (coeffs.empty()) coeffs.push_back({i % n, 1.0});
    double rhs = std::floor(u01(9000 + i) * 11.0) - 4.0;
    double sr = u01(12000 + i);
    bdtt::RowSense sense = sr < 0.4   ? bdtt::RowSense::LessEqual
                           : sr < 0.8 ? bdtt::RowSense::GreaterEqual
                                      : bdtt::RowSense::Equal;
    lp.addRow(sense, rhs, std::move(coeffs));
  }
  return lp;
}

}  // namespace testsupport
