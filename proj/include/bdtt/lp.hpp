#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace bdtt {

// Centralized numeric tolerances used across the solver stack.
namespace tol {
inline constexpr double feasibility = 1e-7;   // primal feasibility
inline constexpr double reducedCost = 1e-9;   // dual optimality threshold
inline constexpr double integrality = 1e-6;   // MIP integrality
inline constexpr double dualityGap = 1e-6;    // LP strong-duality check
inline constexpr double cutDuplicate = 1e-9;  // coefficient-identical cuts
}  // namespace tol

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowSense : uint8_t { LessEqual, Equal, GreaterEqual };

enum class LPStatus : uint8_t { Optimal, Infeasible, Unbounded, IterationLimit };

// One sparse term list; column indices must be unique per row.
using SparseVec = std::vector<std::pair<int32_t, double>>;

// Sparse LP in row form. Frozen once handed to the solver; solves never
// mutate it.
class LinearProgram {
 public:
  struct Variable {
    double lower = 0.0;
    double upper = kInfinity;
    double objective = 0.0;
    bool integral = false;
    std::string name;
  };
  struct Row {
    SparseVec coeffs;
    RowSense sense = RowSense::LessEqual;
    double rhs = 0.0;
    std::string name;
  };

  int addVariable(double lower, double upper, double objective,
                  bool integral = false, std::string name = {});
  int addRow(RowSense sense, double rhs, SparseVec coeffs,
             std::string name = {});

  int numVariables() const { return static_cast<int>(vars_.size()); }
  int numRows() const { return static_cast<int>(rows_.size()); }
  const Variable& variable(int j) const { return vars_[j]; }
  Variable& variable(int j) { return vars_[j]; }
  const Row& row(int i) const { return rows_[i]; }
  Row& row(int i) { return rows_[i]; }

  void setBounds(int j, double lower, double upper);
  void setObjective(int j, double objective);
  void setRhs(int i, double rhs);

  // Structural sanity: indices in range, lower <= upper, no duplicate
  // columns within a row. Returns human-readable problems (empty = ok).
  std::vector<std::string> validate() const;

  // Debug dump in CPLEX-LP text format for cross-checks with other tools.
  std::string dumpCplexLp() const;

 private:
  std::vector<Variable> vars_;
  std::vector<Row> rows_;
};

// Simplex basis snapshot, reusable as a warm start. Structural and logical
// states are kept separate so the basis stays meaningful when rows or
// columns are appended.
struct Basis {
  enum State : uint8_t { AtLower = 0, AtUpper = 1, Basic = 2 };
  std::vector<uint8_t> structState;
  std::vector<uint8_t> logicalState;
  bool empty() const { return structState.empty() && logicalState.empty(); }
};

struct LPSolution {
  LPStatus status = LPStatus::Infeasible;
  std::vector<double> primal;       // per variable
  std::vector<double> dual;         // per row; >=0 on binding >= rows (min)
  std::vector<double> reducedCost;  // per variable
  double objective = 0.0;
  Basis basis;
  int64_t iterations = 0;
  // Strong-duality residual |c'x - dualObjective|; filled on Optimal.
  double dualityResidual = 0.0;
};

struct LPSolveOptions {
  int64_t maxPivots = 1'000'000;
};

// Revised simplex over a sparse LU-factorized basis with eta-file updates.
// Deterministic for identical input + warm start; Bland's rule engages
// after a degeneracy streak. Integrality flags are ignored.
LPSolution solveLP(const LinearProgram& lp, const Basis* warmStart = nullptr,
                   const LPSolveOptions& options = {});

// Infeasibility certificate from the phase-1 slack formulation
// (min 1's over slacked rows). `dual` holds row multipliers y with
// y_i >= 0 on >= rows and y_i <= 0 on <= rows such that
//   value = y'b - max_{l<=x<=u} (y'A)x > 0,
// proving no x within bounds satisfies all rows.
struct FarkasRay {
  std::vector<double> dual;
  double value = 0.0;
};

// Precondition: solveLP(lp) returned Infeasible; throws std::logic_error on
// a feasible LP.
FarkasRay extractFarkasRay(const LinearProgram& lp);

}  // namespace bdtt
