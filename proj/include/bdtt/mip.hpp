#pragma once

#include "bdtt/lp.hpp"

namespace bdtt {

enum class MIPStatus : uint8_t { Optimal, Infeasible, TimeLimit, NodeLimit };

struct MIPResult {
  MIPStatus status = MIPStatus::Infeasible;
  std::vector<double> values;  // incumbent (valid unless Infeasible)
  double objective = 0.0;
  double bound = -kInfinity;  // proven lower bound (minimization)
  int64_t nodeCount = 0;
  double elapsedSeconds = 0.0;
  bool hasIncumbent = false;
};

struct MIPOptions {
  double gapTolerance = 0.0;     // relative, 0 = prove optimality
  double timeLimitSeconds = kInfinity;
  int64_t nodeLimit = -1;        // <0 = unlimited
  const Basis* rootBasis = nullptr;  // advanced basis for the root relaxation
};

// Best-bound branch-and-bound over solveLP relaxations. Branches on the
// most-fractional integer variable, ties broken by lowest index.
MIPResult solveMIPReference(const LinearProgram& lp, const MIPOptions& options = {});

}  // namespace bdtt
