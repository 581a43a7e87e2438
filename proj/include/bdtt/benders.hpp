#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdtt/evaluator.hpp"
#include "bdtt/formulation.hpp"
#include "bdtt/instance.hpp"
#include "bdtt/lp.hpp"

namespace bdtt {

enum class Variant : uint8_t { BD, TCBD, TTCBD, TTSCBD, TRTCBD, TRTSCBD };

std::string variantName(Variant v);
Variant variantFromName(const std::string& name);

struct SolverConfig {
  Variant variant = Variant::TTCBD;
  double gapPercent = 0.0;       // epsilon_1, percent
  int tailingOffNode = 3;        // upsilon
  int tailingOffRoot = 25;       // upsilon-hat
  int restarts = 2;              // restart variants only
  double stabilizationAlpha = 0.5;
  double stabilizationLambda = 0.2;
  double timeLimitSeconds = 600.0;
  uint64_t seed = 0;
  bool useValidInequalities = true;
  bool tightenedBigM = true;
  int64_t strengthenedNodeBudget = 5000;
  double strengthenedTimeBudget = 2.0;

  bool hasCutLoop() const { return variant != Variant::BD; }
  bool hasTreeSearch() const {
    return variant == Variant::TTCBD || variant == Variant::TTSCBD ||
           variant == Variant::TRTCBD || variant == Variant::TRTSCBD;
  }
  bool hasStrengthenedCuts() const {
    return variant == Variant::TTSCBD || variant == Variant::TRTSCBD;
  }
  bool hasRestart() const {
    return variant == Variant::TRTCBD || variant == Variant::TRTSCBD;
  }
};

struct BendersCut {
  enum class Kind : uint8_t { Optimality, Feasibility, StrengthenedOptimality };
  Kind kind = Kind::Optimality;
  double constant = 0.0;
  std::vector<double> xi;   // dense over catalog.freeZ
  std::vector<double> chi;  // dense over catalog.kappaVars
  std::vector<double> genZ, genKappa;
  int64_t originNode = -1;

  // theta_SP >= constant + xi'z + chi'kappa  (optimality / strengthened)
  //        0 >= constant + xi'z + chi'kappa  (feasibility)
  double rhsAt(const std::vector<double>& zFree,
               const std::vector<double>& kappaFree) const;
};

struct BoundsEvent {
  double seconds = 0.0;
  double lowerBound = 0.0;
  double upperBound = 0.0;
};

struct RunStats {
  std::vector<BoundsEvent> trajectory;
  int64_t nodeCount = 0;
  int optimalityCuts = 0;     // c1
  int feasibilityCuts = 0;    // c2
  int strengthenedCuts = 0;
  int strengthenedFallbacks = 0;
  int rootSeparations = 0;
  double rootLowerBound = 0.0;
  double rootUpperBound = 0.0;
  double rootGapPercent = 0.0;
  double relaxedLowerBound = 0.0;
  double relaxedUpperBound = 0.0;
  double relaxedGapPercent = 0.0;
  double finalObjective = 0.0;
  double finalBound = 0.0;
  double finalGapPercent = 0.0;
  double wallSeconds = 0.0;
  std::string exportTrajectoryCsv() const;
};

enum class SolveStatus : uint8_t { Optimal, Infeasible, TimeLimit };

struct BDTTResult {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;  // from the final integral re-solve
  SolutionBundle bundle;
  RunStats stats;
  std::vector<BendersCut> cuts;  // every cut generated during the run
};

BDTTResult solveBDTT(const Instance& inst, const ObjectiveWeights& weights,
                     const SolverConfig& config);

// --- separation primitives (used by the engine; exposed for tests) ---

// Optimality cut from a solved subproblem at (z*, kappa*): duals of the
// variable-fixing rows give xi and chi; the cut is tight at the generating
// point. Throws std::logic_error when the SP is not optimal.
BendersCut separateOptimalityCut(const SubproblemLP& sp, const LPSolution& sol,
                                 const std::vector<double>& zStar,
                                 const std::vector<double>& kappaStar);

// Feasibility cut from the slacked subproblem; its optimum must be > 0
// (otherwise the point was feasible and this call is a caller bug).
BendersCut separateFeasibilityCut(const SubproblemLP& slackedSp,
                                  const LPSolution& sol,
                                  const std::vector<double>& zStar,
                                  const std::vector<double>& kappaStar);

struct StrengthenedCutResult {
  BendersCut cut;
  bool fellBack = false;  // budget exhausted, standard cut returned
};

// Strengthened optimality cut via the Lagrangian subproblem (kappa integer,
// z in [0,1]); falls back to the standard cut when the MILP budget runs out.
StrengthenedCutResult separateStrengthenedCut(
    const Instance& inst, const ObjectiveWeights& weights,
    const BigMProfile& bigM, const std::vector<double>& zStar,
    const std::vector<double>& kappaStar, const BendersCut& standardCut,
    const SolverConfig& config);

// Root cut loop with in/out stabilization. Adds cuts statically to the RMP;
// returns the number of separations performed.
struct RootLoopResult {
  int separations = 0;
  double boundBefore = 0.0;
  double boundAfter = 0.0;
};

class BendersEngine;  // internal

}  // namespace bdtt
