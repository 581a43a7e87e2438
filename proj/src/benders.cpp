#include "bdtt/benders.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <cstdlib>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bdtt/mip.hpp"

namespace bdtt {

std::string variantName(Variant v) {
  switch (v) {
    case Variant::BD: return "BD";
    case Variant::TCBD: return "TCBD";
    case Variant::TTCBD: return "TTCBD";
    case Variant::TTSCBD: return "TTSCBD";
    case Variant::TRTCBD: return "TRTCBD";
    case Variant::TRTSCBD: return "TRTSCBD";
  }
  return "?";
}

Variant variantFromName(const std::string& name) {
  if (name == "BD") return Variant::BD;
  if (name == "TCBD") return Variant::TCBD;
  if (name == "TTCBD") return Variant::TTCBD;
  if (name == "TTSCBD") return Variant::TTSCBD;
  if (name == "TRTCBD") return Variant::TRTCBD;
  if (name == "TRTSCBD") return Variant::TRTSCBD;
  throw std::invalid_argument("unknown variant: " + name);
}

double BendersCut::rhsAt(const std::vector<double>& zFree,
                         const std::vector<double>& kappaFree) const {
  double v = constant;
  for (size_t k = 0; k < xi.size(); ++k) v += xi[k] * zFree[k];
  for (size_t k = 0; k < chi.size(); ++k) v += chi[k] * kappaFree[k];
  return v;
}

std::string RunStats::exportTrajectoryCsv() const {
  std::ostringstream out;
  out << "seconds,lowerBound,upperBound\n";
  char buf[128];
  for (const auto& e : trajectory) {
    snprintf(buf, sizeof(buf), "%.3f,%.9g,%.9g\n", e.seconds, e.lowerBound,
             e.upperBound);
    out << buf;
  }
  return out.str();
}

BendersCut separateOptimalityCut(const SubproblemLP& sp, const LPSolution& sol,
                                 const std::vector<double>& zStar,
                                 const std::vector<double>& kappaStar) {
  if (sol.status != LPStatus::Optimal)
    throw std::logic_error("separateOptimalityCut: subproblem not optimal");
  if (sp.slacked)
    throw std::logic_error("separateOptimalityCut: slacked subproblem given");
  BendersCut cut;
  cut.kind = BendersCut::Kind::Optimality;
  cut.xi.resize(sp.pinRowZ.size());
  cut.chi.resize(sp.pinRowKappa.size());
  for (size_t k = 0; k < sp.pinRowZ.size(); ++k)
    cut.xi[k] = sol.dual[sp.pinRowZ[k]];
  for (size_t k = 0; k < sp.pinRowKappa.size(); ++k)
    cut.chi[k] = sol.dual[sp.pinRowKappa[k]];
  double omega = sol.objective;
  cut.constant = omega;
  for (size_t k = 0; k < cut.xi.size(); ++k) cut.constant -= cut.xi[k] * zStar[k];
  for (size_t k = 0; k < cut.chi.size(); ++k)
    cut.constant -= cut.chi[k] * kappaStar[k];
  cut.genZ = zStar;
  cut.genKappa = kappaStar;
  return cut;
}

BendersCut separateFeasibilityCut(const SubproblemLP& slackedSp,
                                  const LPSolution& sol,
                                  const std::vector<double>& zStar,
                                  const std::vector<double>& kappaStar) {
  if (sol.status != LPStatus::Optimal)
    throw std::logic_error("separateFeasibilityCut: slacked SP not optimal");
  if (!slackedSp.slacked)
    throw std::logic_error("separateFeasibilityCut: need the slacked SP");
  if (sol.objective <= tol::feasibility)
    throw std::logic_error(
        "separateFeasibilityCut: point was feasible (slack optimum ~ 0)");
  BendersCut cut;
  cut.kind = BendersCut::Kind::Feasibility;
  cut.xi.resize(slackedSp.pinRowZ.size());
  cut.chi.resize(slackedSp.pinRowKappa.size());
  for (size_t k = 0; k < slackedSp.pinRowZ.size(); ++k)
    cut.xi[k] = sol.dual[slackedSp.pinRowZ[k]];
  for (size_t k = 0; k < slackedSp.pinRowKappa.size(); ++k)
    cut.chi[k] = sol.dual[slackedSp.pinRowKappa[k]];
  cut.constant = sol.objective;
  for (size_t k = 0; k < cut.xi.size(); ++k) cut.constant -= cut.xi[k] * zStar[k];
  for (size_t k = 0; k < cut.chi.size(); ++k)
    cut.constant -= cut.chi[k] * kappaStar[k];
  cut.genZ = zStar;
  cut.genKappa = kappaStar;
  return cut;
}

StrengthenedCutResult separateStrengthenedCut(
    const Instance& inst, const ObjectiveWeights& weights,
    const BigMProfile& bigM, const std::vector<double>& zStar,
    const std::vector<double>& kappaStar, const BendersCut& standardCut,
    const SolverConfig& config) {
  StrengthenedCutResult res;
  BuiltModel lagr = buildStrengthenedSubproblem(inst, weights, bigM,
                                                standardCut.xi, standardCut.chi);
  MIPOptions opt;
  opt.nodeLimit = config.strengthenedNodeBudget;
  opt.timeLimitSeconds = config.strengthenedTimeBudget;
  Basis crash = crashBasis(lagr.lp, lagr.catalog);
  opt.rootBasis = &crash;
  MIPResult mip = solveMIPReference(lagr.lp, opt);
  if (mip.status != MIPStatus::Optimal || !mip.hasIncumbent) {
    res.cut = standardCut;
    res.fellBack = true;
    return res;
  }
  // Omega at the Lagrangian argmin: subtract the priced terms back out.
  const auto& cat = lagr.catalog;
  double priced = 0.0;
  std::vector<double> zHat(cat.freeZCol.size());
  std::vector<double> kappaHat(cat.kappaCol.size());
  for (size_t k = 0; k < cat.freeZCol.size(); ++k) {
    zHat[k] = mip.values[cat.freeZCol[k]];
    priced += -standardCut.xi[k] * zHat[k];
  }
  for (size_t k = 0; k < cat.kappaCol.size(); ++k) {
    kappaHat[k] = mip.values[cat.kappaCol[k]];
    priced += -standardCut.chi[k] * kappaHat[k];
  }
  double omegaHat = mip.objective - priced;

  BendersCut cut;
  cut.kind = BendersCut::Kind::StrengthenedOptimality;
  cut.xi = standardCut.xi;
  cut.chi = standardCut.chi;
  cut.constant = omegaHat;
  for (size_t k = 0; k < cut.xi.size(); ++k) cut.constant -= cut.xi[k] * zHat[k];
  for (size_t k = 0; k < cut.chi.size(); ++k)
    cut.constant -= cut.chi[k] * kappaHat[k];
  cut.genZ = zHat;
  cut.genKappa = kappaHat;
  // Dominance guard: at any point the strengthened rhs differs from the
  // standard one by a constant; an inferior MILP incumbent falls back.
  double diff = cut.rhsAt(zStar, kappaStar) - standardCut.rhsAt(zStar, kappaStar);
  if (diff < -1e-6) {
    res.cut = standardCut;
    res.fellBack = true;
    return res;
  }
  res.cut = cut;
  return res;
}

namespace {

struct Incumbent {
  bool valid = false;
  double objective = kInfinity;
  Timetable timetable;
  std::vector<double> kappaFree;
};

struct TreeNode {
  double bound;
  int64_t id;
  std::vector<std::pair<int, int>> fixings;  // (z column, 0/1)
  Basis basis;
};

struct NodeOrder {
  bool operator()(const std::shared_ptr<TreeNode>& a,
                  const std::shared_ptr<TreeNode>& b) const {
    if (a->bound != b->bound) return a->bound > b->bound;
    return a->id > b->id;
  }
};

class Engine {
 public:
  Engine(const Instance& inst, const ObjectiveWeights& weights,
         const SolverConfig& config)
      : inst_(inst), w_(weights), cfg_(config) {
    start_ = std::chrono::steady_clock::now();
    verbose_ = std::getenv("BDTT_VERBOSE") != nullptr;
  }

  BDTTResult run() {
    BDTTResult result;
    auto violations = validateInstance(inst_);
    if (!violations.empty()) {
      result.status = SolveStatus::Infeasible;
      return result;
    }
    bigM_ = cfg_.tightenedBigM ? tightenBigM(inst_) : looseBigM(inst_);
    rmp_ = buildRMP(inst_, w_, bigM_, cfg_.useValidInequalities);
    sp_ = buildSP(inst_, w_, bigM_, false);
    spSlack_ = buildSP(inst_, w_, bigM_, true);
    rmpBasisCache_ = crashBasis(rmp_.lp, rmp_.catalog);
    haveRmpBasis_ = true;
    spBasisCache_ = crashBasis(sp_.lp, sp_.catalog);
    haveSpBasis_ = true;
    spSlackBasisCache_ = crashBasis(spSlack_.lp, spSlack_.catalog);
    haveSpSlackBasis_ = true;

    // Root phase: stabilized cut loop (with restarts for the TRT variants).
    int rootLoops = cfg_.hasCutLoop() ? 1 + (cfg_.hasRestart() ? cfg_.restarts : 0)
                                      : 0;
    for (int round = 0; round < rootLoops && !timeUp(); ++round) runRootLoop();

    LPSolution rootSol = solveLP(rmp_.lp, rmpBasis());
    rememberBasis(rootSol);
    if (rootSol.status == LPStatus::Infeasible) {
      result.status = SolveStatus::Infeasible;
      finalizeStats(result);
      return result;
    }
    stats_.rootLowerBound = rootSol.objective;
    lowerBound_ = rootSol.objective;
    // Root probe keeps trivial instances at a single node for all variants.
    roundingProbe(rootSol);
    stats_.rootUpperBound = incumbent_.valid ? incumbent_.objective : kInfinity;
    stats_.rootGapPercent = gapPercent(lowerBound_, stats_.rootUpperBound);
    recordBounds();

    branchAndCut(rootSol);

    // Final integral re-solve on the incumbent timetable.
    if (!incumbent_.valid) {
      result.status =
          timeUp() ? SolveStatus::TimeLimit : SolveStatus::Infeasible;
      finalizeStats(result);
      return result;
    }
    stats_.relaxedLowerBound = lowerBound_;
    stats_.relaxedUpperBound = incumbent_.objective;
    stats_.relaxedGapPercent = gapPercent(lowerBound_, incumbent_.objective);

    BuildOptions finalOpt;
    finalOpt.integerFlags = true;
    finalOpt.fixedTimetable = incumbent_.timetable;
    BuiltModel finalModel = buildMonolithicILP(inst_, w_, bigM_, finalOpt);
    MIPOptions mipOpt;
    mipOpt.gapTolerance = cfg_.gapPercent / 100.0;
    mipOpt.timeLimitSeconds =
        std::max(5.0, cfg_.timeLimitSeconds - elapsed());
    Basis finalCrash = crashBasis(finalModel.lp, finalModel.catalog);
    mipOpt.rootBasis = &finalCrash;
    MIPResult finalMip = solveMIPReference(finalModel.lp, mipOpt);
    if (!finalMip.hasIncumbent) {
      // Should not happen (the relaxed point certifies feasibility); report
      // honestly if it ever does.
      result.status = SolveStatus::TimeLimit;
      finalizeStats(result);
      return result;
    }
    result.objective = finalMip.objective;
    stats_.finalObjective = finalMip.objective;
    stats_.finalBound = std::min(lowerBound_, finalMip.objective);
    stats_.finalGapPercent = gapPercent(stats_.finalBound, finalMip.objective);
    Timetable tt = timetableFromSolution(finalModel.catalog, finalMip.values);
    ShiftPlan shift =
        shiftPlanFromSolution(inst_, finalModel.catalog, finalMip.values);
    FlowControlPlan flow =
        flowPlanFromSolution(inst_, finalModel.catalog, finalMip.values);
    result.bundle = derivePassengerDynamics(inst_, tt, shift, flow);
    result.status = hitTimeLimit_ ? SolveStatus::TimeLimit : SolveStatus::Optimal;
    result.cuts = cuts_;
    finalizeStats(result);
    return result;
  }

 private:
  const Instance& inst_;
  ObjectiveWeights w_;
  SolverConfig cfg_;
  BigMProfile bigM_;
  BuiltModel rmp_;
  SubproblemLP sp_, spSlack_;
  RunStats stats_;
  std::vector<BendersCut> cuts_;
  Incumbent incumbent_;
  double lowerBound_ = -kInfinity;
  bool verbose_ = false;
  bool hitTimeLimit_ = false;
  std::chrono::steady_clock::time_point start_;
  Basis rmpBasisCache_, spBasisCache_, spSlackBasisCache_;
  bool haveRmpBasis_ = false, haveSpBasis_ = false, haveSpSlackBasis_ = false;
  std::set<std::vector<int>> probedTimetables_;

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }
  bool timeUp() {
    if (elapsed() > cfg_.timeLimitSeconds) hitTimeLimit_ = true;
    return hitTimeLimit_;
  }
  const Basis* rmpBasis() const {
    return haveRmpBasis_ ? &rmpBasisCache_ : nullptr;
  }
  void rememberBasis(const LPSolution& sol) {
    rmpBasisCache_ = sol.basis;
    haveRmpBasis_ = true;
  }

  double gapPercent(double lb, double ub) const {
    if (!std::isfinite(ub)) return std::numeric_limits<double>::infinity();
    if (ub <= lb + 1e-9 * (1.0 + std::abs(ub))) return 0.0;
    if (std::abs(lb) <= 1e-12) return std::numeric_limits<double>::infinity();
    return (ub - lb) / std::abs(lb) * 100.0;
  }

  void recordBounds() {
    double ub = incumbent_.valid ? incumbent_.objective : kInfinity;
    double lb = lowerBound_;
    if (!stats_.trajectory.empty()) {
      lb = std::max(lb, stats_.trajectory.back().lowerBound);
      ub = std::min(ub, stats_.trajectory.back().upperBound);
    }
    stats_.trajectory.push_back({elapsed(), lb, ub});
  }

  std::vector<double> zValuesOf(const LPSolution& sol) const {
    std::vector<double> z(rmp_.catalog.freeZCol.size());
    for (size_t k = 0; k < z.size(); ++k)
      z[k] = sol.primal[rmp_.catalog.freeZCol[k]];
    return z;
  }
  std::vector<double> kappaValuesOf(const LPSolution& sol) const {
    std::vector<double> k(rmp_.catalog.kappaCol.size());
    for (size_t j = 0; j < k.size(); ++j)
      k[j] = sol.primal[rmp_.catalog.kappaCol[j]];
    return k;
  }

  bool duplicateCut(const BendersCut& cut) const {
    for (const auto& c : cuts_) {
      if (c.kind != cut.kind) continue;
      if (std::abs(c.constant - cut.constant) > tol::cutDuplicate) continue;
      bool same = true;
      for (size_t k = 0; k < cut.xi.size() && same; ++k)
        if (std::abs(c.xi[k] - cut.xi[k]) > tol::cutDuplicate) same = false;
      for (size_t k = 0; k < cut.chi.size() && same; ++k)
        if (std::abs(c.chi[k] - cut.chi[k]) > tol::cutDuplicate) same = false;
      if (same) return true;
    }
    return false;
  }

  // Returns false when the cut was a duplicate.
  bool addCutToRMP(const BendersCut& cut, int64_t node) {
    if (duplicateCut(cut)) return false;
    SparseVec coeffs;
    if (cut.kind != BendersCut::Kind::Feasibility)
      coeffs.push_back({rmp_.catalog.thetaSP, 1.0});
    for (size_t k = 0; k < cut.xi.size(); ++k) {
      if (std::abs(cut.xi[k]) > 1e-12)
        coeffs.push_back({rmp_.catalog.freeZCol[k], -cut.xi[k]});
    }
    for (size_t k = 0; k < cut.chi.size(); ++k) {
      if (std::abs(cut.chi[k]) > 1e-12)
        coeffs.push_back({rmp_.catalog.kappaCol[k], -cut.chi[k]});
    }
    rmp_.lp.addRow(RowSense::GreaterEqual, cut.constant, std::move(coeffs),
                   "cut_" + std::to_string(cuts_.size()));
    BendersCut stored = cut;
    stored.originNode = node;
    cuts_.push_back(std::move(stored));
    switch (cut.kind) {
      case BendersCut::Kind::Optimality: ++stats_.optimalityCuts; break;
      case BendersCut::Kind::Feasibility: ++stats_.feasibilityCuts; break;
      case BendersCut::Kind::StrengthenedOptimality:
        ++stats_.optimalityCuts;
        ++stats_.strengthenedCuts;
        break;
    }
    return true;
  }

  // Solve the SP at a point; returns (feasible, omega, cut) with the cut
  // chosen per the variant.
  struct SeparationOutcome {
    bool feasible = false;
    double omega = 0.0;
    BendersCut cut;
    bool produced = false;
  };

  SeparationOutcome separateAt(const std::vector<double>& zPoint,
                               const std::vector<double>& kappaPoint,
                               int64_t node, bool allowStrengthened) {
    SeparationOutcome out;
    sp_.setPoint(zPoint, kappaPoint);
    LPSolution sol = solveLP(sp_.lp, haveSpBasis_ ? &spBasisCache_ : nullptr);
    if (sol.status == LPStatus::Optimal) {
      spBasisCache_ = sol.basis;
      haveSpBasis_ = true;
      out.feasible = true;
      out.omega = sol.objective;
      BendersCut cut = separateOptimalityCut(sp_, sol, zPoint, kappaPoint);
      if (allowStrengthened && cfg_.hasStrengthenedCuts()) {
        StrengthenedCutResult sc = separateStrengthenedCut(
            inst_, w_, bigM_, zPoint, kappaPoint, cut, cfg_);
        if (sc.fellBack) ++stats_.strengthenedFallbacks;
        cut = sc.cut;
      }
      out.cut = std::move(cut);
      out.produced = true;
      return out;
    }
    // Infeasible: use the slacked SP.
    spSlack_.setPoint(zPoint, kappaPoint);
    LPSolution slackSol =
        solveLP(spSlack_.lp, haveSpSlackBasis_ ? &spSlackBasisCache_ : nullptr);
    if (slackSol.status != LPStatus::Optimal)
      throw std::runtime_error("slacked subproblem failed to solve");
    spSlackBasisCache_ = slackSol.basis;
    haveSpSlackBasis_ = true;
    if (slackSol.objective <= tol::feasibility) {
      // Numerical edge: the point is effectively feasible; treat omega via a
      // fresh plain solve without a warm start.
      LPSolution retry = solveLP(sp_.lp);
      if (retry.status == LPStatus::Optimal) {
        spBasisCache_ = retry.basis;
        out.feasible = true;
        out.omega = retry.objective;
        out.cut = separateOptimalityCut(sp_, retry, zPoint, kappaPoint);
        out.produced = true;
        return out;
      }
      throw std::runtime_error("subproblem feasibility is numerically unstable");
    }
    out.feasible = false;
    out.omega = slackSol.objective;
    out.cut = separateFeasibilityCut(spSlack_, slackSol, zPoint, kappaPoint);
    out.produced = true;
    return out;
  }

  void runRootLoop() {
    // Stabilizing point maximizing sum(z) + sum(kappa): sum(z) peaks at the
    // latest departure envelope (the monotone chain allows it), and
    // conservation fixes sum(kappa) at total demand, so the diagonal shift
    // attains the maximum. Both are available in closed form.
    const auto& cat = rmp_.catalog;
    std::vector<double> zTilde(cat.freeZCol.size());
    for (size_t k = 0; k < zTilde.size(); ++k) {
      auto [i, t] = cat.freeZ[k];
      zTilde[k] = t < cat.depHi[i] ? 1.0 : 0.0;
    }
    ShiftPlan diag = ShiftPlan::diagonal(inst_);
    std::vector<double> kTilde(cat.kappaCol.size());
    for (size_t k = 0; k < kTilde.size(); ++k) {
      const auto& kv = cat.kappaVars[k];
      kTilde[k] = static_cast<double>(diag.at(kv.pair, kv.arrival, kv.origin));
    }

    double lambda = cfg_.stabilizationLambda;
    const double alpha = cfg_.stabilizationAlpha;
    double prevBound = -kInfinity;
    int stall = 0;
    int separations = 0;
    while (separations < cfg_.tailingOffRoot && !timeUp()) {
      LPSolution sol = solveLP(rmp_.lp, rmpBasis());
      if (sol.status != LPStatus::Optimal) return;
      rememberBasis(sol);
      double bound = sol.objective;
      lowerBound_ = std::max(lowerBound_, bound);
      recordBounds();
      bool improved = bound > prevBound + 1e-6 * (1.0 + std::abs(prevBound));
      if (separations > 0 && !improved) {
        ++stall;
        if (stall >= 5) {
          if (lambda < 1.0) {
            lambda = 1.0;  // reset and continue the loop
            stall = 0;
          } else {
            break;  // stalled at lambda = 1
          }
        }
      } else {
        stall = 0;
      }
      prevBound = std::max(prevBound, bound);

      std::vector<double> zStar = zValuesOf(sol);
      std::vector<double> kStar = kappaValuesOf(sol);
      for (size_t k = 0; k < zTilde.size(); ++k)
        zTilde[k] = alpha * zTilde[k] + (1.0 - alpha) * zStar[k];
      for (size_t k = 0; k < kTilde.size(); ++k)
        kTilde[k] = alpha * kTilde[k] + (1.0 - alpha) * kStar[k];
      std::vector<double> zSep(zTilde.size()), kSep(kTilde.size());
      for (size_t k = 0; k < zSep.size(); ++k)
        zSep[k] = lambda * zStar[k] + (1.0 - lambda) * zTilde[k];
      for (size_t k = 0; k < kSep.size(); ++k)
        kSep[k] = lambda * kStar[k] + (1.0 - lambda) * kTilde[k];

      SeparationOutcome sep = separateAt(zSep, kSep, -1, true);
      ++separations;
      ++stats_.rootSeparations;
      if (sep.produced) addCutToRMP(sep.cut, -1);
      if (verbose_)
        fprintf(stderr, "[%.1fs] root sep %d: bound=%.2f %s lambda=%.2f\n",
                elapsed(), separations, bound,
                sep.feasible ? "opt-cut" : "feas-cut", lambda);
    }
  }

  // Rounds fractional departures to a feasible timetable and evaluates the
  // z-fixed relaxation as an upper-bound probe.
  void roundingProbe(const LPSolution& sol) {
    const auto& cat = rmp_.catalog;
    Timetable tt;
    tt.departureIndex.resize(cat.trains);
    int prev = 0;
    for (int i = 0; i < cat.trains; ++i) {
      double ones = 0.0;
      for (int t = 0; t < cat.horizon; ++t) ones += cat.zValue(i, t, sol.primal);
      int d = static_cast<int>(std::llround(ones));
      int lo = std::max(cat.depLo[i],
                        i == 0 ? 1 : prev + inst_.params.headwayMin);
      int hi = std::min(cat.depHi[i],
                        i == 0 ? cat.depHi[i] : prev + inst_.params.headwayMax);
      if (lo > hi) return;  // rounding not repairable
      d = std::clamp(d, lo, hi);
      tt.departureIndex[i] = d;
      prev = d;
    }
    probeTimetable(tt);
  }

  void probeTimetable(const Timetable& tt) {
    if (!probedTimetables_.insert(tt.departureIndex).second) return;
    BuildOptions opt;
    opt.fixedTimetable = tt;
    BuiltModel fixed = buildMonolithicILP(inst_, w_, bigM_, opt);
    Basis crash = crashBasis(fixed.lp, fixed.catalog);
    LPSolution sol = solveLP(fixed.lp, &crash);
    if (sol.status != LPStatus::Optimal) return;
    if (!incumbent_.valid || sol.objective < incumbent_.objective - 1e-9) {
      incumbent_.valid = true;
      incumbent_.objective = sol.objective;
      if (verbose_)
        fprintf(stderr, "[%.1fs] probe incumbent %.2f\n", elapsed(),
                sol.objective);
      incumbent_.timetable = tt;
      incumbent_.kappaFree.assign(rmp_.catalog.kappaCol.size(), 0.0);
      for (size_t k = 0; k < fixed.catalog.kappaCol.size(); ++k)
        incumbent_.kappaFree[k] = sol.primal[fixed.catalog.kappaCol[k]];
      recordBounds();
    }
  }

  // Most fractional free z, lowest index on ties; optionally the ten most
  // fractional candidates for strong branching.
  int mostFractional(const LPSolution& sol,
                     std::vector<int>* candidates = nullptr) const {
    const auto& cat = rmp_.catalog;
    int best = -1;
    double bestFrac = tol::integrality;
    std::vector<std::pair<double, int>> ranked;
    for (size_t k = 0; k < cat.freeZCol.size(); ++k) {
      double v = sol.primal[cat.freeZCol[k]];
      double f = std::min(v - std::floor(v), std::ceil(v) - v);
      if (f <= tol::integrality) continue;
      if (candidates) ranked.push_back({f, static_cast<int>(k)});
      if (f > bestFrac + 1e-12) {
        bestFrac = f;
        best = static_cast<int>(k);
      }
    }
    if (candidates) {
      std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      candidates->clear();
      for (size_t k = 0; k < ranked.size() && k < 10; ++k)
        candidates->push_back(ranked[k].second);
    }
    return best;
  }

  // Strong branching over the most fractional candidates (tree search).
  int chooseBranchVariable(const LPSolution& sol,
                           const std::vector<std::pair<int, int>>& fixings) {
    std::vector<int> candidates;
    int fallback = mostFractional(sol, &candidates);
    if (!cfg_.hasTreeSearch() || candidates.size() <= 1) return fallback;
    // Budget the probes by model size so strong branching stays affordable.
    bool large = rmp_.lp.numRows() > 60'000;
    size_t maxCandidates = large ? 3 : 10;
    if (candidates.size() > maxCandidates) candidates.resize(maxCandidates);
    int64_t probePivots = large ? 200 : 500;
    double bestScore = -1.0;
    int best = fallback;
    for (int k : candidates) {
      int col = rmp_.catalog.freeZCol[k];
      double score = 1.0;
      for (int dir = 0; dir <= 1; ++dir) {
        double lo = rmp_.lp.variable(col).lower;
        double hi = rmp_.lp.variable(col).upper;
        rmp_.lp.setBounds(col, dir, dir);
        LPSolveOptions lim;
        lim.maxPivots = probePivots;
        LPSolution probe = solveLP(rmp_.lp, &sol.basis, lim);
        rmp_.lp.setBounds(col, lo, hi);
        double delta;
        if (probe.status == LPStatus::Infeasible) delta = 1e9;
        else if (probe.status == LPStatus::Optimal)
          delta = std::max(probe.objective - sol.objective, 0.0);
        else delta = 0.0;
        score *= std::max(delta, 1e-6);
      }
      if (score > bestScore + 1e-15) {
        bestScore = score;
        best = k;
      }
    }
    (void)fixings;
    return best;
  }

  void branchAndCut(const LPSolution& rootSol) {
    std::priority_queue<std::shared_ptr<TreeNode>,
                        std::vector<std::shared_ptr<TreeNode>>, NodeOrder>
        open;
    auto root = std::make_shared<TreeNode>();
    root->bound = rootSol.objective;
    root->id = 0;
    root->basis = rootSol.basis;
    open.push(root);
    int64_t nextId = 1;

    while (!open.empty() && !timeUp()) {
      auto node = open.top();
      open.pop();
      lowerBound_ = std::max(lowerBound_, std::min(node->bound, upperBound()));
      recordBounds();
      if (verbose_)
        fprintf(stderr, "[%.1fs] node %lld bound=%.2f LB=%.2f UB=%.2f open=%zu\n",
                elapsed(), (long long)node->id, node->bound, lowerBound_,
                upperBound(), open.size());
      if (gapPercent(lowerBound_, upperBound()) <= cfg_.gapPercent + 1e-12)
        return;
      if (incumbent_.valid &&
          node->bound >= incumbent_.objective -
                             1e-9 * (1.0 + std::abs(incumbent_.objective)))
        continue;
      ++stats_.nodeCount;
      processNode(*node, open, nextId);
    }
    if (open.empty() && incumbent_.valid) {
      lowerBound_ = incumbent_.objective;
      recordBounds();
    }
  }

  double upperBound() const {
    return incumbent_.valid ? incumbent_.objective : kInfinity;
  }

  template <typename Queue>
  void processNode(TreeNode& node, Queue& open, int64_t& nextId) {
    // Apply branching fixings.
    std::vector<std::pair<int, std::pair<double, double>>> saved;
    for (const auto& [col, val] : node.fixings) {
      saved.push_back({col, {rmp_.lp.variable(col).lower,
                             rmp_.lp.variable(col).upper}});
      rmp_.lp.setBounds(col, val, val);
    }
    auto restore = [&] {
      for (auto it = saved.rbegin(); it != saved.rend(); ++it)
        rmp_.lp.setBounds(it->first, it->second.first, it->second.second);
    };

    Basis nodeBasis = node.basis;
    int fractionalSeparations = 0;
    int iterationsGuard = 0;
    bool coldRetryUsed = false;
    LPSolution sol;
    while (true) {
      if (++iterationsGuard > 1000) {
        // Kelley stalled numerically; fall back to the exact node value.
        restore();
        exactIntegralFallback(sol);
        return;
      }
      sol = solveLP(rmp_.lp, nodeBasis.empty() ? nullptr : &nodeBasis);
      nodeBasis = sol.basis;
      if (sol.status == LPStatus::Infeasible) {
        restore();
        return;  // fathomed
      }
      if (sol.status != LPStatus::Optimal) {
        restore();
        return;
      }
      if (incumbent_.valid &&
          sol.objective >= incumbent_.objective -
                               1e-9 * (1.0 + std::abs(incumbent_.objective))) {
        restore();
        return;  // fathomed by bound
      }
      int branchVar = mostFractional(sol);
      std::vector<double> zStar = zValuesOf(sol);
      std::vector<double> kStar = kappaValuesOf(sol);

      if (branchVar < 0) {
        // Integral timetable: iterate Benders separation to convergence.
        SeparationOutcome sep = separateAt(zStar, kStar, node.id, true);
        if (!sep.feasible) {
          bool added = sep.produced && addCutToRMP(sep.cut, node.id);
          if (!added) {
            // A duplicate cut the LP claims to satisfy: numerical drift;
            // retry cold once, then settle for the exact probe.
            if (!coldRetryUsed) {
              coldRetryUsed = true;
              nodeBasis = Basis{};
              continue;
            }
            restore();
            exactIntegralFallback(sol);
            return;
          }
          continue;  // re-solve with the feasibility cut
        }
        double thetaStar = sol.primal[rmp_.catalog.thetaSP];
        double candidate = sol.objective - thetaStar + sep.omega;
        if (!incumbent_.valid || candidate < incumbent_.objective - 1e-9) {
          incumbent_.valid = true;
          incumbent_.objective = candidate;
          incumbent_.timetable = timetableFromZ(zStar);
          incumbent_.kappaFree = kStar;
          recordBounds();
        }
        if (thetaStar >= sep.omega - 1e-6 * (1.0 + std::abs(sep.omega))) {
          restore();
          return;  // node solved exactly; fathomed by the fresh incumbent
        }
        bool added = sep.produced && addCutToRMP(sep.cut, node.id);
        if (!added) {
          if (!coldRetryUsed) {
            coldRetryUsed = true;
            nodeBasis = Basis{};
            continue;
          }
          restore();
          exactIntegralFallback(sol);
          return;
        }
        continue;
      }

      // Fractional node: per-variant separation policy.
      bool wantsSeparation =
          cfg_.variant == Variant::BD
              ? fractionalSeparations < 1
              : fractionalSeparations < cfg_.tailingOffNode;
      if (wantsSeparation && !timeUp()) {
        SeparationOutcome sep = separateAt(zStar, kStar, node.id, true);
        ++fractionalSeparations;
        if (sep.produced) {
          double violation;
          if (sep.feasible) {
            double thetaStar = sol.primal[rmp_.catalog.thetaSP];
            violation = sep.cut.rhsAt(zStar, kStar) - thetaStar;
          } else {
            violation = sep.cut.rhsAt(zStar, kStar);
          }
          bool added = addCutToRMP(sep.cut, node.id);
          // BD adds its one cut and branches on the pre-cut solution; the
          // cut-loop variants re-solve while the point stays cut off.
          if (added && cfg_.variant != Variant::BD && violation > 1e-7)
            continue;
        }
      }

      // Heuristic probe (tree-search variants) before branching.
      if (cfg_.hasTreeSearch()) roundingProbe(sol);

      int chosen = cfg_.hasTreeSearch() ? chooseBranchVariable(sol, node.fixings)
                                        : branchVar;
      if (chosen < 0) chosen = branchVar;
      int col = rmp_.catalog.freeZCol[chosen];
      for (int val = 0; val <= 1; ++val) {
        auto child = std::make_shared<TreeNode>();
        child->bound = sol.objective;
        child->id = nextId++;
        child->fixings = node.fixings;
        child->fixings.push_back({col, val});
        child->basis = sol.basis;
        open.push(child);
      }
      restore();
      return;
    }
  }

  Timetable timetableFromZ(const std::vector<double>& zFree) const {
    const auto& cat = rmp_.catalog;
    Timetable tt;
    tt.departureIndex.assign(cat.trains, 0);
    std::vector<double> ones(cat.trains, 0.0);
    for (int i = 0; i < cat.trains; ++i) ones[i] = cat.depLo[i];
    for (size_t k = 0; k < cat.freeZ.size(); ++k)
      ones[cat.freeZ[k].first] += zFree[k];
    for (int i = 0; i < cat.trains; ++i)
      tt.departureIndex[i] = static_cast<int>(std::llround(ones[i]));
    return tt;
  }

  void exactIntegralFallback(const LPSolution& sol) {
    // Evaluate the node's true value by fixing the (integral) timetable.
    if (sol.primal.empty()) return;
    int branchVar = mostFractional(sol);
    if (branchVar >= 0) return;  // only meaningful at integral points
    Timetable tt = timetableFromZ(zValuesOf(sol));
    probeTimetable(tt);
  }

  void finalizeStats(BDTTResult& result) {
    stats_.wallSeconds = elapsed();
    recordBounds();
    result.stats = stats_;
    if (result.cuts.empty()) result.cuts = cuts_;
  }
};

}  // namespace

BDTTResult solveBDTT(const Instance& inst, const ObjectiveWeights& weights,
                     const SolverConfig& config) {
  Engine engine(inst, weights, config);
  return engine.run();
}

}  // namespace bdtt
