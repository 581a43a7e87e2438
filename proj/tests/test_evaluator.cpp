#include <algorithm>
#include <numeric>

#include "bdtt/evaluator.hpp"
#include "bdtt/formulation.hpp"
#include "bdtt/instance.hpp"
#include "bdtt/mip.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace bdtt;
using testsupport::tinyT1;

namespace {

Instance zeroDemand() {
  Instance inst = tinyT1();
  std::fill(inst.demand.free.begin(), inst.demand.free.end(), 0);
  std::fill(inst.demand.reserved.begin(), inst.demand.reserved.end(), 0);
  return inst;
}

// Upstream-heavy fixture: FIFO boarding exhausts capacity at station 1, so
// the uncontrolled simulation starves station 2 below the fairness floor
// while flow control balances the trains.
Instance upstreamHeavy() {
  Instance inst;
  inst.name = "upstream-heavy";
  inst.line.stationCount = 3;
  inst.line.sectionRunTimeSeconds = {60, 60};
  inst.line.dwellTimeSeconds = {60, 60, 60};
  inst.horizon.timestampSeconds = 60;
  inst.horizon.horizonLength = 10;
  inst.horizon.peak.assign(10, 1);
  inst.params.trainCount = 2;
  inst.params.capacity = 10;
  inst.params.headwayMin = 2;
  inst.params.headwayMax = 6;
  inst.params.maxShift = 2;
  inst.params.farePaidFraction = 0.8;
  inst.params.fairness = {0.4};
  inst.params.weightWaiting = 1.0;
  inst.params.weightSubsidy = 5.0;
  inst.fares.resize(3, 3.0);
  inst.demand.resize(3, 10);
  inst.demand.freeAt(0, 2, 0) = 6;
  inst.demand.freeAt(0, 2, 1) = 6;
  inst.demand.freeAt(1, 2, 0) = 6;
  return inst;
}

// Capacity-overload fixture: all shiftable demand lands just before the
// last train, so a fixed-arrival plan overloads while shifting spreads it.
Instance lateSurge() {
  Instance inst;
  inst.name = "late-surge";
  inst.line.stationCount = 3;
  inst.line.sectionRunTimeSeconds = {60, 60};
  inst.line.dwellTimeSeconds = {60, 60, 60};
  inst.horizon.timestampSeconds = 60;
  inst.horizon.horizonLength = 10;
  inst.horizon.peak.assign(10, 1);
  inst.params.trainCount = 2;
  inst.params.capacity = 6;
  inst.params.headwayMin = 2;
  inst.params.headwayMax = 6;
  inst.params.maxShift = 4;
  inst.params.farePaidFraction = 0.8;
  inst.params.fairness = {0.0};
  inst.params.weightWaiting = 1.0;
  inst.params.weightSubsidy = 5.0;
  inst.fares.resize(3, 3.0);
  inst.demand.resize(3, 10);
  inst.demand.freeAt(0, 2, 7) = 9;  // must split across both trains
  inst.demand.freeAt(0, 1, 1) = 1;
  return inst;
}

}  // namespace

TEST_CASE("derivePassengerDynamics: zero demand gives an all-zero bundle") {
  Instance inst = zeroDemand();
  Timetable tt{{3, 6}};
  FlowControlPlan flow;
  flow.resize(2, 3);
  SolutionBundle b =
      derivePassengerDynamics(inst, tt, ShiftPlan::diagonal(inst), flow);
  CHECK(std::accumulate(b.wait.begin(), b.wait.end(), int64_t{0}) == 0);
  CHECK(std::accumulate(b.onboard.begin(), b.onboard.end(), int64_t{0}) == 0);
  CHECK(std::accumulate(b.waitingCumFree.begin(), b.waitingCumFree.end(),
                        int64_t{0}) == 0);
  EvaluationReport rep = evaluateObjective(inst, b, weightsOf(inst));
  CHECK(rep.objective == doctest::Approx(0.0));
  CHECK(rep.maxStationWaiting == 0);
}

TEST_CASE("derivePassengerDynamics: hand-computed T1 ledger") {
  Instance inst = tinyT1();
  Timetable tt{{3, 6}};
  ShiftPlan diag = ShiftPlan::diagonal(inst);
  FlowControlPlan flow;
  flow.resize(2, 3);
  int p01 = inst.demand.pairIndex(0, 1);
  int p02 = inst.demand.pairIndex(0, 2);
  int p12 = inst.demand.pairIndex(1, 2);
  flow.allowance[0 * 3 + p01] = 1;
  flow.allowance[0 * 3 + p02] = 1;
  flow.allowance[0 * 3 + p12] = 1;
  flow.allowance[1 * 3 + p01] = 2;
  flow.allowance[1 * 3 + p02] = 2;
  flow.allowance[1 * 3 + p12] = 3;

  SolutionBundle b = derivePassengerDynamics(inst, tt, diag, flow);
  CHECK(b.wait[0 * 3 + p01] == 2);
  CHECK(b.wait[0 * 3 + p02] == 1);
  CHECK(b.wait[0 * 3 + p12] == 2);
  CHECK(b.detain[0 * 3 + p01] == 1);
  CHECK(b.detain[0 * 3 + p02] == 0);
  CHECK(b.detain[0 * 3 + p12] == 1);
  CHECK(b.wait[1 * 3 + p01] == 2);
  CHECK(b.wait[1 * 3 + p02] == 2);
  CHECK(b.wait[1 * 3 + p12] == 3);
  CHECK(b.detain[1 * 3 + p01] == 0);

  EvaluationReport rep = evaluateObjective(inst, b, weightsOf(inst));
  // Hand ledger: reserved 7, free-by-arrival 17, detention 3 + 3.
  CHECK(rep.waitingTimestamps == doctest::Approx(30.0));
  CHECK(rep.subsidy == doctest::Approx(0.0));
  CHECK(rep.shiftedPercent == doctest::Approx(0.0));
  CHECK(rep.detainedCount == 2);
}

TEST_CASE("derive rejects plans that violate an enabled check") {
  Instance inst = tinyT1();
  Timetable tt{{3, 6}};
  ShiftPlan diag = ShiftPlan::diagonal(inst);
  FlowControlPlan flow;
  flow.resize(2, 3);

  SUBCASE("unserved demand") {
    CHECK_THROWS_AS(derivePassengerDynamics(inst, tt, diag, flow),
                    DynamicsError);
  }
  SUBCASE("boarding above waiting") {
    flow.allowance[0 * 3 + inst.demand.pairIndex(0, 1)] = 99;
    CHECK_THROWS_AS(derivePassengerDynamics(inst, tt, diag, flow),
                    DynamicsError);
  }
  SUBCASE("conservation break surfaces the cell") {
    ShiftPlan broken = diag;
    broken.set(inst.demand.pairIndex(0, 1), 2, 2, 1);
    try {
      derivePassengerDynamics(inst, tt, broken, flow);
      FAIL("expected DynamicsError");
    } catch (const DynamicsError& e) {
      REQUIRE(!e.violations.empty());
      CHECK(e.violations.front().field == "shift");
    }
  }
}

TEST_CASE("solver output re-derivation is exact") {
  Instance inst = tinyT1();
  BigMProfile bigM = tightenBigM(inst);
  BuildOptions opt;
  opt.integerFlags = true;
  BuiltModel model = buildMonolithicILP(inst, weightsOf(inst), bigM, opt);
  MIPResult mip = solveMIPReference(model.lp);
  REQUIRE(mip.status == MIPStatus::Optimal);
  const auto& cat = model.catalog;
  Timetable tt = timetableFromSolution(cat, mip.values);
  ShiftPlan shift = shiftPlanFromSolution(inst, cat, mip.values);
  FlowControlPlan flow = flowPlanFromSolution(inst, cat, mip.values);
  SolutionBundle b = derivePassengerDynamics(inst, tt, shift, flow);

  for (int i = 0; i < cat.trains; ++i) {
    for (int p = 0; p < cat.pairs; ++p) {
      int wc = cat.wait[static_cast<size_t>(i) * cat.pairs + p];
      if (wc >= 0)
        CHECK(mip.values[wc] ==
              doctest::Approx(static_cast<double>(
                                  b.wait[static_cast<size_t>(i) * cat.pairs + p]))
                  .epsilon(1e-6));
      int rc = cat.detain[static_cast<size_t>(i) * cat.pairs + p];
      if (rc >= 0)
        CHECK(mip.values[rc] ==
              doctest::Approx(
                  static_cast<double>(
                      b.detain[static_cast<size_t>(i) * cat.pairs + p]))
                  .epsilon(1e-6));
    }
    for (int u = 0; u + 1 < cat.stations; ++u) {
      int oc = cat.onboard[static_cast<size_t>(i) * cat.stations + u];
      if (oc >= 0)
        CHECK(mip.values[oc] ==
              doctest::Approx(
                  static_cast<double>(
                      b.onboard[static_cast<size_t>(i) * cat.stations + u]))
                  .epsilon(1e-6));
    }
  }
}

TEST_CASE("conservation invariants on solved generated instances") {
  for (uint64_t seed : {3u, 8u}) {
    GeneratorSettings g;
    g.stationCount = 4;
    g.horizonLength = 12;
    g.trainCount = 3;
    g.peakStart = 4;
    g.peakEnd = 10;
    g.totalDemand = 60;
    g.bookingRatio = 0.4;
    g.maxShift = 2;
    g.capacity = 30;
    g.headwayMin = 2;
    g.headwayMax = 5;
    g.seed = seed;
    Instance inst = generateSyntheticInstance(g);
    BigMProfile bigM = tightenBigM(inst);
    BuildOptions opt;
    opt.integerFlags = true;
    BuiltModel model = buildMonolithicILP(inst, weightsOf(inst), bigM, opt);
    MIPResult mip = solveMIPReference(model.lp);
    if (mip.status != MIPStatus::Optimal) continue;
    Timetable tt = timetableFromSolution(model.catalog, mip.values);
    ShiftPlan shift = shiftPlanFromSolution(inst, model.catalog, mip.values);
    FlowControlPlan flow =
        flowPlanFromSolution(inst, model.catalog, mip.values);
    SolutionBundle b = derivePassengerDynamics(inst, tt, shift, flow);

    int64_t boarded = 0, alighted = 0;
    for (int64_t v : b.alight) alighted += v;
    for (int i = 0; i < inst.params.trainCount; ++i)
      for (int p = 0; p < model.catalog.pairs; ++p) boarded += flow.at(i, p);
    CHECK(boarded == alighted);
    for (int u = 1; u < inst.line.stationCount; ++u) {
      int64_t toU = 0;
      for (int m = 0; m < u; ++m)
        for (int t = 0; t < inst.horizon.horizonLength; ++t)
          toU += inst.demand.freeAt(m, u, t);
      int64_t al = 0;
      for (int i = 0; i < inst.params.trainCount; ++i)
        for (int m = 0; m < u; ++m)
          al += flow.at(i, inst.demand.pairIndex(m, u));
      CHECK(toU == al);
    }
    for (int64_t r : b.detain) CHECK(r >= 0);
    CHECK(b.overloadCount == 0);
    CHECK(b.maxInVehicleLoad <= inst.params.capacity);
  }
}

TEST_CASE("solvePFC: undersaturated fixed timetable, no subsidy") {
  Instance inst = tinyT1();
  Timetable tt{{4, 7}};
  PFCResult res = solvePFC(inst, tt, weightsOf(inst), false);
  REQUIRE(res.feasible);
  CHECK(res.report.subsidy == doctest::Approx(0.0));
  CHECK(res.report.shiftedPercent == doctest::Approx(0.0));
  CHECK(res.report.overloadCount == 0);
}

TEST_CASE("solvePFC: capacity relaxation reports overloads") {
  Instance inst = lateSurge();
  Timetable tt{{4, 9}};
  PFCResult strict = solvePFC(inst, tt, weightsOf(inst), false);
  CHECK(!strict.feasible);
  PFCResult relaxed = solvePFC(inst, tt, weightsOf(inst), true);
  REQUIRE(relaxed.feasible);
  CHECK(relaxed.report.overloadCount > 0);
  CHECK(relaxed.report.maxInVehicleLoad > inst.params.capacity);
}

TEST_CASE("simulateSPE: zero demand is feasible and zero") {
  Instance inst = zeroDemand();
  SPEResult res = simulateSPE(inst, Timetable{{3, 6}}, weightsOf(inst));
  CHECK(res.feasible);
  CHECK(res.report.objective == doctest::Approx(0.0));
}

TEST_CASE("simulateSPE: upstream boarding starves the fairness floor") {
  Instance inst = upstreamHeavy();
  Timetable tt{{3, 6}};
  SPEResult spe = simulateSPE(inst, tt, weightsOf(inst));
  CHECK(!spe.feasible);
  CHECK(spe.fairnessViolated);

  PFCResult pfc = solvePFC(inst, tt, weightsOf(inst), false);
  CHECK(pfc.feasible);
}

TEST_CASE("reserved passengers are never detained") {
  Instance inst = tinyT1();
  BigMProfile bigM = tightenBigM(inst);
  BuildOptions opt;
  opt.integerFlags = true;
  BuiltModel model = buildMonolithicILP(inst, weightsOf(inst), bigM, opt);
  MIPResult mip = solveMIPReference(model.lp);
  REQUIRE(mip.status == MIPStatus::Optimal);
  SolutionBundle b = derivePassengerDynamics(
      inst, timetableFromSolution(model.catalog, mip.values),
      shiftPlanFromSolution(inst, model.catalog, mip.values),
      flowPlanFromSolution(inst, model.catalog, mip.values));
  for (int i = 0; i < inst.params.trainCount; ++i) {
    for (int u = 0; u < inst.line.stationCount - 1; ++u) {
      for (int v = u + 1; v < inst.line.stationCount; ++v) {
        int pair = inst.demand.pairIndex(u, v);
        int64_t expected = 0;
        int lo = i == 0 ? 0 : b.timetable.departureIndex[i - 1];
        int hi = b.timetable.departureIndex[i];
        for (int t = lo; t < hi; ++t)
          expected += inst.demand.reservedAt(u, v, t);
        CHECK(b.boardHat[static_cast<size_t>(i) * model.catalog.pairs + pair] ==
              expected);
      }
    }
  }
}

TEST_CASE("report text uses stable keys") {
  EvaluationReport rep;
  rep.objective = 12.5;
  std::string text = reportToText(rep);
  CHECK(text.find("waitingTimestamps=") != std::string::npos);
  CHECK(text.find("objective=12.5") != std::string::npos);
}
