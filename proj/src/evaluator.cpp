#include "bdtt/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace bdtt {

namespace {

std::string cellName(int i, int u, int v) {
  std::ostringstream s;
  s << "(i,u,v)=(" << i + 1 << "," << u + 1 << "," << v + 1 << ")";
  return s.str();
}

}  // namespace

SolutionBundle derivePassengerDynamics(const Instance& inst,
                                       const Timetable& timetable,
                                       const ShiftPlan& shift,
                                       const FlowControlPlan& flow,
                                       const DynamicsChecks& checks) {
  const int S = inst.line.stationCount;
  const int T = inst.horizon.horizonLength;
  const int I = inst.params.trainCount;
  const int P = DemandProfile::pairCount(S);
  std::vector<Violation> violations;

  SolutionBundle b;
  b.timetable = timetable;
  b.shift = shift;
  b.flow = flow;

  if (static_cast<int>(timetable.departureIndex.size()) != I)
    throw DynamicsError("timetable size mismatch");
  b.headways.resize(I);
  for (int i = 0; i < I; ++i) {
    int d = timetable.departureIndex[i];
    int prev = i == 0 ? 0 : timetable.departureIndex[i - 1];
    b.headways[i] = d - prev;
    if (d < 1 || d > T - 1)
      violations.push_back({"timetable", "departure outside horizon"});
    if (i > 0 && (b.headways[i] < inst.params.headwayMin ||
                  b.headways[i] > inst.params.headwayMax))
      violations.push_back({"timetable", "headway bounds violated"});
    if (i == 0 && b.headways[i] < 1)
      violations.push_back({"timetable", "first departure before timestamp 2"});
  }
  if (!violations.empty())
    throw DynamicsError("invalid timetable", std::move(violations));

  // Headway indicator.
  b.headwayIndicator.assign(static_cast<size_t>(I) * T, 0);
  for (int i = 0; i < I; ++i) {
    int lo = i == 0 ? 0 : timetable.departureIndex[i - 1];
    int hi = timetable.departureIndex[i];
    for (int t = lo; t < hi; ++t)
      b.headwayIndicator[static_cast<size_t>(i) * T + t] = 1;
  }

  // Shift conservation and actual arrivals.
  b.arrivals.assign(static_cast<size_t>(P) * T, 0);
  for (int u = 0; u < S - 1; ++u) {
    for (int v = u + 1; v < S; ++v) {
      int pair = inst.demand.pairIndex(u, v);
      for (int o = 0; o < T; ++o) {
        int64_t demand = inst.demand.freeAt(u, v, o);
        int64_t total = 0;
        for (int a = std::max(0, o - shift.maxShift); a <= o; ++a) {
          int64_t k = shift.at(pair, a, o);
          if (k < 0)
            violations.push_back({"shift", "negative entry at " + cellName(0, u, v)});
          total += k;
          b.arrivals[static_cast<size_t>(pair) * T + a] += k;
          if (a != o && !inst.horizon.isPeak(o) && k != 0)
            violations.push_back(
                {"shift", "off-peak origin shifted at " + cellName(0, u, v)});
        }
        if (total != demand)
          violations.push_back(
              {"shift", "conservation violated at " + cellName(0, u, v) +
                            " t=" + std::to_string(o + 1)});
      }
    }
  }
  if (!violations.empty())
    throw DynamicsError("invalid shift plan", std::move(violations));

  // Reserved boarding and loads.
  b.boardHat.assign(static_cast<size_t>(I) * P, 0);
  b.onboardHat.assign(static_cast<size_t>(I) * S, 0);
  for (int i = 0; i < I; ++i) {
    for (int u = 0; u < S - 1; ++u) {
      for (int v = u + 1; v < S; ++v) {
        int pair = inst.demand.pairIndex(u, v);
        int64_t sum = 0;
        for (int t = 0; t < T; ++t) {
          if (b.headwayIndicator[static_cast<size_t>(i) * T + t])
            sum += inst.demand.reservedAt(u, v, t);
        }
        b.boardHat[static_cast<size_t>(i) * P + pair] = sum;
      }
    }
    for (int u = 0; u < S; ++u) {
      int64_t load = 0;
      for (int m = 0; m <= std::min(u, S - 2); ++m)
        for (int v = u + 1; v < S; ++v)
          load += b.boardHat[static_cast<size_t>(i) * P +
                             inst.demand.pairIndex(m, v)];
      b.onboardHat[static_cast<size_t>(i) * S + u] = load;
    }
  }

  // Waiting / boarding / detention ledgers.
  b.wait.assign(static_cast<size_t>(I) * P, 0);
  b.detain.assign(static_cast<size_t>(I) * P, 0);
  for (int u = 0; u < S - 1; ++u) {
    for (int v = u + 1; v < S; ++v) {
      int pair = inst.demand.pairIndex(u, v);
      int64_t boarded = 0;
      int64_t cumulative = 0;
      int cursor = 0;
      for (int i = 0; i < I; ++i) {
        int dep = timetable.departureIndex[i];
        for (; cursor < dep; ++cursor)
          cumulative += b.arrivals[static_cast<size_t>(pair) * T + cursor];
        int64_t waiting = cumulative - boarded;
        int64_t allowed = flow.at(i, pair);
        b.wait[static_cast<size_t>(i) * P + pair] = waiting;
        if (waiting < 0)
          violations.push_back({"flow", "negative waiting at " + cellName(i, u, v)});
        if (allowed < 0 || allowed > waiting)
          violations.push_back(
              {"flow", "boarding outside [0, waiting] at " + cellName(i, u, v)});
        double fr = inst.params.fairnessAt(i, u, v, S);
        if (static_cast<double>(allowed) <
            fr * static_cast<double>(waiting) - 1e-9) {
          ++b.fairnessViolationCount;
          if (checks.fairness)
            violations.push_back(
                {"fairness", "floor violated at " + cellName(i, u, v)});
        }
        b.detain[static_cast<size_t>(i) * P + pair] = waiting - allowed;
        boarded += allowed;
      }
      int64_t totalDemand = 0;
      for (int t = 0; t < T; ++t) totalDemand += inst.demand.freeAt(u, v, t);
      if (boarded != totalDemand) {
        b.unservedCount += totalDemand - boarded;
        if (checks.fullService)
          violations.push_back(
              {"service", "unserved demand on pair (" + std::to_string(u + 1) +
                              "," + std::to_string(v + 1) + ")"});
      }
    }
  }

  b.onboard.assign(static_cast<size_t>(I) * S, 0);
  b.alight.assign(static_cast<size_t>(I) * S, 0);
  for (int i = 0; i < I; ++i) {
    for (int u = 1; u < S; ++u) {
      int64_t sum = 0;
      for (int m = 0; m < u; ++m)
        sum += flow.at(i, inst.demand.pairIndex(m, u));
      b.alight[static_cast<size_t>(i) * S + u] = sum;
    }
    int64_t load = 0;
    for (int u = 0; u < S; ++u) {
      if (u > 0) load -= b.alight[static_cast<size_t>(i) * S + u];
      if (u < S - 1)
        for (int v = u + 1; v < S; ++v)
          load += flow.at(i, inst.demand.pairIndex(u, v));
      int64_t total =
          (u == S - 1 ? 0 : load) + b.onboardHat[static_cast<size_t>(i) * S + u];
      b.onboard[static_cast<size_t>(i) * S + u] = u == S - 1 ? 0 : load;
      if (u < S - 1) {
        b.maxInVehicleLoad = std::max(b.maxInVehicleLoad, total);
        if (total > inst.params.capacity) {
          ++b.overloadCount;
          if (checks.capacity)
            violations.push_back(
                {"capacity", "overload at train " + std::to_string(i + 1) +
                                 " station " + std::to_string(u + 1)});
        }
      }
      if (load < 0)
        violations.push_back({"flow", "negative onboard load at train " +
                                          std::to_string(i + 1)});
    }
  }

  // Per-timestamp waiting tallies.
  size_t IST = static_cast<size_t>(I) * S * T;
  b.waitingNewReserved.assign(IST, 0);
  b.waitingNewFree.assign(IST, 0);
  b.waitingCumReserved.assign(IST, 0);
  b.waitingCumFree.assign(IST, 0);
  b.detentionTime.assign(IST, 0);
  for (int i = 0; i < I; ++i) {
    for (int u = 0; u < S - 1; ++u) {
      int64_t detainSum = 0;
      for (int v = u + 1; v < S; ++v)
        detainSum += b.detain[static_cast<size_t>(i) * P +
                              inst.demand.pairIndex(u, v)];
      int64_t cumReserved = 0, cumFree = 0;
      for (int t = 0; t < T; ++t) {
        size_t at = (static_cast<size_t>(i) * S + u) * T + t;
        if (!b.headwayIndicator[static_cast<size_t>(i) * T + t]) continue;
        int64_t newReserved = 0, newFree = 0;
        for (int v = u + 1; v < S; ++v) {
          int pair = inst.demand.pairIndex(u, v);
          newReserved += inst.demand.reservedAt(u, v, t);
          newFree += b.arrivals[static_cast<size_t>(pair) * T + t];
        }
        cumReserved += newReserved;
        cumFree += newFree;
        b.waitingNewReserved[at] = newReserved;
        b.waitingNewFree[at] = newFree;
        b.waitingCumReserved[at] = cumReserved;
        b.waitingCumFree[at] = cumFree;
        b.detentionTime[at] = detainSum;
      }
    }
  }

  if (!violations.empty())
    throw DynamicsError("dynamics violations", std::move(violations));
  return b;
}

EvaluationReport evaluateObjective(const Instance& inst,
                                   const SolutionBundle& bundle,
                                   const ObjectiveWeights& weights) {
  const int S = inst.line.stationCount;
  const int T = inst.horizon.horizonLength;
  const int I = inst.params.trainCount;
  const int P = DemandProfile::pairCount(S);
  EvaluationReport r;

  int64_t cumSum = 0, detentionSum = 0;
  for (size_t k = 0; k < bundle.waitingCumReserved.size(); ++k) {
    cumSum += bundle.waitingCumReserved[k] + bundle.waitingCumFree[k];
    detentionSum += bundle.detentionTime[k];
  }
  r.waitingTimestamps = static_cast<double>(cumSum + detentionSum);
  r.waitingMinutes =
      r.waitingTimestamps * inst.horizon.timestampSeconds / 60.0;

  r.subsidy = computeSubsidy(inst, bundle.shift);

  for (int64_t d : bundle.detain) r.detainedCount += d;

  int64_t shifted = 0;
  int64_t totalFree = inst.demand.totalFree();
  for (int u = 0; u < S - 1; ++u) {
    for (int v = u + 1; v < S; ++v) {
      int pair = inst.demand.pairIndex(u, v);
      for (int o = 0; o < T; ++o) {
        for (int a = std::max(0, o - bundle.shift.maxShift); a < o; ++a)
          shifted += bundle.shift.at(pair, a, o);
      }
    }
  }
  r.shiftedPercent =
      totalFree > 0 ? 100.0 * static_cast<double>(shifted) / totalFree : 0.0;

  int64_t freeWaiting = 0;
  for (size_t k = 0; k < bundle.waitingCumFree.size(); ++k)
    freeWaiting += bundle.waitingCumFree[k] + bundle.detentionTime[k];
  r.avgWaitNonReservedMinutes =
      totalFree > 0 ? static_cast<double>(freeWaiting) *
                          inst.horizon.timestampSeconds / 60.0 / totalFree
                    : 0.0;

  for (int i = 0; i < I; ++i) {
    for (int u = 0; u < S - 1; ++u) {
      int64_t w = 0;
      for (int v = u + 1; v < S; ++v)
        w += bundle.wait[static_cast<size_t>(i) * P +
                         inst.demand.pairIndex(u, v)];
      // Reserved passengers waiting for train i at station u.
      int64_t hatW = 0;
      for (int t = 0; t < T; ++t)
        hatW += bundle.waitingNewReserved[(static_cast<size_t>(i) * S + u) * T + t];
      r.maxStationWaiting = std::max(r.maxStationWaiting, w + hatW);
    }
  }
  r.overloadCount = bundle.overloadCount;
  r.maxInVehicleLoad = bundle.maxInVehicleLoad;
  r.objective = weights.waiting * r.waitingTimestamps + weights.subsidy * r.subsidy;
  return r;
}

std::string reportToText(const EvaluationReport& r) {
  std::ostringstream out;
  out << "waitingTimestamps=" << r.waitingTimestamps << "\n";
  out << "waitingMinutes=" << r.waitingMinutes << "\n";
  out << "subsidy=" << r.subsidy << "\n";
  out << "detainedCount=" << r.detainedCount << "\n";
  out << "shiftedPercent=" << r.shiftedPercent << "\n";
  out << "avgWaitNonReservedMinutes=" << r.avgWaitNonReservedMinutes << "\n";
  out << "maxStationWaiting=" << r.maxStationWaiting << "\n";
  out << "overloadCount=" << r.overloadCount << "\n";
  out << "maxInVehicleLoad=" << r.maxInVehicleLoad << "\n";
  out << "objective=" << r.objective << "\n";
  return out.str();
}

Timetable timetableFromSolution(const VariableCatalog& cat,
                                const std::vector<double>& primal) {
  Timetable tt;
  tt.departureIndex.resize(cat.trains);
  for (int i = 0; i < cat.trains; ++i) {
    double ones = 0.0;
    for (int t = 0; t < cat.horizon; ++t) ones += cat.zValue(i, t, primal);
    tt.departureIndex[i] = static_cast<int>(std::llround(ones));
  }
  return tt;
}

ShiftPlan shiftPlanFromSolution(const Instance& inst,
                                const VariableCatalog& cat,
                                const std::vector<double>& primal) {
  ShiftPlan plan;
  plan.resize(inst.line.stationCount, inst.horizon.horizonLength,
              cat.maxShift);
  // Off-peak originals stay diagonal by construction.
  for (int u = 0; u < inst.line.stationCount - 1; ++u) {
    for (int v = u + 1; v < inst.line.stationCount; ++v) {
      int pair = inst.demand.pairIndex(u, v);
      for (int o = 0; o < inst.horizon.horizonLength; ++o) {
        if (!inst.horizon.isPeak(o) || cat.maxShift == 0) {
          int64_t d = inst.demand.freeAt(u, v, o);
          if (d != 0) plan.set(pair, o, o, d);
        }
      }
    }
  }
  for (size_t k = 0; k < cat.kappaVars.size(); ++k) {
    const auto& kv = cat.kappaVars[k];
    int64_t value = std::llround(primal[cat.kappaCol[k]]);
    if (value != 0) plan.set(kv.pair, kv.arrival, kv.origin, value);
  }
  return plan;
}

FlowControlPlan flowPlanFromSolution(const Instance& inst,
                                     const VariableCatalog& cat,
                                     const std::vector<double>& primal) {
  FlowControlPlan plan;
  plan.resize(inst.params.trainCount, inst.line.stationCount);
  for (int i = 0; i < inst.params.trainCount; ++i) {
    for (int p = 0; p < cat.pairs; ++p) {
      int col = cat.board[static_cast<size_t>(i) * cat.pairs + p];
      if (col >= 0)
        plan.allowance[static_cast<size_t>(i) * cat.pairs + p] =
            std::llround(primal[col]);
    }
  }
  return plan;
}

PFCResult solvePFC(const Instance& inst, const Timetable& timetable,
                   const ObjectiveWeights& weights, bool relaxCapacity) {
  PFCResult res;
  BuildOptions options;
  options.integerFlags = true;
  options.fixedTimetable = timetable;
  options.shiftDisabled = true;
  options.relaxCapacity = relaxCapacity;
  BigMProfile bigM = tightenBigM(inst);
  BuiltModel model = buildMonolithicILP(inst, weights, bigM, options);
  MIPOptions mipOpt;
  mipOpt.timeLimitSeconds = 600.0;
  Basis crash = crashBasis(model.lp, model.catalog);
  mipOpt.rootBasis = &crash;
  res.mip = solveMIPReference(model.lp, mipOpt);
  if (res.mip.status != MIPStatus::Optimal || !res.mip.hasIncumbent) {
    res.feasible = false;
    return res;
  }
  res.feasible = true;
  ShiftPlan diag = ShiftPlan::diagonal(inst);
  FlowControlPlan flow =
      flowPlanFromSolution(inst, model.catalog, res.mip.values);
  DynamicsChecks checks;
  checks.capacity = !relaxCapacity;
  res.bundle = derivePassengerDynamics(inst, timetable, diag, flow, checks);
  res.report = evaluateObjective(inst, res.bundle, weights);
  return res;
}

SPEResult simulateSPE(const Instance& inst, const Timetable& timetable,
                      const ObjectiveWeights& weights) {
  SPEResult res;
  const int S = inst.line.stationCount;
  const int T = inst.horizon.horizonLength;
  const int I = inst.params.trainCount;
  const int P = DemandProfile::pairCount(S);

  // FIFO queues per origin: entries (arrival t, destination v, count),
  // destination ascending within a timestamp.
  struct Entry {
    int t, v;
    int64_t count;
  };
  std::vector<std::deque<Entry>> queue(S);
  FlowControlPlan flow;
  flow.resize(I, S);

  int cursor = 0;
  for (int i = 0; i < I; ++i) {
    int dep = timetable.departureIndex[i];
    for (; cursor < dep; ++cursor) {
      for (int u = 0; u < S - 1; ++u) {
        for (int v = u + 1; v < S; ++v) {
          int64_t d = inst.demand.freeAt(u, v, cursor);
          if (d > 0) queue[u].push_back({cursor, v, d});
        }
      }
    }
    // Reserved demand in this train's window boards unconditionally.
    std::vector<int64_t> reservedLoad(S, 0);
    int lo = i == 0 ? 0 : timetable.departureIndex[i - 1];
    for (int u = 0; u < S - 1; ++u) {
      for (int v = u + 1; v < S; ++v) {
        int64_t sum = 0;
        for (int t = lo; t < dep; ++t) sum += inst.demand.reservedAt(u, v, t);
        for (int m = u; m < v; ++m) reservedLoad[m] += sum;
      }
    }
    // Sweep stations, boarding FIFO into residual capacity.
    int64_t onboardFree = 0;
    std::vector<int64_t> alightAt(S, 0);
    for (int u = 0; u < S - 1; ++u) {
      onboardFree -= alightAt[u];
      int64_t residual =
          inst.params.capacity - reservedLoad[u] - onboardFree;
      if (residual < 0) residual = 0;
      auto& qu = queue[u];
      while (residual > 0 && !qu.empty()) {
        Entry& e = qu.front();
        int64_t take = std::min<int64_t>(residual, e.count);
        flow.allowance[static_cast<size_t>(i) * P +
                       inst.demand.pairIndex(u, e.v)] += take;
        alightAt[e.v] += take;
        onboardFree += take;
        residual -= take;
        e.count -= take;
        if (e.count == 0) qu.pop_front();
      }
    }
  }

  for (int u = 0; u < S; ++u)
    for (const auto& e : queue[u]) res.unservedDemand |= e.count > 0;
  // Demand arriving at/after the last departure never boards.
  for (int u = 0; u < S - 1; ++u)
    for (int v = u + 1; v < S; ++v)
      for (int t = timetable.departureIndex[I - 1]; t < T; ++t)
        if (inst.demand.freeAt(u, v, t) > 0 ||
            inst.demand.reservedAt(u, v, t) > 0)
          res.unservedDemand = true;

  ShiftPlan diag = ShiftPlan::diagonal(inst);
  DynamicsChecks checks;
  checks.fairness = false;
  checks.fullService = false;
  checks.capacity = false;  // reserved priority may overload in principle
  res.bundle = derivePassengerDynamics(inst, timetable, diag, flow, checks);
  res.fairnessViolated = res.bundle.fairnessViolationCount > 0;
  res.feasible = !res.unservedDemand && !res.fairnessViolated;
  res.report = evaluateObjective(inst, res.bundle, weights);
  return res;
}

}  // namespace bdtt
