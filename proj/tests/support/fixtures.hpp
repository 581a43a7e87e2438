#pragma once

#include <functional>
#include <vector>

#include "bdtt/formulation.hpp"
#include "bdtt/instance.hpp"

namespace testsupport {

// T1: committed 3-station / 8-timestamp / 2-train instance, small enough to
// enumerate exhaustively but with shifting, reservations and detention all
// active at the optimum.
inline bdtt::Instance tinyT1() {
  bdtt::Instance inst;
  inst.name = "T1";
  inst.line.stationCount = 3;
  inst.line.sectionRunTimeSeconds = {60, 60};
  inst.line.dwellTimeSeconds = {60, 60, 60};
  inst.horizon.timestampSeconds = 60;
  inst.horizon.horizonLength = 8;
  inst.horizon.peak.assign(8, 0);
  for (int t = 3; t <= 6; ++t) inst.horizon.peak[t - 1] = 1;  // 1-based 3..6
  inst.horizon.physicalStart = "07:00";
  inst.params.trainCount = 2;
  inst.params.capacity = 8;
  inst.params.headwayMin = 2;
  inst.params.headwayMax = 6;
  inst.params.maxShift = 2;
  inst.params.farePaidFraction = 0.8;
  inst.params.fairness = {0.5};
  inst.params.weightWaiting = 1.0;
  inst.params.weightSubsidy = 5.0;
  inst.fares.resize(3, 3.0);
  inst.demand.resize(3, 8);
  // 1-based (u, v, t): free demand
  inst.demand.freeAt(0, 1, 2) = 2;   // (1,2,3)
  inst.demand.freeAt(0, 1, 4) = 1;   // (1,2,5)
  inst.demand.freeAt(0, 2, 0) = 1;   // (1,3,1)
  inst.demand.freeAt(0, 2, 3) = 2;   // (1,3,4)
  inst.demand.freeAt(1, 2, 2) = 2;   // (2,3,3)
  inst.demand.freeAt(1, 2, 5) = 2;   // (2,3,6)
  // reserved demand
  inst.demand.reservedAt(0, 1, 1) = 1;  // (1,2,2)
  inst.demand.reservedAt(0, 2, 3) = 1;  // (1,3,4)
  inst.demand.reservedAt(1, 2, 4) = 1;  // (2,3,5)
  return inst;
}

// Oversaturated T1 variant: tight capacity and a late peak surge that must
// shift earlier; used for feasibility-cut and variant-agreement checks.
inline bdtt::Instance tinyT1Oversat() {
  bdtt::Instance inst = tinyT1();
  inst.name = "T1-oversat";
  inst.params.capacity = 9;
  inst.horizon.peak.assign(8, 0);
  for (int t = 3; t <= 8; ++t) inst.horizon.peak[t - 1] = 1;
  inst.demand.freeAt(0, 2, 5) = 3;  // (1,3,6)
  inst.demand.freeAt(0, 2, 7) = 2;  // (1,3,8): must shift to be served
  inst.demand.freeAt(1, 2, 6) = 2;  // (2,3,7)
  return inst;
}

// Tightly packed 3-train fixture with a reservation surge inside a
// structurally forced headway window; feasible, and the Proposition-style
// rows strictly lift its root LP bound.
inline bdtt::Instance viBoundFixture() {
  bdtt::Instance inst;
  inst.name = "vi-bound";
  inst.line.stationCount = 3;
  inst.line.sectionRunTimeSeconds = {60, 60};
  inst.line.dwellTimeSeconds = {60, 60, 60};
  inst.horizon.timestampSeconds = 60;
  inst.horizon.horizonLength = 9;
  inst.horizon.peak.assign(9, 1);
  inst.horizon.physicalStart = "08:00";
  inst.params.trainCount = 3;
  inst.params.capacity = 7;
  inst.params.headwayMin = 3;
  inst.params.headwayMax = 4;
  inst.params.maxShift = 3;
  inst.params.farePaidFraction = 0.8;
  inst.params.fairness = {0.5};
  inst.params.weightWaiting = 1.0;
  inst.params.weightSubsidy = 5.0;
  inst.fares.resize(3, 3.0);
  inst.demand.resize(3, 9);
  inst.demand.reservedAt(0, 2, 3) = 4;
  inst.demand.reservedAt(0, 2, 1) = 1;
  inst.demand.reservedAt(0, 2, 6) = 1;
  inst.demand.freeAt(0, 2, 3) = 4;
  inst.demand.freeAt(0, 2, 5) = 2;
  inst.demand.freeAt(1, 2, 2) = 2;
  inst.demand.freeAt(0, 1, 4) = 2;
  return inst;
}

// Fleet-size fixture: front-loaded reservations force an early first train,
// the headway chain caps how late the fleet can reach, and a late peak
// surge then needs either one more train or trip shifting.
//   - maxShift = 0, 3 trains: infeasible
//   - maxShift = 10, 3 trains: feasible
//   - maxShift = 0, 4 trains: feasible
inline bdtt::Instance fleetSizeFixture() {
  bdtt::Instance inst;
  inst.name = "fleet-size";
  inst.line.stationCount = 3;
  inst.line.sectionRunTimeSeconds = {60, 60};
  inst.line.dwellTimeSeconds = {60, 60, 60};
  inst.horizon.timestampSeconds = 60;
  inst.horizon.horizonLength = 20;
  inst.horizon.peak.assign(20, 0);
  for (int t = 3; t <= 19; ++t) inst.horizon.peak[t - 1] = 1;
  inst.horizon.physicalStart = "07:30";
  inst.params.trainCount = 3;
  inst.params.capacity = 10;
  inst.params.headwayMin = 2;
  inst.params.headwayMax = 4;
  inst.params.maxShift = 0;
  inst.params.farePaidFraction = 0.8;
  inst.params.fairness = {0.0};
  inst.params.weightWaiting = 1.0;
  inst.params.weightSubsidy = 5.0;
  inst.fares.resize(3, 3.0);
  inst.demand.resize(3, 20);
  // Reservations pinning the first departure to timestamp 2.
  inst.demand.reservedAt(0, 2, 0) = 6;  // (1,3,1)
  inst.demand.reservedAt(0, 2, 1) = 5;  // (1,3,2)
  // Late surge that outruns a 3-train headway chain without shifting.
  inst.demand.freeAt(0, 2, 11) = 4;  // (1,3,12)
  inst.demand.freeAt(0, 1, 3) = 2;   // (1,2,4)
  inst.demand.freeAt(1, 2, 5) = 2;   // (2,3,6)
  return inst;
}

// All feasible timetables (0-based departure indices) under the headway
// rules; the first headway is exempt from the upper bound.
inline std::vector<bdtt::Timetable> enumerateTimetables(
    const bdtt::Instance& inst) {
  std::vector<int> lo, hi;
  bdtt::departureEnvelope(inst, lo, hi);
  const int I = inst.params.trainCount;
  std::vector<bdtt::Timetable> out;
  std::vector<int> dep(I);
  std::function<void(int)> rec = [&](int i) {
    if (i == I) {
      out.push_back({dep});
      return;
    }
    int from = i == 0 ? lo[0] : dep[i - 1] + inst.params.headwayMin;
    int to = hi[i];
    for (int d = from; d <= to; ++d) {
      if (i > 0 && d - dep[i - 1] > inst.params.headwayMax) break;
      dep[i] = d;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

}  // namespace testsupport
