#pragma once

#include <optional>
#include <vector>

#include "bdtt/instance.hpp"
#include "bdtt/lp.hpp"

namespace bdtt {

// Timetable as 0-based departure indices per train: train i departs at the
// start of timestamp departureIndex[i]; its boarding window is
// [departureIndex[i-1], departureIndex[i]) (train 0: [0, departureIndex[0])).
struct Timetable {
  std::vector<int> departureIndex;
  bool operator==(const Timetable&) const = default;
};

// Shift plan: kappa[u][v][a][o] = passengers of OD (u,v) with original
// arrival timestamp o who actually arrive at a, a in [o-maxShift, o].
// Stored by (pair, o, o-a).
struct ShiftPlan {
  int stations = 0, horizon = 0, maxShift = 0;
  std::vector<int64_t> counts;

  void resize(int s, int t, int shift) {
    stations = s;
    horizon = t;
    maxShift = shift;
    counts.assign(static_cast<size_t>(DemandProfile::pairCount(s)) * t *
                      (shift + 1),
                  0);
  }
  size_t index(int pair, int o, int delta) const {
    return (static_cast<size_t>(pair) * horizon + o) * (maxShift + 1) + delta;
  }
  int64_t at(int pair, int a, int o) const {
    int delta = o - a;
    if (delta < 0 || delta > maxShift) return 0;
    return counts[index(pair, o, delta)];
  }
  void set(int pair, int a, int o, int64_t value) {
    counts[index(pair, o, o - a)] = value;
  }
  // No shifting: everyone keeps their original arrival.
  static ShiftPlan diagonal(const Instance& inst);
};

// Per-destination boarding allowances b[i][u][v].
struct FlowControlPlan {
  int trains = 0, stations = 0;
  std::vector<int64_t> allowance;  // [i * pairCount + pair]
  int64_t at(int i, int pair) const {
    return allowance[static_cast<size_t>(i) * DemandProfile::pairCount(stations) +
                     pair];
  }
  void resize(int i, int s) {
    trains = i;
    stations = s;
    allowance.assign(static_cast<size_t>(i) * DemandProfile::pairCount(s), 0);
  }
};

struct ObjectiveWeights {
  double waiting = 1.0;
  double subsidy = 1.0;
};

inline ObjectiveWeights weightsOf(const Instance& inst) {
  return {inst.params.weightWaiting, inst.params.weightSubsidy};
}

// Big-M profile for the linearization blocks. Tightened mode uses the
// demand-window closed forms; loose mode one global constant >= total demand.
struct BigMProfile {
  enum class Mode : uint8_t { Loose, Tightened };
  Mode mode = Mode::Loose;
  double global = 0.0;
  std::vector<double> detention;     // M_u, per station
  std::vector<double> arrivals;      // M_ut, per (u, t)
  std::vector<double> arrivalsOD;    // M_uvt, per (pair, t)
  int stations = 0, horizon = 0;

  double mU(int u) const {
    return mode == Mode::Loose ? global : detention[u];
  }
  double mUT(int u, int t) const {
    return mode == Mode::Loose ? global
                               : arrivals[static_cast<size_t>(u) * horizon + t];
  }
  double mUVT(int pair, int t) const {
    return mode == Mode::Loose
               ? global
               : arrivalsOD[static_cast<size_t>(pair) * horizon + t];
  }
};

BigMProfile tightenBigM(const Instance& inst);
BigMProfile looseBigM(const Instance& inst);

// Index maps from model symbols to LP columns. -1 marks entries that are
// statically fixed (value recoverable from the *Fix companionarrays) or
// structurally absent.
struct VariableCatalog {
  int stations = 0, horizon = 0, trains = 0, maxShift = 0, pairs = 0;
  std::vector<int> depLo, depHi;  // inclusive bounds on departure indices

  std::vector<int> z;       // [i*T + t]
  std::vector<int8_t> zFix;
  std::vector<int> x;       // [i*T + t]
  std::vector<int8_t> xFix;
  std::vector<int> dep;       // [i]
  std::vector<int> headway;   // [i]

  // Canonical free-variable lists shared by all models built from the same
  // instance; Benders cut coefficients are dense over these.
  std::vector<std::pair<int, int>> freeZ;  // (i, t), lex order
  std::vector<int> freeZCol;               // column per list entry

  struct KappaVar {
    int pair, origin, arrival;  // o, a (0-based)
  };
  std::vector<KappaVar> kappaVars;  // canonical order
  std::vector<int> kappaCol;        // column per list entry
  std::vector<int> kappaVarIndex;   // [pair*T*(shift+1) ...] -> list id or -1
  int kappaIndexOf(int pair, int a, int o) const {
    int delta = o - a;
    if (delta < 0 || delta > maxShift) return -1;
    return kappaVarIndex[(static_cast<size_t>(pair) * horizon + o) *
                             (maxShift + 1) +
                         delta];
  }

  std::vector<int> arrivalOD;          // K_uvt: [pair*T + t]
  std::vector<double> arrivalODConst;  // constant part of K (0 when no var)
  std::vector<int> arrivalStation;     // A_ut: [u*T + t]

  std::vector<int> board;      // b: [i*pairs + pair]
  std::vector<int> boardHat;   // reserved boarding
  std::vector<int> wait;       // w
  std::vector<int> detain;     // r
  std::vector<int> onboard;    // o: [i*S + u]
  std::vector<int> onboardHat;
  std::vector<int> alight;     // l: [i*S + u]

  std::vector<int> pw;       // p^w: [(i*S + u)*T + t] (monolithic only)
  std::vector<int> pHatW;    // reserved new-arrival waits
  std::vector<int> pwc;      // cumulative non-reserved waits
  std::vector<int> pHatWc;   // cumulative reserved waits
  std::vector<int> q;        // detention-time terms

  struct ThetaEntry {
    int t, tp;   // tp <= t
    int col;     // -1 when fixed
    int8_t fix;  // value when col < 0
  };
  std::vector<std::vector<ThetaEntry>> theta;  // per train

  // mu columns aligned with theta entries: mu[(i*S+u)][k] pairs with
  // theta[i][k]; -1 = absent, -2 = equals A_{u,tp} (theta fixed at 1).
  std::vector<std::vector<int>> mu;

  struct GammaEntry {
    int t;    // actual arrival timestamp
    int col;  // Gamma variable column
  };
  std::vector<std::vector<GammaEntry>> gamma;  // per (i*pairs + pair)

  int thetaSP = -1;  // epigraph variable (RMP)
  int subsidy = -1;  // F^s variable
  std::vector<int> slackService;    // slacked SP: per pair
  std::vector<int> slackCapacity;   // slacked SP: per (i, u)

  // Proposition-1 block.
  bool validInequalitiesAdded = false;
  std::vector<int> viBoard;     // b~: [i*pairs + pair]
  std::vector<int> viOnboard;   // o~: [i*S + u]
  std::vector<int> viAlight;    // l~
  std::vector<int> viBoardSum;  // b~_iu
  std::vector<std::vector<GammaEntry>> viGamma;

  // Definitional rows (row, definedColumn): each such row pins its defined
  // variable; they seed the crash basis for cold solves.
  std::vector<std::pair<int, int>> definitionRows;

  int pairIndex(int u, int v) const {
    return u * (2 * stations - u - 1) / 2 + (v - u - 1);
  }
  double zValue(int i, int t, const std::vector<double>& primal) const {
    int c = z[static_cast<size_t>(i) * horizon + t];
    return c >= 0 ? primal[c] : zFix[static_cast<size_t>(i) * horizon + t];
  }
  // Human-readable variable name <-> column table (debug aid).
  std::string describe(const LinearProgram& lp) const;
};

struct BuiltModel {
  LinearProgram lp;
  VariableCatalog catalog;
};

struct BuildOptions {
  bool integerFlags = false;
  bool includeValidInequalities = false;
  // Fixing the timetable collapses every z-dependent block to linear rows.
  std::optional<Timetable> fixedTimetable;
  bool shiftDisabled = false;   // kappa pinned to the diagonal (PFC)
  bool relaxCapacity = false;   // drop o + o^ <= C rows (relaxed PFC)
};

// The full linearized model. Emits objective, train dynamics, shifting
// conservation, reserved boarding, service/fairness/detention, capacity
// chain, and all big-M linearization blocks.
BuiltModel buildMonolithicILP(const Instance& inst, const ObjectiveWeights& w,
                              const BigMProfile& bigM,
                              const BuildOptions& options = {});

// Relaxed master problem: timetable + shifting + reserved dynamics +
// cumulative waiting linearization + reserved capacity + epigraph theta_SP.
// Contains zero Benders cuts initially.
BuiltModel buildRMP(const Instance& inst, const ObjectiveWeights& w,
                    const BigMProfile& bigM, bool includeValidInequalities);

// Appends the Proposition-1 valid rows to an RMP. Returns the number of rows
// added; throws std::logic_error if called twice on the same model.
int addValidInequalities(BuiltModel& rmp, const Instance& inst,
                         const BigMProfile& bigM);

// Owned root-relaxation strengthening standing in for a commercial solver's
// internal tightening: section-coverage rows (suffix arrivals vs trains
// still to depart) and waiting floors tying the cumulative waits to the
// timetable. All rows are valid for every feasible integral point.
int addRelaxationStrengthening(BuiltModel& rmp, const Instance& inst,
                               const BigMProfile& bigM);

// Subproblem with variable-fixing rows so the duals xi (on z) and chi (on
// kappa) are directly readable. setPoint() repins to a new (z*, kappa*).
struct SubproblemLP {
  LinearProgram lp;
  VariableCatalog catalog;
  std::vector<int> pinRowZ;      // aligned with catalog.freeZ
  std::vector<int> pinRowKappa;  // aligned with catalog.kappaVars
  bool slacked = false;

  void setPoint(const std::vector<double>& zFree,
                const std::vector<double>& kappaFree);
};

SubproblemLP buildSP(const Instance& inst, const ObjectiveWeights& w,
                     const BigMProfile& bigM, bool withSlacks);

// Lagrangian subproblem for strengthened cuts: the SP rows without pinning,
// kappa integral, z relaxed to [0,1], objective
//   w_t * sum(q) - xi'(z - z*) - chi'(kappa - kappa*).
// The returned LP's objective omits the constant xi'z* + chi'kappa*; callers
// add it back when reading the optimum.
BuiltModel buildStrengthenedSubproblem(const Instance& inst,
                                       const ObjectiveWeights& w,
                                       const BigMProfile& bigM,
                                       const std::vector<double>& xi,
                                       const std::vector<double>& chi);

// Appendix-style pricing extension: minimize waiting alone subject to a
// revenue floor under a time-varying fare table nu[pair*T + t].
BuiltModel buildPricingExtension(const Instance& inst, const BigMProfile& bigM,
                                 const std::vector<double>& timeVaryingFare,
                                 double revenueFloorFraction,
                                 const BuildOptions& options = {});

// Government subsidy F^s from a shift plan; throws std::invalid_argument
// naming the violated (u,v,o) cell when conservation fails.
double computeSubsidy(const Instance& inst, const ShiftPlan& kappa);

// Departure-index envelope implied by headway bounds (and z_{i,|T|} = 0).
void departureEnvelope(const Instance& inst, std::vector<int>& lo,
                       std::vector<int>& hi);

// Advanced starting basis: defined variables basic on their definition rows,
// diagonal kappa at its demand upper bound, logicals basic elsewhere. Cuts
// phase-1 work dramatically on large models.
Basis crashBasis(const LinearProgram& lp, const VariableCatalog& catalog);

}  // namespace bdtt
