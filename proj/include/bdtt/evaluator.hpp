#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bdtt/formulation.hpp"
#include "bdtt/instance.hpp"
#include "bdtt/mip.hpp"

namespace bdtt {

// Full decision + derived-dynamics record. Every derived quantity is an
// exact integer computed from (timetable, shift, flow).
struct SolutionBundle {
  Timetable timetable;
  ShiftPlan shift;
  FlowControlPlan flow;

  std::vector<int> headways;               // per train, timestamps
  std::vector<uint8_t> headwayIndicator;   // x: [i*T + t]
  std::vector<int64_t> boardHat;           // [i*P + pair]
  std::vector<int64_t> wait;               // w
  std::vector<int64_t> detain;             // r
  std::vector<int64_t> onboard;            // o: [i*S + u]
  std::vector<int64_t> onboardHat;         // o^
  std::vector<int64_t> alight;             // l
  std::vector<int64_t> arrivals;           // actual arrivals: [pair*T + t]
  std::vector<int64_t> waitingNewReserved; // p^w_hat: [(i*S+u)*T + t]
  std::vector<int64_t> waitingNewFree;     // p^w
  std::vector<int64_t> waitingCumReserved; // p^wc_hat
  std::vector<int64_t> waitingCumFree;     // p^wc
  std::vector<int64_t> detentionTime;      // q

  // Post-condition tallies (violations when the corresponding check is off).
  int64_t overloadCount = 0;
  int64_t maxInVehicleLoad = 0;
  int64_t unservedCount = 0;
  int64_t fairnessViolationCount = 0;
};

struct DynamicsChecks {
  bool capacity = true;
  bool fairness = true;
  bool fullService = true;
};

class DynamicsError : public std::runtime_error {
 public:
  explicit DynamicsError(const std::string& what,
                         std::vector<Violation> violations = {})
      : std::runtime_error(what), violations(std::move(violations)) {}
  std::vector<Violation> violations;
};

// Derives x, reserved boarding, waiting/detention ledgers, loads, and all
// per-timestamp waiting tallies from the decisions. Throws DynamicsError
// with a structured violation list when the inputs are inconsistent with an
// enabled check.
SolutionBundle derivePassengerDynamics(const Instance& inst,
                                       const Timetable& timetable,
                                       const ShiftPlan& shift,
                                       const FlowControlPlan& flow,
                                       const DynamicsChecks& checks = {});

struct EvaluationReport {
  double waitingTimestamps = 0.0;  // F^t in passenger-timestamps
  double waitingMinutes = 0.0;
  double subsidy = 0.0;            // F^s
  int64_t detainedCount = 0;
  double shiftedPercent = 0.0;     // SP
  double avgWaitNonReservedMinutes = 0.0;  // AWT-WR
  int64_t maxStationWaiting = 0;   // MW
  int64_t overloadCount = 0;
  int64_t maxInVehicleLoad = 0;
  double objective = 0.0;          // w_t * F^t + w_s * F^s
};

EvaluationReport evaluateObjective(const Instance& inst,
                                   const SolutionBundle& bundle,
                                   const ObjectiveWeights& weights);

// Stable-keyed text form consumed by the CLI table emitter.
std::string reportToText(const EvaluationReport& report);

// Passenger flow control under a fixed timetable, no trip shifting.
struct PFCResult {
  bool feasible = false;
  SolutionBundle bundle;
  EvaluationReport report;
  MIPResult mip;
};
PFCResult solvePFC(const Instance& inst, const Timetable& timetable,
                   const ObjectiveWeights& weights, bool relaxCapacity);

// Uncontrolled FIFO boarding simulation under a fixed timetable.
struct SPEResult {
  bool feasible = false;
  bool unservedDemand = false;      // someone never boards
  bool fairnessViolated = false;    // post-condition check only
  SolutionBundle bundle;
  EvaluationReport report;
};
SPEResult simulateSPE(const Instance& inst, const Timetable& timetable,
                      const ObjectiveWeights& weights);

// Convenience: read the decision triple out of a solved model.
Timetable timetableFromSolution(const VariableCatalog& cat,
                                const std::vector<double>& primal);
ShiftPlan shiftPlanFromSolution(const Instance& inst,
                                const VariableCatalog& cat,
                                const std::vector<double>& primal);
FlowControlPlan flowPlanFromSolution(const Instance& inst,
                                     const VariableCatalog& cat,
                                     const std::vector<double>& primal);

}  // namespace bdtt
