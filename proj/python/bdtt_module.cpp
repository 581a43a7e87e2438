#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bdtt/benders.hpp"
#include "bdtt/evaluator.hpp"
#include "bdtt/experiments.hpp"
#include "bdtt/formulation.hpp"
#include "bdtt/instance.hpp"
#include "bdtt/mip.hpp"

namespace py = pybind11;
using namespace bdtt;

namespace {

py::dict reportDict(const EvaluationReport& r) {
  py::dict d;
  d["waitingTimestamps"] = r.waitingTimestamps;
  d["waitingMinutes"] = r.waitingMinutes;
  d["subsidy"] = r.subsidy;
  d["detainedCount"] = r.detainedCount;
  d["shiftedPercent"] = r.shiftedPercent;
  d["avgWaitNonReservedMinutes"] = r.avgWaitNonReservedMinutes;
  d["maxStationWaiting"] = r.maxStationWaiting;
  d["overloadCount"] = r.overloadCount;
  d["maxInVehicleLoad"] = r.maxInVehicleLoad;
  d["objective"] = r.objective;
  return d;
}

std::string statusStr(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "ok";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::TimeLimit: return "timeLimit";
  }
  return "?";
}

}  // namespace

PYBIND11_MODULE(_bdtt, m) {
  m.doc() = "Integrated trip-booking / passenger-directing / train-timetabling "
            "solver core";

  m.def(
      "generate_instance",
      [](int stations, int horizon, int trains, int peakStart, int peakEnd,
         int64_t totalDemand, double bookingRatio, uint64_t seed, int maxShift,
         double fairness, int64_t capacity) {
        GeneratorSettings g;
        g.stationCount = stations;
        g.horizonLength = horizon;
        g.trainCount = trains;
        g.peakStart = peakStart;
        g.peakEnd = peakEnd;
        g.totalDemand = totalDemand;
        g.bookingRatio = bookingRatio;
        g.seed = seed;
        g.maxShift = maxShift;
        g.fairness = fairness;
        g.capacity = capacity;
        return instanceToJson(generateSyntheticInstance(g));
      },
      py::arg("stations") = 6, py::arg("horizon") = 30, py::arg("trains") = 4,
      py::arg("peak_start") = 8, py::arg("peak_end") = 22,
      py::arg("total_demand") = 600, py::arg("booking_ratio") = 0.5,
      py::arg("seed") = 1, py::arg("max_shift") = 3,
      py::arg("fairness") = 0.5, py::arg("capacity") = 400,
      "Deterministic synthetic instance as a JSON document");

  m.def(
      "batong_instance",
      [](const std::string& shape, uint64_t seed) {
        return instanceToJson(builtinBatongInstance(shape, seed));
      },
      py::arg("shape"), py::arg("seed") = 1,
      "Built-in Batong-line template (shapes H..L) with seeded demand");

  m.def(
      "validate_instance",
      [](const std::string& json) {
        py::list out;
        try {
          Instance inst = instanceFromJson(json);
          for (const auto& v : validateInstance(inst))
            out.append(v.field + ": " + v.message);
        } catch (const InstanceIoError& e) {
          if (e.violations.empty()) out.append(std::string(e.what()));
          for (const auto& v : e.violations)
            out.append(v.field + ": " + v.message);
        }
        return out;
      },
      py::arg("instance_json"),
      "Violation descriptions; empty list means the instance is valid");

  m.def(
      "map_to_equivalent_time",
      [](const std::string& json, int station, int physicalTimestamp) {
        Instance inst = instanceFromJson(json);
        auto t = mapToEquivalentTime(inst.line, inst.horizon, station,
                                     physicalTimestamp);
        return t ? py::cast(*t) : py::none().cast<py::object>();
      },
      py::arg("instance_json"), py::arg("station"), py::arg("physical_timestamp"),
      "Equivalent timestamp (1-based) or None when out of range");

  m.def(
      "solve",
      [](const std::string& json, const std::string& variant, double gapPercent,
         double timeLimit, bool validInequalities) {
        Instance inst = instanceFromJson(json);
        SolverConfig cfg;
        cfg.variant = variantFromName(variant);
        cfg.gapPercent = gapPercent;
        cfg.timeLimitSeconds = timeLimit;
        cfg.useValidInequalities = validInequalities;
        BDTTResult res = solveBDTT(inst, weightsOf(inst), cfg);
        py::dict out;
        out["status"] = statusStr(res.status);
        if (res.status != SolveStatus::Infeasible) {
          out["objective"] = res.objective;
          out["departures"] = res.bundle.timetable.departureIndex;
          out["report"] =
              reportDict(evaluateObjective(inst, res.bundle, weightsOf(inst)));
        }
        out["nodes"] = res.stats.nodeCount;
        out["optimalityCuts"] = res.stats.optimalityCuts;
        out["feasibilityCuts"] = res.stats.feasibilityCuts;
        out["rootLowerBound"] = res.stats.rootLowerBound;
        out["wallSeconds"] = res.stats.wallSeconds;
        return out;
      },
      py::arg("instance_json"), py::arg("variant") = "TTCBD",
      py::arg("gap_percent") = 0.0, py::arg("time_limit") = 600.0,
      py::arg("valid_inequalities") = true,
      "Decomposition solve; returns objective, departures and metrics");

  m.def(
      "solve_reference",
      [](const std::string& json, double gapPercent, double timeLimit) {
        Instance inst = instanceFromJson(json);
        BigMProfile bigM = tightenBigM(inst);
        BuildOptions opt;
        opt.integerFlags = true;
        BuiltModel model = buildMonolithicILP(inst, weightsOf(inst), bigM, opt);
        MIPOptions mo;
        mo.gapTolerance = gapPercent / 100.0;
        mo.timeLimitSeconds = timeLimit;
        MIPResult mip = solveMIPReference(model.lp, mo);
        py::dict out;
        out["status"] = mip.status == MIPStatus::Optimal ? "ok"
                        : mip.status == MIPStatus::Infeasible ? "infeasible"
                                                              : "timeLimit";
        if (mip.hasIncumbent) {
          out["objective"] = mip.objective;
          out["bound"] = mip.bound;
        }
        out["nodes"] = mip.nodeCount;
        return out;
      },
      py::arg("instance_json"), py::arg("gap_percent") = 0.0,
      py::arg("time_limit") = 600.0,
      "Monolithic branch-and-bound reference solve");

  m.def(
      "baselines",
      [](const std::string& json, double gapPercent, double timeLimit) {
        ExperimentPlan plan;
        plan.kind = ExperimentKind::Baselines;
        plan.instance = instanceFromJson(json);
        plan.config.gapPercent = gapPercent;
        plan.config.timeLimitSeconds = timeLimit;
        return runBaselineComparison(plan).toCsv();
      },
      py::arg("instance_json"), py::arg("gap_percent") = 0.0,
      py::arg("time_limit") = 600.0,
      "BDDT vs PFC / relaxed PFC / SPE comparison as CSV text");
}
