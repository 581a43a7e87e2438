#pragma once

#include <string>
#include <vector>

#include "bdtt/benders.hpp"
#include "bdtt/evaluator.hpp"
#include "bdtt/instance.hpp"

namespace bdtt {

enum class ExperimentKind : uint8_t {
  Solve,
  Variants,
  Sweep,
  Pareto,
  Baselines,
  Pricing
};

struct ExperimentPlan {
  ExperimentKind kind = ExperimentKind::Solve;
  Instance instance;
  SolverConfig config;
  std::string sweepParam;  // maxShift | bookingRatio | fairness | trainCount
  std::vector<double> sweepValues;
  int paretoSteps = 5;
  double paretoStepPercent = 1.0;  // of baseline revenue
  double pricingFloor = 0.9;       // fraction of baseline revenue
  double pricingOffPeakFactor = 0.8;
  std::string outputDir;
};

// Deterministically formatted table; toCsv() bytes depend only on the rows.
struct ResultTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string toCsv() const;
};

std::string formatNumber(double v);

ResultTable runVariantComparison(const ExperimentPlan& plan);
ResultTable runSensitivitySweep(const ExperimentPlan& plan);
ResultTable runParetoFrontier(const ExperimentPlan& plan);
ResultTable runBaselineComparison(const ExperimentPlan& plan);
ResultTable runPricing(const ExperimentPlan& plan);

// Per-train departures in equivalent and physical time (Gantt-ready).
ResultTable timetableExport(const Instance& inst, const Timetable& timetable);

// Rebalances the reserved/free split of an instance's demand to the given
// booking ratio (deterministic apportionment; grand totals preserved).
Instance withBookingRatio(const Instance& inst, double ratio);

// Full-fare revenue of the non-reserved demand.
double baselineRevenue(const Instance& inst);

// Writes result CSVs plus a run manifest (config, seed, version, timings).
void emitReports(const std::vector<ResultTable>& tables,
                 const ExperimentPlan& plan, const std::string& outputDir,
                 double wallSeconds);

}  // namespace bdtt
