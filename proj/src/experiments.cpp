#include "bdtt/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "bdtt/formulation.hpp"
#include "bdtt/mip.hpp"
#include "json.hpp"

namespace bdtt {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string formatNumber(double v) {
  char buf[64];
  snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string ResultTable::toCsv() const {
  std::string out;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out += ",";
    out += header[i];
  }
  out += "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      out += row[i];
    }
    out += "\n";
  }
  return out;
}

double baselineRevenue(const Instance& inst) {
  double total = 0.0;
  const int S = inst.line.stationCount;
  for (int u = 0; u < S - 1; ++u)
    for (int v = u + 1; v < S; ++v)
      for (int t = 0; t < inst.horizon.horizonLength; ++t)
        total += inst.fares.at(u, v) *
                 static_cast<double>(inst.demand.freeAt(u, v, t));
  return total;
}

Instance withBookingRatio(const Instance& inst, double ratio) {
  Instance out = inst;
  const int S = inst.line.stationCount;
  const int T = inst.horizon.horizonLength;
  std::vector<int64_t> cellTotal;
  std::vector<std::pair<int, int>> cells;  // (pair, t)
  int64_t grand = 0;
  for (int u = 0; u < S - 1; ++u) {
    for (int v = u + 1; v < S; ++v) {
      int pair = inst.demand.pairIndex(u, v);
      for (int t = 0; t < T; ++t) {
        int64_t c = inst.demand.freeAt(u, v, t) + inst.demand.reservedAt(u, v, t);
        if (c > 0) {
          cellTotal.push_back(c);
          cells.push_back({pair, t});
          grand += c;
        }
      }
    }
  }
  int64_t target = static_cast<int64_t>(std::llround(ratio * grand));
  // Largest-remainder apportionment of the reserved share.
  std::vector<int64_t> reserved(cellTotal.size(), 0);
  std::vector<std::pair<double, size_t>> rem(cellTotal.size());
  int64_t assigned = 0;
  for (size_t i = 0; i < cellTotal.size(); ++i) {
    double t = ratio * static_cast<double>(cellTotal[i]);
    reserved[i] = std::min<int64_t>(cellTotal[i],
                                    static_cast<int64_t>(std::floor(t)));
    assigned += reserved[i];
    rem[i] = {t - std::floor(t), i};
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (size_t k = 0; k < rem.size() && assigned < target; ++k) {
    size_t i = rem[k].second;
    if (reserved[i] < cellTotal[i]) {
      ++reserved[i];
      ++assigned;
    }
  }
  std::fill(out.demand.free.begin(), out.demand.free.end(), 0);
  std::fill(out.demand.reserved.begin(), out.demand.reserved.end(), 0);
  for (size_t i = 0; i < cells.size(); ++i) {
    auto [pair, t] = cells[i];
    out.demand.reserved[static_cast<size_t>(pair) * T + t] = reserved[i];
    out.demand.free[static_cast<size_t>(pair) * T + t] =
        cellTotal[i] - reserved[i];
  }
  return out;
}

namespace {

std::string statusName(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "ok";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::TimeLimit: return "timeLimit";
  }
  return "?";
}

std::vector<std::string> metricsRow(const Instance& inst,
                                    const EvaluationReport& r) {
  double rev = baselineRevenue(inst);
  return {formatNumber(r.waitingTimestamps),
          formatNumber(r.waitingMinutes),
          formatNumber(r.subsidy),
          formatNumber(rev > 0 ? 100.0 * r.subsidy / rev : 0.0),
          formatNumber(r.shiftedPercent),
          formatNumber(r.avgWaitNonReservedMinutes),
          formatNumber(static_cast<double>(r.detainedCount)),
          formatNumber(static_cast<double>(r.maxStationWaiting)),
          formatNumber(static_cast<double>(r.overloadCount)),
          formatNumber(static_cast<double>(r.maxInVehicleLoad))};
}

const std::vector<std::string> kMetricsHeader = {
    "waitingTimestamps", "waitingMinutes",       "subsidy",
    "subsidyPercent",    "shiftedPercent",       "awtWrMinutes",
    "detained",          "maxStationWaiting",    "overloads",
    "maxInVehicleLoad"};

}  // namespace

ResultTable runVariantComparison(const ExperimentPlan& plan) {
  ResultTable table;
  table.name = "variants";
  table.header = {"method", "status", "objective", "seconds",
                  "rootLB", "rootUB", "rootGapPercent", "nodes",
                  "optimalityCuts", "feasibilityCuts", "strengthenedCuts"};
  const Instance& inst = plan.instance;
  ObjectiveWeights w = weightsOf(inst);

  // Reference oracle on the monolithic model.
  {
    auto t0 = std::chrono::steady_clock::now();
    BuildOptions opt;
    opt.integerFlags = true;
    BigMProfile bigM = plan.config.tightenedBigM ? tightenBigM(inst)
                                                 : looseBigM(inst);
    BuiltModel model = buildMonolithicILP(inst, w, bigM, opt);
    MIPOptions mo;
    mo.gapTolerance = plan.config.gapPercent / 100.0;
    mo.timeLimitSeconds = plan.config.timeLimitSeconds;
    Basis crash = crashBasis(model.lp, model.catalog);
    mo.rootBasis = &crash;
    MIPResult mip = solveMIPReference(model.lp, mo);
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    std::string status = mip.status == MIPStatus::Optimal
                             ? "ok"
                             : (mip.status == MIPStatus::Infeasible
                                    ? "infeasible"
                                    : "timeLimit");
    table.rows.push_back({"reference", status,
                          mip.hasIncumbent ? formatNumber(mip.objective) : "-",
                          formatNumber(secs), "-", "-", "-",
                          formatNumber(static_cast<double>(mip.nodeCount)),
                          "-", "-", "-"});
  }
  for (Variant v : {Variant::BD, Variant::TCBD, Variant::TTCBD,
                    Variant::TTSCBD, Variant::TRTCBD, Variant::TRTSCBD}) {
    SolverConfig cfg = plan.config;
    cfg.variant = v;
    BDTTResult res = solveBDTT(inst, w, cfg);
    const RunStats& s = res.stats;
    table.rows.push_back(
        {variantName(v), statusName(res.status),
         res.status == SolveStatus::Infeasible ? "-"
                                               : formatNumber(res.objective),
         formatNumber(s.wallSeconds), formatNumber(s.rootLowerBound),
         std::isfinite(s.rootUpperBound) ? formatNumber(s.rootUpperBound) : "-",
         std::isfinite(s.rootGapPercent) ? formatNumber(s.rootGapPercent) : "-",
         formatNumber(static_cast<double>(s.nodeCount)),
         formatNumber(static_cast<double>(s.optimalityCuts)),
         formatNumber(static_cast<double>(s.feasibilityCuts)),
         formatNumber(static_cast<double>(s.strengthenedCuts))});
  }
  return table;
}

ResultTable runSensitivitySweep(const ExperimentPlan& plan) {
  ResultTable table;
  table.name = "sweep";
  table.header = {"param", "value", "status", "objective"};
  for (const auto& h : kMetricsHeader) table.header.push_back(h);

  for (double value : plan.sweepValues) {
    Instance inst = plan.instance;
    if (plan.sweepParam == "maxShift") {
      inst.params.maxShift = static_cast<int>(std::llround(value));
    } else if (plan.sweepParam == "bookingRatio") {
      inst = withBookingRatio(inst, value);
    } else if (plan.sweepParam == "fairness") {
      inst.params.fairness = {value};
    } else if (plan.sweepParam == "trainCount") {
      inst.params.trainCount = static_cast<int>(std::llround(value));
    } else {
      throw std::invalid_argument("unknown sweep parameter: " + plan.sweepParam);
    }
    std::vector<std::string> row = {plan.sweepParam, formatNumber(value)};
    auto violations = validateInstance(inst);
    if (!violations.empty()) {
      row.push_back("invalid");
      while (row.size() < table.header.size()) row.push_back("-");
      table.rows.push_back(std::move(row));
      continue;
    }
    BDTTResult res = solveBDTT(inst, weightsOf(inst), plan.config);
    row.push_back(statusName(res.status));
    if (res.status == SolveStatus::Infeasible) {
      while (row.size() < table.header.size()) row.push_back("-");
    } else {
      row.push_back(formatNumber(res.objective));
      EvaluationReport rep =
          evaluateObjective(inst, res.bundle, weightsOf(inst));
      for (auto& cell : metricsRow(inst, rep)) row.push_back(cell);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

ResultTable runParetoFrontier(const ExperimentPlan& plan) {
  ResultTable table;
  table.name = "pareto";
  table.header = {"step", "allowedLostRevenue", "waitingTimestamps",
                  "subsidy", "status"};
  const Instance& inst = plan.instance;
  double revenue = baselineRevenue(inst);
  BigMProfile bigM = plan.config.tightenedBigM ? tightenBigM(inst)
                                               : looseBigM(inst);
  MIPOptions mo;
  mo.gapTolerance = 0.0;
  mo.timeLimitSeconds = plan.config.timeLimitSeconds;

  // Anchor: minimize the lost revenue alone.
  BuildOptions opt;
  opt.integerFlags = true;
  ObjectiveWeights revenueOnly{0.0, 1.0};
  BuiltModel anchor = buildMonolithicILP(inst, revenueOnly, bigM, opt);
  Basis anchorCrash = crashBasis(anchor.lp, anchor.catalog);
  mo.rootBasis = &anchorCrash;
  MIPResult anchorMip = solveMIPReference(anchor.lp, mo);
  if (anchorMip.status != MIPStatus::Optimal) {
    table.rows.push_back({"0", "-", "-", "-",
                          anchorMip.status == MIPStatus::Infeasible
                              ? "infeasible"
                              : "timeLimit"});
    return table;
  }
  double minSubsidy = anchorMip.objective;

  int steps = plan.paretoStepPercent <= 0.0 ? 0 : plan.paretoSteps;
  for (int k = 0; k <= steps; ++k) {
    double epsilon =
        minSubsidy + k * plan.paretoStepPercent / 100.0 * revenue;
    ObjectiveWeights waitingOnly{1.0, 0.0};
    BuiltModel model = buildMonolithicILP(inst, waitingOnly, bigM, opt);
    model.lp.addRow(RowSense::LessEqual, epsilon,
                    {{model.catalog.subsidy, 1.0}}, "subsidy_budget");
    Basis crash = crashBasis(model.lp, model.catalog);
    mo.rootBasis = &crash;
    MIPResult mip = solveMIPReference(model.lp, mo);
    if (mip.status != MIPStatus::Optimal) {
      table.rows.push_back({formatNumber(static_cast<double>(k)),
                            formatNumber(epsilon), "-", "-",
                            mip.status == MIPStatus::Infeasible ? "infeasible"
                                                                : "timeLimit"});
      continue;
    }
    double subsidyValue = mip.values[model.catalog.subsidy];
    table.rows.push_back({formatNumber(static_cast<double>(k)),
                          formatNumber(epsilon), formatNumber(mip.objective),
                          formatNumber(subsidyValue), "ok"});
  }
  return table;
}

ResultTable runBaselineComparison(const ExperimentPlan& plan) {
  ResultTable table;
  table.name = "baselines";
  table.header = {"approach", "status"};
  for (const auto& h : kMetricsHeader) table.header.push_back(h);
  const Instance& inst = plan.instance;
  ObjectiveWeights w = weightsOf(inst);

  BDTTResult bddt = solveBDTT(inst, w, plan.config);
  if (bddt.status == SolveStatus::Infeasible) {
    table.rows.push_back({"BDDT", "infeasible"});
    while (table.rows.back().size() < table.header.size())
      table.rows.back().push_back("-");
    return table;
  }
  EvaluationReport bddtRep = evaluateObjective(inst, bddt.bundle, w);
  {
    std::vector<std::string> row = {"BDDT", statusName(bddt.status)};
    for (auto& c : metricsRow(inst, bddtRep)) row.push_back(c);
    table.rows.push_back(std::move(row));
  }
  const Timetable& tt = bddt.bundle.timetable;

  PFCResult pfc = solvePFC(inst, tt, w, false);
  {
    std::vector<std::string> row = {"PFC", pfc.feasible ? "ok" : "infeasible"};
    if (pfc.feasible)
      for (auto& c : metricsRow(inst, pfc.report)) row.push_back(c);
    while (row.size() < table.header.size()) row.push_back("-");
    table.rows.push_back(std::move(row));
  }
  PFCResult relaxed = solvePFC(inst, tt, w, true);
  {
    std::vector<std::string> row = {"relaxedPFC",
                                    relaxed.feasible ? "ok" : "infeasible"};
    if (relaxed.feasible)
      for (auto& c : metricsRow(inst, relaxed.report)) row.push_back(c);
    while (row.size() < table.header.size()) row.push_back("-");
    table.rows.push_back(std::move(row));
  }
  SPEResult spe = simulateSPE(inst, tt, w);
  {
    std::string status = spe.feasible ? "ok"
                         : spe.unservedDemand && spe.fairnessViolated
                             ? "infeasible(unserved+fairness)"
                         : spe.unservedDemand ? "infeasible(unserved)"
                                              : "infeasible(fairness)";
    std::vector<std::string> row = {"SPE", status};
    for (auto& c : metricsRow(inst, spe.report)) row.push_back(c);
    table.rows.push_back(std::move(row));
  }
  if (relaxed.feasible) {
    std::vector<std::string> row = {"DevPercentVsRelaxedPFC", "-"};
    auto dev = [&](double a, double b) {
      return b != 0.0 ? formatNumber((a - b) / b * 100.0) : std::string("-");
    };
    row.push_back(dev(bddtRep.waitingTimestamps,
                      relaxed.report.waitingTimestamps));
    row.push_back(dev(bddtRep.waitingMinutes, relaxed.report.waitingMinutes));
    row.push_back(dev(bddtRep.subsidy, relaxed.report.subsidy));
    while (row.size() < table.header.size()) row.push_back("-");
    table.rows.push_back(std::move(row));
  }
  return table;
}

ResultTable runPricing(const ExperimentPlan& plan) {
  ResultTable table;
  table.name = "pricing";
  table.header = {"revenueFloor", "offPeakFactor", "status",
                  "waitingTimestamps", "revenue", "baselineRevenue"};
  const Instance& inst = plan.instance;
  const int S = inst.line.stationCount;
  const int T = inst.horizon.horizonLength;
  std::vector<double> nu(static_cast<size_t>(DemandProfile::pairCount(S)) * T);
  for (int u = 0; u < S - 1; ++u) {
    for (int v = u + 1; v < S; ++v) {
      int pair = inst.demand.pairIndex(u, v);
      for (int t = 0; t < T; ++t) {
        double factor = inst.horizon.isPeak(t) ? 1.0 : plan.pricingOffPeakFactor;
        nu[static_cast<size_t>(pair) * T + t] = inst.fares.at(u, v) * factor;
      }
    }
  }
  BigMProfile bigM = plan.config.tightenedBigM ? tightenBigM(inst)
                                               : looseBigM(inst);
  BuildOptions opt;
  opt.integerFlags = true;
  BuiltModel model = buildPricingExtension(inst, bigM, nu, plan.pricingFloor, opt);
  MIPOptions mo;
  mo.gapTolerance = plan.config.gapPercent / 100.0;
  mo.timeLimitSeconds = plan.config.timeLimitSeconds;
  Basis crash = crashBasis(model.lp, model.catalog);
  mo.rootBasis = &crash;
  MIPResult mip = solveMIPReference(model.lp, mo);
  std::string status = mip.status == MIPStatus::Optimal ? "ok"
                       : mip.status == MIPStatus::Infeasible ? "infeasible"
                                                             : "timeLimit";
  double revenue = 0.0;
  if (mip.hasIncumbent) {
    const auto& cat = model.catalog;
    for (int u = 0; u < S - 1; ++u) {
      for (int v = u + 1; v < S; ++v) {
        int pair = inst.demand.pairIndex(u, v);
        for (int t = 0; t < T; ++t) {
          double arr = cat.arrivalODConst[static_cast<size_t>(pair) * T + t];
          int col = cat.arrivalOD[static_cast<size_t>(pair) * T + t];
          if (col >= 0) arr = mip.values[col];
          revenue += nu[static_cast<size_t>(pair) * T + t] *
                     (arr + static_cast<double>(inst.demand.reservedAt(u, v, t)));
        }
      }
    }
  }
  table.rows.push_back({formatNumber(plan.pricingFloor),
                        formatNumber(plan.pricingOffPeakFactor), status,
                        mip.hasIncumbent ? formatNumber(mip.objective) : "-",
                        mip.hasIncumbent ? formatNumber(revenue) : "-",
                        formatNumber(baselineRevenue(inst) +
                                     [&] {
                                       double r = 0.0;
                                       for (int u = 0; u < S - 1; ++u)
                                         for (int v = u + 1; v < S; ++v)
                                           for (int t = 0; t < T; ++t)
                                             r += inst.fares.at(u, v) *
                                                  inst.demand.reservedAt(u, v, t);
                                       return r;
                                     }())});
  return table;
}

ResultTable timetableExport(const Instance& inst, const Timetable& timetable) {
  ResultTable table;
  table.name = "timetable";
  table.header = {"train", "station", "equivalentDeparture",
                  "physicalTimestamp", "physicalClock"};
  int startSeconds = 0;
  {
    int h = 0, m = 0;
    if (sscanf(inst.horizon.physicalStart.c_str(), "%d:%d", &h, &m) == 2)
      startSeconds = h * 3600 + m * 60;
  }
  for (size_t i = 0; i < timetable.departureIndex.size(); ++i) {
    for (int u = 0; u < inst.line.stationCount; ++u) {
      int offset =
          equivalentTimeOffset(inst.line, inst.horizon.timestampSeconds, u);
      int dep0 = timetable.departureIndex[i];
      int physicalTs = dep0 + 1 + offset;  // 1-based
      int clock = startSeconds +
                  (dep0 + offset) * inst.horizon.timestampSeconds;
      char hhmmss[16];
      snprintf(hhmmss, sizeof(hhmmss), "%02d:%02d:%02d", clock / 3600,
               (clock % 3600) / 60, clock % 60);
      table.rows.push_back({formatNumber(static_cast<double>(i + 1)),
                            formatNumber(static_cast<double>(u + 1)),
                            formatNumber(static_cast<double>(dep0 + 1)),
                            formatNumber(static_cast<double>(physicalTs)),
                            hhmmss});
    }
  }
  return table;
}

void emitReports(const std::vector<ResultTable>& tables,
                 const ExperimentPlan& plan, const std::string& outputDir,
                 double wallSeconds) {
  fs::create_directories(outputDir);
  for (const auto& t : tables) {
    std::ofstream out(fs::path(outputDir) / (t.name + ".csv"),
                      std::ios::binary);
    if (!out) throw std::runtime_error("cannot write to " + outputDir);
    out << t.toCsv();
  }
  ordered_json manifest;
  manifest["tool"] = "bdtt";
  manifest["version"] = "1.0.0";
  manifest["instance"] = plan.instance.name;
  manifest["variant"] = variantName(plan.config.variant);
  manifest["gapPercent"] = plan.config.gapPercent;
  manifest["timeLimitSeconds"] = plan.config.timeLimitSeconds;
  manifest["seed"] = plan.config.seed;
  manifest["useValidInequalities"] = plan.config.useValidInequalities;
  manifest["tightenedBigM"] = plan.config.tightenedBigM;
  manifest["wallSeconds"] = wallSeconds;
  std::ofstream out(fs::path(outputDir) / "manifest.json", std::ios::binary);
  out << manifest.dump(1) << "\n";
}

}  // namespace bdtt
