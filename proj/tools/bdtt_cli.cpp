#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bdtt/benders.hpp"
#include "bdtt/evaluator.hpp"
#include "bdtt/experiments.hpp"
#include "bdtt/instance.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitTimeLimit = 3;
constexpr int kExitInputError = 4;

struct CommonArgs {
  std::string instancePath;
  std::string batongShape;
  uint64_t seed = 1;
  double gap = 0.0;
  double timeLimit = 600.0;
  std::string variant = "TTCBD";
  std::string outDir;
  bool noValidInequalities = false;
  bool looseBigM = false;
};

void addCommon(CLI::App* cmd, CommonArgs& args, bool needsInstance = true) {
  if (needsInstance) {
    cmd->add_option("--instance", args.instancePath, "instance JSON file");
    cmd->add_option("--batong", args.batongShape,
                    "built-in Batong shape (H..L) instead of --instance");
  }
  cmd->add_option("--seed", args.seed, "seed for built-in instances");
  cmd->add_option("--gap", args.gap, "relative gap tolerance, percent");
  cmd->add_option("--time-limit", args.timeLimit, "seconds");
  cmd->add_option("--variant", args.variant,
                  "BD|TCBD|TTCBD|TTSCBD|TRTCBD|TRTSCBD");
  cmd->add_option("--out", args.outDir, "output directory for reports");
  cmd->add_flag("--no-valid-inequalities", args.noValidInequalities,
                "build the master problem without the valid inequalities");
  cmd->add_flag("--loose-bigm", args.looseBigM,
                "use the single global big-M instead of the tightened one");
}

bdtt::Instance loadFrom(const CommonArgs& args) {
  if (!args.batongShape.empty())
    return bdtt::builtinBatongInstance(args.batongShape, args.seed);
  if (args.instancePath.empty())
    throw bdtt::InstanceIoError("no --instance or --batong given");
  return bdtt::loadInstance(args.instancePath);
}

bdtt::SolverConfig configFrom(const CommonArgs& args) {
  bdtt::SolverConfig cfg;
  cfg.variant = bdtt::variantFromName(args.variant);
  cfg.gapPercent = args.gap;
  cfg.timeLimitSeconds = args.timeLimit;
  cfg.seed = args.seed;
  cfg.useValidInequalities = !args.noValidInequalities;
  cfg.tightenedBigM = !args.looseBigM;
  return cfg;
}

void printTable(const bdtt::ResultTable& t) { std::cout << t.toCsv(); }

int emitAndExit(std::vector<bdtt::ResultTable> tables,
                bdtt::ExperimentPlan& plan, const CommonArgs& args,
                double wallSeconds, int code) {
  for (const auto& t : tables) printTable(t);
  if (!args.outDir.empty())
    bdtt::emitReports(tables, plan, args.outDir, wallSeconds);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact solver for integrated trip-booking, passenger-directing "
               "and train-timetabling on a single transit line"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic instance");
  bdtt::GeneratorSettings gs;
  std::string genOut = "instance.json";
  std::string genBatong;
  gen->add_option("--stations", gs.stationCount);
  gen->add_option("--horizon", gs.horizonLength);
  gen->add_option("--trains", gs.trainCount);
  gen->add_option("--peak-start", gs.peakStart);
  gen->add_option("--peak-end", gs.peakEnd);
  gen->add_option("--demand", gs.totalDemand);
  gen->add_option("--booking", gs.bookingRatio);
  gen->add_option("--seed", gs.seed);
  gen->add_option("--max-shift", gs.maxShift);
  gen->add_option("--fairness", gs.fairness);
  gen->add_option("--capacity", gs.capacity);
  gen->add_option("--headway-min", gs.headwayMin);
  gen->add_option("--headway-max", gs.headwayMax);
  gen->add_option("--trains-capacity", gs.capacity);
  gen->add_option("--batong", genBatong, "emit a built-in Batong shape (H..L)");
  gen->add_option("--file", genOut, "output path");

  CommonArgs validateArgs, solveArgs, variantsArgs, sweepArgs, paretoArgs,
      baselinesArgs, pricingArgs;
  auto* validate = app.add_subcommand("validate", "validate an instance file");
  addCommon(validate, validateArgs);

  auto* solve = app.add_subcommand("solve", "run the decomposition solver");
  addCommon(solve, solveArgs);

  auto* variants = app.add_subcommand(
      "variants", "compare the six solver variants plus the reference");
  addCommon(variants, variantsArgs);

  auto* sweep = app.add_subcommand("sweep", "parameter sensitivity sweep");
  addCommon(sweep, sweepArgs);
  std::string sweepParam = "maxShift";
  std::vector<double> sweepValues;
  sweep->add_option("--param", sweepParam,
                    "maxShift|bookingRatio|fairness|trainCount");
  sweep->add_option("--values", sweepValues, "grid values")->delimiter(',');

  auto* pareto = app.add_subcommand("pareto",
                                    "waiting-vs-lost-revenue frontier");
  addCommon(pareto, paretoArgs);
  int paretoSteps = 5;
  double paretoStep = 1.0;
  pareto->add_option("--steps", paretoSteps);
  pareto->add_option("--step-size", paretoStep, "percent of baseline revenue");

  auto* baselines = app.add_subcommand(
      "baselines", "compare against PFC / relaxed PFC / SPE baselines");
  addCommon(baselines, baselinesArgs);

  auto* pricing = app.add_subcommand("pricing",
                                     "off-peak pricing extension run");
  addCommon(pricing, pricingArgs);
  double pricingFloor = 0.9;
  double offPeakFactor = 0.8;
  pricing->add_option("--floor", pricingFloor,
                      "revenue floor as a fraction of the static-fare revenue");
  pricing->add_option("--offpeak-factor", offPeakFactor,
                      "off-peak fare multiplier");

  CLI11_PARSE(app, argc, argv);
  auto started = std::chrono::steady_clock::now();
  auto wall = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         started)
        .count();
  };

  try {
    if (gen->parsed()) {
      bdtt::Instance inst = genBatong.empty()
                                ? bdtt::generateSyntheticInstance(gs)
                                : bdtt::builtinBatongInstance(genBatong, gs.seed);
      bdtt::saveInstance(inst, genOut);
      std::cout << "wrote " << genOut << " (" << inst.name << ")\n";
      return kExitOk;
    }
    if (validate->parsed()) {
      bdtt::Instance inst = loadFrom(validateArgs);
      auto violations = bdtt::validateInstance(inst);
      for (const auto& v : violations)
        std::cout << v.field << ": " << v.message << "\n";
      if (violations.empty()) {
        std::cout << "ok\n";
        return kExitOk;
      }
      return kExitInputError;
    }
    if (solve->parsed()) {
      bdtt::ExperimentPlan plan;
      plan.kind = bdtt::ExperimentKind::Solve;
      plan.instance = loadFrom(solveArgs);
      plan.config = configFrom(solveArgs);
      bdtt::BDTTResult res = bdtt::solveBDTT(
          plan.instance, bdtt::weightsOf(plan.instance), plan.config);
      std::vector<bdtt::ResultTable> tables;
      if (res.status != bdtt::SolveStatus::Infeasible) {
        bdtt::EvaluationReport rep = bdtt::evaluateObjective(
            plan.instance, res.bundle, bdtt::weightsOf(plan.instance));
        std::cout << bdtt::reportToText(rep);
        std::cout << "objectiveFinal=" << res.objective << "\n";
        std::cout << "status=" << (res.status == bdtt::SolveStatus::Optimal
                                       ? "ok"
                                       : "timeLimit")
                  << "\n";
        tables.push_back(
            bdtt::timetableExport(plan.instance, res.bundle.timetable));
        bdtt::ResultTable traj;
        traj.name = "bounds";
        traj.header = {"seconds", "lowerBound", "upperBound"};
        for (const auto& e : res.stats.trajectory)
          traj.rows.push_back({bdtt::formatNumber(e.seconds),
                               bdtt::formatNumber(e.lowerBound),
                               std::isfinite(e.upperBound)
                                   ? bdtt::formatNumber(e.upperBound)
                                   : "inf"});
        tables.push_back(std::move(traj));
      } else {
        std::cout << "status=infeasible\n";
      }
      int code = res.status == bdtt::SolveStatus::Optimal ? kExitOk
                 : res.status == bdtt::SolveStatus::TimeLimit
                     ? kExitTimeLimit
                     : kExitInfeasible;
      return emitAndExit(std::move(tables), plan, solveArgs, wall(), code);
    }
    if (variants->parsed()) {
      bdtt::ExperimentPlan plan;
      plan.kind = bdtt::ExperimentKind::Variants;
      plan.instance = loadFrom(variantsArgs);
      plan.config = configFrom(variantsArgs);
      auto table = bdtt::runVariantComparison(plan);
      return emitAndExit({table}, plan, variantsArgs, wall(), kExitOk);
    }
    if (sweep->parsed()) {
      bdtt::ExperimentPlan plan;
      plan.kind = bdtt::ExperimentKind::Sweep;
      plan.instance = loadFrom(sweepArgs);
      plan.config = configFrom(sweepArgs);
      plan.sweepParam = sweepParam;
      plan.sweepValues = sweepValues;
      if (sweepValues.empty()) {
        std::cerr << "sweep: --values must be non-empty\n";
        return kExitInputError;
      }
      auto table = bdtt::runSensitivitySweep(plan);
      return emitAndExit({table}, plan, sweepArgs, wall(), kExitOk);
    }
    if (pareto->parsed()) {
      bdtt::ExperimentPlan plan;
      plan.kind = bdtt::ExperimentKind::Pareto;
      plan.instance = loadFrom(paretoArgs);
      plan.config = configFrom(paretoArgs);
      plan.paretoSteps = paretoSteps;
      plan.paretoStepPercent = paretoStep;
      auto table = bdtt::runParetoFrontier(plan);
      return emitAndExit({table}, plan, paretoArgs, wall(), kExitOk);
    }
    if (baselines->parsed()) {
      bdtt::ExperimentPlan plan;
      plan.kind = bdtt::ExperimentKind::Baselines;
      plan.instance = loadFrom(baselinesArgs);
      plan.config = configFrom(baselinesArgs);
      auto table = bdtt::runBaselineComparison(plan);
      return emitAndExit({table}, plan, baselinesArgs, wall(), kExitOk);
    }
    if (pricing->parsed()) {
      bdtt::ExperimentPlan plan;
      plan.kind = bdtt::ExperimentKind::Pricing;
      plan.instance = loadFrom(pricingArgs);
      plan.config = configFrom(pricingArgs);
      plan.pricingFloor = pricingFloor;
      plan.pricingOffPeakFactor = offPeakFactor;
      auto table = bdtt::runPricing(plan);
      return emitAndExit({table}, plan, pricingArgs, wall(), kExitOk);
    }
  } catch (const bdtt::InstanceIoError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    for (const auto& v : e.violations)
      std::cerr << "  " << v.field << ": " << v.message << "\n";
    return kExitInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
