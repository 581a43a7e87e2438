#include <cmath>
#include <filesystem>
#include <fstream>

#include "bdtt/experiments.hpp"
#include "bdtt/formulation.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace bdtt;
using testsupport::fleetSizeFixture;
using testsupport::tinyT1;
using testsupport::tinyT1Oversat;

namespace {

ExperimentPlan planFor(const Instance& inst) {
  ExperimentPlan plan;
  plan.instance = inst;
  plan.config.gapPercent = 0.0;
  plan.config.timeLimitSeconds = 180;
  return plan;
}

double cell(const ResultTable& t, size_t row, const std::string& column) {
  for (size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c] == column) return std::stod(t.rows[row][c]);
  FAIL("column not found: " << column);
  return 0.0;
}

std::string cellText(const ResultTable& t, size_t row, const std::string& column) {
  for (size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c] == column) return t.rows[row][c];
  FAIL("column not found: " << column);
  return {};
}

}  // namespace

TEST_CASE("variant comparison: seven rows, identical objectives") {
  ExperimentPlan plan = planFor(tinyT1());
  plan.kind = ExperimentKind::Variants;
  ResultTable table = runVariantComparison(plan);
  REQUIRE(table.rows.size() == 7);
  double reference = cell(table, 0, "objective");
  for (size_t r = 1; r < table.rows.size(); ++r) {
    CHECK(cell(table, r, "objective") == doctest::Approx(reference));
    CHECK(cellText(table, r, "status") == "ok");
  }
}

TEST_CASE("sensitivity sweep: infeasible and feasible grid points") {
  ExperimentPlan plan = planFor(fleetSizeFixture());
  plan.kind = ExperimentKind::Sweep;
  plan.sweepParam = "maxShift";
  plan.sweepValues = {0.0, 10.0};
  plan.config.timeLimitSeconds = 300;
  ResultTable table = runSensitivitySweep(plan);
  REQUIRE(table.rows.size() == 2);
  CHECK(cellText(table, 0, "status") == "infeasible");
  CHECK(cellText(table, 1, "status") == "ok");
}

TEST_CASE("sensitivity sweep: single point emits one row") {
  ExperimentPlan plan = planFor(tinyT1());
  plan.kind = ExperimentKind::Sweep;
  plan.sweepParam = "fairness";
  plan.sweepValues = {0.5};
  ResultTable table = runSensitivitySweep(plan);
  CHECK(table.rows.size() == 1);
}

TEST_CASE("booking-ratio rebalance keeps totals and hits the target") {
  Instance inst = tinyT1();
  int64_t total = inst.demand.totalFree() + inst.demand.totalReserved();
  Instance half = withBookingRatio(inst, 0.5);
  CHECK(half.demand.totalFree() + half.demand.totalReserved() == total);
  CHECK(half.demand.totalReserved() == std::llround(0.5 * total));
  Instance none = withBookingRatio(inst, 0.0);
  CHECK(none.demand.totalReserved() == 0);
}

TEST_CASE("pareto frontier: waiting is non-increasing in the budget") {
  ExperimentPlan plan = planFor(tinyT1Oversat());
  plan.kind = ExperimentKind::Pareto;
  plan.paretoSteps = 5;
  plan.paretoStepPercent = 1.0;
  ResultTable table = runParetoFrontier(plan);
  REQUIRE(table.rows.size() >= 2);
  double prev = kInfinity;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    if (cellText(table, r, "status") != "ok") continue;
    double ft = cell(table, r, "waitingTimestamps");
    CHECK(ft <= prev + 1e-9);
    prev = ft;
  }
  // Determinism: identical budgets yield identical waiting.
  ResultTable again = runParetoFrontier(plan);
  CHECK(table.toCsv() == again.toCsv());
}

TEST_CASE("pareto frontier: zero step size emits the anchor only") {
  ExperimentPlan plan = planFor(tinyT1());
  plan.kind = ExperimentKind::Pareto;
  plan.paretoSteps = 5;
  plan.paretoStepPercent = 0.0;
  ResultTable table = runParetoFrontier(plan);
  CHECK(table.rows.size() == 1);
}

TEST_CASE("baseline comparison on the undersaturated fixture") {
  ExperimentPlan plan = planFor(tinyT1());
  plan.kind = ExperimentKind::Baselines;
  ResultTable table = runBaselineComparison(plan);
  REQUIRE(table.rows.size() >= 4);
  CHECK(table.rows[0][0] == "BDDT");
  CHECK(cellText(table, 0, "status") == "ok");
  // PFC under the same timetable cannot beat the integrated optimum.
  if (cellText(table, 1, "status") == "ok") {
    CHECK(cell(table, 0, "waitingTimestamps") + 5.0 * cell(table, 0, "subsidy") <=
          cell(table, 1, "waitingTimestamps") + 5.0 * cell(table, 1, "subsidy") + 1e-6);
  }
}

TEST_CASE("pricing runner emits a machine-readable row") {
  ExperimentPlan plan = planFor(tinyT1());
  plan.kind = ExperimentKind::Pricing;
  plan.pricingFloor = 0.0;
  plan.pricingOffPeakFactor = 0.8;
  ResultTable table = runPricing(plan);
  REQUIRE(table.rows.size() == 1);
  CHECK(cellText(table, 0, "status") == "ok");
}

TEST_CASE("timetable export converts equivalent to physical time") {
  Instance inst = tinyT1();  // run+dwell = 2 timestamps per hop
  Timetable tt{{3, 6}};
  ResultTable table = timetableExport(inst, tt);
  REQUIRE(table.rows.size() == 2 * 3);
  // Train 1 at station 2: physical = equivalent + offset(2) = 4 + 2.
  CHECK(cell(table, 1, "train") == doctest::Approx(1.0));
  CHECK(cell(table, 1, "station") == doctest::Approx(2.0));
  CHECK(cell(table, 1, "equivalentDeparture") == doctest::Approx(4.0));
  CHECK(cell(table, 1, "physicalTimestamp") == doctest::Approx(6.0));
}

TEST_CASE("emitReports writes byte-stable CSVs and a manifest") {
  ExperimentPlan plan = planFor(tinyT1());
  plan.kind = ExperimentKind::Sweep;
  plan.sweepParam = "fairness";
  plan.sweepValues = {0.0, 0.5};
  ResultTable a = runSensitivitySweep(plan);
  ResultTable b = runSensitivitySweep(plan);
  CHECK(a.toCsv() == b.toCsv());

  auto dir = std::filesystem::temp_directory_path() / "bdtt_reports_test";
  std::filesystem::remove_all(dir);
  emitReports({a}, plan, dir.string(), 1.0);
  CHECK(std::filesystem::exists(dir / "sweep.csv"));
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  std::ifstream in(dir / "sweep.csv", std::ios::binary);
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  CHECK(contents == a.toCsv());
  std::filesystem::remove_all(dir);
}
