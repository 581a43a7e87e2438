#include <cstdio>
#include <filesystem>

#include "bdtt/instance.hpp"
#include "doctest.h"

using namespace bdtt;

namespace {

StationLine fourStationLine() {
  // Section run + dwell = 2 timestamps per hop (60 s each, sigma 60 s).
  StationLine line;
  line.stationCount = 4;
  line.sectionRunTimeSeconds = {60, 60, 60};
  line.dwellTimeSeconds = {60, 60, 60, 60};
  return line;
}

}  // namespace

TEST_CASE("mapToEquivalentTime: station 1 is the identity") {
  StationLine line = fourStationLine();
  TimeHorizon hz;
  hz.timestampSeconds = 60;
  hz.horizonLength = 8;
  hz.peak.assign(8, 0);
  auto t = mapToEquivalentTime(line, hz, 1, 5);
  REQUIRE(t.has_value());
  CHECK(*t == 5);
}

TEST_CASE("mapToEquivalentTime: downstream departures skew back to 1") {
  // First train departing physically at 1, 3, 5, 7 maps to equivalent 1.
  StationLine line = fourStationLine();
  TimeHorizon hz;
  hz.timestampSeconds = 60;
  hz.horizonLength = 8;
  hz.peak.assign(8, 0);
  CHECK(*mapToEquivalentTime(line, hz, 2, 3) == 1);
  CHECK(*mapToEquivalentTime(line, hz, 3, 5) == 1);
  CHECK(*mapToEquivalentTime(line, hz, 4, 7) == 1);
}

TEST_CASE("mapToEquivalentTime: out of range is a value, not an error") {
  StationLine line = fourStationLine();
  TimeHorizon hz;
  hz.timestampSeconds = 60;
  hz.horizonLength = 3;
  hz.peak.assign(3, 0);
  CHECK(!mapToEquivalentTime(line, hz, 4, 3).has_value());
}

TEST_CASE("equivalent-time offset strictly increases along the line") {
  StationLine line;
  line.stationCount = 6;
  line.sectionRunTimeSeconds = {60, 120, 60, 180, 120};
  line.dwellTimeSeconds = {60, 60, 0, 60, 60, 0};
  int prev = -1;
  for (int u = 0; u < 6; ++u) {
    int off = equivalentTimeOffset(line, 60, u);
    CHECK(off > prev);
    prev = off;
  }
}

TEST_CASE("validateInstance: well-formed synthetic instance is clean") {
  GeneratorSettings g;
  g.stationCount = 6;
  g.horizonLength = 20;
  g.trainCount = 4;
  g.peakStart = 5;
  g.peakEnd = 15;
  g.totalDemand = 500;
  Instance inst = generateSyntheticInstance(g);
  CHECK(validateInstance(inst).empty());
}

TEST_CASE("validateInstance: named violations") {
  GeneratorSettings g;
  g.stationCount = 4;
  g.horizonLength = 12;
  g.trainCount = 2;
  Instance inst = generateSyntheticInstance(g);

  SUBCASE("headwayMin = 0") {
    inst.params.headwayMin = 0;
    auto v = validateInstance(inst);
    REQUIRE(!v.empty());
    bool named = false;
    for (const auto& viol : v)
      if (viol.field.find("headwayMin") != std::string::npos) named = true;
    CHECK(named);
  }
  SUBCASE("fleet cannot fit horizon") {
    inst.params.trainCount = 10;
    inst.params.headwayMin = 7;
    inst.horizon.horizonLength = 60;  // demand mask mismatch is also flagged
    auto v = validateInstance(inst);
    bool found = false;
    for (const auto& viol : v)
      if (viol.message.find("fleet cannot fit horizon") != std::string::npos)
        found = true;
    CHECK(found);
  }
  SUBCASE("negative demand entry") {
    inst.demand.freeAt(0, 1, 3) = -2;
    auto v = validateInstance(inst);
    bool found = false;
    for (const auto& viol : v)
      if (viol.field == "demand.free") found = true;
    CHECK(found);
  }
}

TEST_CASE("generateSyntheticInstance: determinism and exact totals") {
  GeneratorSettings g;
  g.stationCount = 5;
  g.horizonLength = 24;
  g.trainCount = 4;
  g.peakStart = 6;
  g.peakEnd = 18;
  g.totalDemand = 1000;
  g.bookingRatio = 0.5;
  g.seed = 1;
  Instance a = generateSyntheticInstance(g);
  Instance b = generateSyntheticInstance(g);
  CHECK(a == b);
  CHECK(instanceToJson(a) == instanceToJson(b));  // byte-for-byte

  CHECK(a.demand.totalFree() + a.demand.totalReserved() == 1000);
  int64_t reserved = a.demand.totalReserved();
  CHECK(reserved >= 450);
  CHECK(reserved <= 550);

  GeneratorSettings g0 = g;
  g0.bookingRatio = 0.0;
  CHECK(generateSyntheticInstance(g0).demand.totalReserved() == 0);

  GeneratorSettings gOther = g;
  gOther.seed = 2;
  CHECK(!(generateSyntheticInstance(gOther) == a));

  CHECK_THROWS_AS(generateSyntheticInstance([] {
                    GeneratorSettings bad;
                    bad.stationCount = 1;
                    return bad;
                  }()),
                  std::invalid_argument);
}

TEST_CASE("builtinBatongInstance: template facts") {
  Instance h = builtinBatongInstance("H", 11);
  CHECK(h.line.stationCount == 13);
  CHECK(h.horizon.horizonLength == 60);
  CHECK(h.params.trainCount == 6);
  CHECK(h.params.capacity == 2000);
  CHECK(h.params.headwayMin == 2);   // 120 s
  CHECK(h.params.headwayMax == 6);   // 360 s
  CHECK(h.params.farePaidFraction == doctest::Approx(0.8));
  for (int u = 0; u < 13; ++u) CHECK(h.line.dwellTimeSeconds[u] == 60);
  for (int s : {0, 1, 2, 3, 4, 10}) CHECK(h.line.sectionRunTimeSeconds[s] == 120);
  for (int s : {5, 6, 7, 8, 9, 11}) CHECK(h.line.sectionRunTimeSeconds[s] == 180);
  CHECK(h.fares.at(0, 12) == doctest::Approx(5.0));
  CHECK(h.fares.at(11, 12) == doctest::Approx(3.0));
  CHECK(validateInstance(h).empty());

  Instance l = builtinBatongInstance("L", 3);
  CHECK(l.horizon.horizonLength == 120);
  CHECK(l.params.trainCount == 33);
  CHECK(l.fares.at(11, 12) == doctest::Approx(3.0));

  CHECK_THROWS_AS(builtinBatongInstance("Z", 1), std::invalid_argument);
}

TEST_CASE("instance JSON round trip") {
  GeneratorSettings g;
  g.stationCount = 4;
  g.horizonLength = 10;
  g.trainCount = 2;
  g.totalDemand = 200;
  Instance inst = generateSyntheticInstance(g);

  std::string path = (std::filesystem::temp_directory_path() /
                      "bdtt_roundtrip.json")
                         .string();
  saveInstance(inst, path);
  Instance loaded = loadInstance(path);
  CHECK(loaded == inst);
  std::remove(path.c_str());
}

TEST_CASE("instance JSON schema errors name the field") {
  GeneratorSettings g;
  g.stationCount = 4;
  g.horizonLength = 10;
  g.trainCount = 2;
  Instance inst = generateSyntheticInstance(g);
  std::string text = instanceToJson(inst);

  SUBCASE("missing capacity") {
    auto pos = text.find("\"capacity\"");
    REQUIRE(pos != std::string::npos);
    std::string broken = text;
    broken.replace(pos, 10, "\"capacityX\"");
    try {
      instanceFromJson(broken);
      FAIL("expected schema error");
    } catch (const InstanceIoError& e) {
      CHECK(std::string(e.what()).find("capacity") != std::string::npos);
    }
  }
  SUBCASE("negative demand rejected by validation") {
    std::string json = text;
    auto pos = json.find("\"free\": [");
    REQUIRE(pos != std::string::npos);
    json.insert(pos + 9, "[1,2,3,-99],");
    try {
      instanceFromJson(json);
      FAIL("expected validation failure");
    } catch (const InstanceIoError& e) {
      CHECK(!e.violations.empty());
    }
  }
  SUBCASE("wrong schema version") {
    std::string broken = text;
    auto pos = broken.find("\"schemaVersion\": 1");
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, 18, "\"schemaVersion\": 9");
    CHECK_THROWS_AS(instanceFromJson(broken), InstanceIoError);
  }
  SUBCASE("parse failure") {
    CHECK_THROWS_AS(instanceFromJson("{ not json"), InstanceIoError);
  }
}

TEST_CASE("fairness tensor broadcast round trip") {
  GeneratorSettings g;
  g.stationCount = 3;
  g.horizonLength = 8;
  g.trainCount = 2;
  Instance inst = generateSyntheticInstance(g);
  // Full-resolution tensor survives the file format.
  inst.params.fairness.assign(
      static_cast<size_t>(inst.params.trainCount) * 3 * 3, 0.25);
  inst.params.fairness[(0 * 3 + 0) * 3 + 1] = 0.5;  // (i,u,v) = (0,0,1)
  Instance again = instanceFromJson(instanceToJson(inst));
  CHECK(again == inst);
  CHECK(again.params.fairnessAt(0, 0, 1, 3) == doctest::Approx(0.5));
}
