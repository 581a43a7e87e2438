#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdtt {

// Portable counter-based PRNG (splitmix64). Every random draw in the
// generator is a pure function of (seed, counter), so instances are
// bit-reproducible across platforms.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double uniform01(uint64_t seed, uint64_t counter) {
  uint64_t h = splitmix64(seed ^ splitmix64(counter));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

struct StationLine {
  int stationCount = 0;
  std::vector<int> sectionRunTimeSeconds;  // |S|-1 entries, > 0
  std::vector<int> dwellTimeSeconds;       // |S| entries, >= 0

  bool operator==(const StationLine&) const = default;
};

struct TimeHorizon {
  int timestampSeconds = 60;  // sigma
  int horizonLength = 0;      // |T|
  std::vector<uint8_t> peak;  // size |T|, 0-based mask of peak timestamps
  std::string physicalStart = "06:00";  // clock time of timestamp 1, station 1

  bool isPeak(int t0) const { return peak[t0] != 0; }
  bool operator==(const TimeHorizon&) const = default;
};

// OD demand indexed by (origin u, destination v > u, equivalent arrival
// timestamp). All indices 0-based internally.
struct DemandProfile {
  int stations = 0;
  int horizon = 0;
  std::vector<int64_t> free;      // pairIndex(u,v) * T + t
  std::vector<int64_t> reserved;

  static int pairCount(int stations) { return stations * (stations - 1) / 2; }
  int pairIndex(int u, int v) const {
    // upper-triangular enumeration, row-major
    return u * (2 * stations - u - 1) / 2 + (v - u - 1);
  }
  int64_t& freeAt(int u, int v, int t) {
    return free[static_cast<size_t>(pairIndex(u, v)) * horizon + t];
  }
  int64_t freeAt(int u, int v, int t) const {
    return free[static_cast<size_t>(pairIndex(u, v)) * horizon + t];
  }
  int64_t& reservedAt(int u, int v, int t) {
    return reserved[static_cast<size_t>(pairIndex(u, v)) * horizon + t];
  }
  int64_t reservedAt(int u, int v, int t) const {
    return reserved[static_cast<size_t>(pairIndex(u, v)) * horizon + t];
  }
  void resize(int s, int h) {
    stations = s;
    horizon = h;
    free.assign(static_cast<size_t>(pairCount(s)) * h, 0);
    reserved.assign(static_cast<size_t>(pairCount(s)) * h, 0);
  }
  int64_t totalFree() const;
  int64_t totalReserved() const;

  bool operator==(const DemandProfile&) const = default;
};

struct OperationalParams {
  int trainCount = 0;
  int64_t capacity = 0;           // passengers per train
  int headwayMin = 1;             // timestamps
  int headwayMax = 1;             // timestamps
  int maxShift = 0;               // timestamps a trip may move earlier
  double farePaidFraction = 1.0;  // fraction of fare paid after discount
  // Fairness floor per (train, origin, destination); size 1 means a scalar
  // broadcast over all indices.
  std::vector<double> fairness{1.0};
  double weightWaiting = 1.0;
  double weightSubsidy = 1.0;

  double fairnessAt(int i, int u, int v, int stations) const {
    if (fairness.size() == 1) return fairness[0];
    return fairness[(static_cast<size_t>(i) * stations + u) * stations + v];
  }
  bool fairnessIsScalar() const { return fairness.size() == 1; }

  bool operator==(const OperationalParams&) const = default;
};

struct FareTable {
  int stations = 0;
  std::vector<double> fare;  // upper-tri by pair index (same order as demand)

  double at(int u, int v) const {
    return fare[u * (2 * stations - u - 1) / 2 + (v - u - 1)];
  }
  double& at(int u, int v) {
    return fare[u * (2 * stations - u - 1) / 2 + (v - u - 1)];
  }
  void resize(int s, double value = 0.0) {
    stations = s;
    fare.assign(DemandProfile::pairCount(s), value);
  }
  bool operator==(const FareTable&) const = default;
};

struct Instance {
  std::string name;
  StationLine line;
  TimeHorizon horizon;
  DemandProfile demand;
  OperationalParams params;
  FareTable fares;

  bool operator==(const Instance&) const = default;
};

struct Violation {
  std::string field;
  std::string message;
};

// Equivalent-time offset of a station in timestamps: cumulative section run
// plus downstream dwell, divided by sigma. Station 0-based; offset(0) = 0.
int equivalentTimeOffset(const StationLine& line, int timestampSeconds,
                         int station);

// Maps a physical timestamp (1-based) at `station` (1-based) to the
// equivalent timestamp (1-based), or nullopt when the result falls outside
// {1..|T|}. Out-of-range is a value, not an error.
std::optional<int> mapToEquivalentTime(const StationLine& line,
                                       const TimeHorizon& horizon, int station,
                                       int physicalTimestamp);

std::vector<Violation> validateInstance(const Instance& inst);

struct GeneratorSettings {
  int stationCount = 6;
  int horizonLength = 60;
  int trainCount = 11;
  int peakStart = 10;  // 1-based inclusive
  int peakEnd = 45;    // 1-based inclusive
  int64_t totalDemand = 4000;
  double bookingRatio = 0.5;
  uint64_t seed = 1;

  // Secondary knobs with conventional defaults.
  int timestampSeconds = 60;
  int sectionRunSeconds = 60;
  int dwellSeconds = 60;
  int headwayMin = 2;
  int headwayMax = 6;
  int64_t capacity = 600;
  int maxShift = 5;
  double fairness = 0.5;
  double farePaidFraction = 0.8;
  double weightWaiting = 1.0;
  double weightSubsidy = 5.0;
  double flatFare = 3.0;
  double peakFactor = 3.0;
  // Demand shape: spread over all OD pairs, or commuter-style with origins
  // in the first 2/3 of the line heading to the last third.
  enum class OdPattern : uint8_t { Uniform, Feeder };
  OdPattern odPattern = OdPattern::Uniform;
};

// Deterministic synthetic instance: peak-shaped demand apportioned so the
// grand total equals totalDemand exactly, reserved counts apportioned to
// round(bookingRatio * totalDemand). Throws std::invalid_argument on
// stationCount < 2 or bookingRatio outside [0,1].
Instance generateSyntheticInstance(const GeneratorSettings& settings);

// Beijing Batong-line template. Shape is one of "H","I","J","K","L"
// (horizon/train-count presets); demand is synthesized with demandSeed since
// the measured OD data is not public. Throws std::invalid_argument on an
// unknown shape.
Instance builtinBatongInstance(const std::string& shape, uint64_t demandSeed);

class InstanceIoError : public std::runtime_error {
 public:
  explicit InstanceIoError(const std::string& what,
                           std::vector<Violation> violations = {})
      : std::runtime_error(what), violations(std::move(violations)) {}
  std::vector<Violation> violations;
};

std::string instanceToJson(const Instance& inst);
Instance instanceFromJson(const std::string& text);  // throws InstanceIoError
void saveInstance(const Instance& inst, const std::string& path);
Instance loadInstance(const std::string& path);  // throws InstanceIoError

}  // namespace bdtt
