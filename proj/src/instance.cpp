#include "bdtt/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace bdtt {

using ordered_json = nlohmann::ordered_json;

int64_t DemandProfile::totalFree() const {
  return std::accumulate(free.begin(), free.end(), int64_t{0});
}
int64_t DemandProfile::totalReserved() const {
  return std::accumulate(reserved.begin(), reserved.end(), int64_t{0});
}

int equivalentTimeOffset(const StationLine& line, int timestampSeconds,
                         int station) {
  int seconds = 0;
  for (int m = 0; m < station; ++m) {
    seconds += line.sectionRunTimeSeconds[m];
    seconds += line.dwellTimeSeconds[m + 1];
  }
  return seconds / timestampSeconds;
}

std::optional<int> mapToEquivalentTime(const StationLine& line,
                                       const TimeHorizon& horizon, int station,
                                       int physicalTimestamp) {
  int offset = equivalentTimeOffset(line, horizon.timestampSeconds, station - 1);
  int t = physicalTimestamp - offset;
  if (t < 1 || t > horizon.horizonLength) return std::nullopt;
  return t;
}

std::vector<Violation> validateInstance(const Instance& inst) {
  std::vector<Violation> out;
  auto flag = [&](const std::string& field, const std::string& message) {
    out.push_back({field, message});
  };
  const auto& line = inst.line;
  const auto& hz = inst.horizon;
  const auto& p = inst.params;
  const int S = line.stationCount;
  const int T = hz.horizonLength;

  if (S < 2) flag("line.stationCount", "need at least 2 stations");
  if (static_cast<int>(line.sectionRunTimeSeconds.size()) != std::max(S - 1, 0))
    flag("line.sectionRunTimeSeconds", "expected exactly |S|-1 entries");
  if (static_cast<int>(line.dwellTimeSeconds.size()) != S)
    flag("line.dwellTimeSeconds", "expected exactly |S| entries");
  for (int s : line.sectionRunTimeSeconds)
    if (s <= 0) flag("line.sectionRunTimeSeconds", "section run time must be > 0");
  for (int d : line.dwellTimeSeconds)
    if (d < 0) flag("line.dwellTimeSeconds", "dwell time must be >= 0");

  if (hz.timestampSeconds <= 0) flag("horizon.timestampSeconds", "sigma must be > 0");
  if (T < 1) flag("horizon.horizonLength", "horizon must be >= 1");
  if (static_cast<int>(hz.peak.size()) != T)
    flag("horizon.peak", "peak mask size must equal horizonLength");
  if (hz.timestampSeconds > 0) {
    for (int s : line.sectionRunTimeSeconds)
      if (s % hz.timestampSeconds != 0)
        flag("line.sectionRunTimeSeconds",
             "section run time must be a multiple of sigma");
    for (int d : line.dwellTimeSeconds)
      if (d % hz.timestampSeconds != 0)
        flag("line.dwellTimeSeconds", "dwell time must be a multiple of sigma");
  }

  if (p.trainCount < 1) flag("params.trainCount", "need at least one train");
  if (p.capacity < 1) flag("params.capacity", "capacity must be >= 1");
  if (p.headwayMin < 1) flag("params.headwayMin", "headwayMin must be >= 1");
  if (p.headwayMax < p.headwayMin)
    flag("params.headwayMax", "headwayMax must be >= headwayMin");
  if (T >= 1 && p.headwayMax > T)
    flag("params.headwayMax", "headwayMax must be <= horizonLength");
  if (static_cast<int64_t>(p.trainCount) * p.headwayMin > T)
    flag("params.trainCount",
         "fleet cannot fit horizon: trainCount * headwayMin > horizonLength");
  if (p.maxShift < 0) flag("params.maxShift", "maxShift must be >= 0");
  if (p.farePaidFraction < 0.0 || p.farePaidFraction > 1.0)
    flag("params.farePaidFraction", "farePaidFraction must lie in [0,1]");
  if (p.weightWaiting < 0 || p.weightSubsidy < 0)
    flag("params.weights", "objective weights must be >= 0");
  if (p.weightWaiting == 0 && p.weightSubsidy == 0)
    flag("params.weights", "objective weights must not both be zero");
  size_t wantFairness =
      static_cast<size_t>(p.trainCount) * S * S;
  if (p.fairness.size() != 1 && p.fairness.size() != wantFairness)
    flag("params.fairness", "fairness must be a scalar or a full [i][u][v] tensor");
  for (double f : p.fairness)
    if (f < 0.0 || f > 1.0) flag("params.fairness", "fairness must lie in [0,1]");

  if (inst.demand.stations != S || inst.demand.horizon != T)
    flag("demand", "demand arrays must match |S| and |T|");
  else {
    for (int64_t d : inst.demand.free)
      if (d < 0) { flag("demand.free", "negative demand entry"); break; }
    for (int64_t d : inst.demand.reserved)
      if (d < 0) { flag("demand.reserved", "negative demand entry"); break; }
  }

  if (inst.fares.stations != S ||
      static_cast<int>(inst.fares.fare.size()) != DemandProfile::pairCount(S))
    flag("fares", "fare table must cover every OD pair");
  else {
    for (double f : inst.fares.fare)
      if (f < 0) { flag("fares", "fares must be >= 0"); break; }
  }
  return out;
}

namespace {

// Largest-remainder apportionment of `total` over nonnegative weights.
std::vector<int64_t> apportion(const std::vector<double>& weights,
                               int64_t total) {
  const size_t n = weights.size();
  double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int64_t> counts(n, 0);
  if (sum <= 0.0 || total <= 0) return counts;
  std::vector<std::pair<double, size_t>> remainders(n);
  int64_t assigned = 0;
  for (size_t i = 0; i < n; ++i) {
    double target = static_cast<double>(total) * weights[i] / sum;
    counts[i] = static_cast<int64_t>(std::floor(target));
    assigned += counts[i];
    remainders[i] = {target - std::floor(target), i};
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  int64_t leftover = total - assigned;
  for (int64_t k = 0; k < leftover && k < static_cast<int64_t>(n); ++k)
    counts[remainders[k].second] += 1;
  return counts;
}

}  // namespace

Instance generateSyntheticInstance(const GeneratorSettings& g) {
  if (g.stationCount < 2)
    throw std::invalid_argument("generateSyntheticInstance: stationCount < 2");
  if (g.bookingRatio < 0.0 || g.bookingRatio > 1.0)
    throw std::invalid_argument("generateSyntheticInstance: bookingRatio outside [0,1]");
  if (g.horizonLength < 2)
    throw std::invalid_argument("generateSyntheticInstance: horizonLength < 2");

  Instance inst;
  const int S = g.stationCount;
  const int T = g.horizonLength;
  inst.name = "synthetic-s" + std::to_string(S) + "-t" + std::to_string(T) +
              "-i" + std::to_string(g.trainCount) + "-seed" +
              std::to_string(g.seed);
  inst.line.stationCount = S;
  inst.line.sectionRunTimeSeconds.assign(S - 1, g.sectionRunSeconds);
  inst.line.dwellTimeSeconds.assign(S, g.dwellSeconds);
  inst.horizon.timestampSeconds = g.timestampSeconds;
  inst.horizon.horizonLength = T;
  inst.horizon.peak.assign(T, 0);
  for (int t = std::max(1, g.peakStart); t <= std::min(T, g.peakEnd); ++t)
    inst.horizon.peak[t - 1] = 1;
  inst.horizon.physicalStart = "06:30";
  inst.params.trainCount = g.trainCount;
  inst.params.capacity = g.capacity;
  inst.params.headwayMin = g.headwayMin;
  inst.params.headwayMax = g.headwayMax;
  inst.params.maxShift = g.maxShift;
  inst.params.farePaidFraction = g.farePaidFraction;
  inst.params.fairness = {g.fairness};
  inst.params.weightWaiting = g.weightWaiting;
  inst.params.weightSubsidy = g.weightSubsidy;
  inst.fares.resize(S, g.flatFare);
  inst.demand.resize(S, T);

  // Peak-shaped profile: piecewise-constant base with a multiplicative bump
  // inside the peak window, per-cell jitter from the counter-based PRNG.
  // Station |S| originates nothing; the last timestamp stays empty so a
  // zero-shift assignment is representable.
  auto counter = [&](uint64_t tag, int u, int v, int t) {
    return ((tag * 1000003ULL + static_cast<uint64_t>(u)) * 1000003ULL +
            static_cast<uint64_t>(v)) *
               1000003ULL +
           static_cast<uint64_t>(t);
  };
  std::vector<double> weights;
  std::vector<std::tuple<int, int, int>> cells;
  int feederCut = std::max(1, 2 * S / 3);
  for (int u = 0; u < S - 1; ++u) {
    for (int v = u + 1; v < S; ++v) {
      if (g.odPattern == GeneratorSettings::OdPattern::Feeder &&
          (u >= feederCut || v < feederCut))
        continue;  // commuters: suburban origins into the city-center tail
      double odJitter = 0.25 + 1.5 * uniform01(g.seed, counter(1, u, v, 0));
      // Pull toward the line's tail.
      double pull = 1.0 + 1.5 * static_cast<double>(v) / S;
      for (int t = 0; t + 1 < T; ++t) {
        double timeW = inst.horizon.peak[t] ? g.peakFactor : 1.0;
        double jitter = 0.6 + 0.8 * uniform01(g.seed, counter(2, u, v, t));
        weights.push_back(odJitter * pull * timeW * jitter);
        cells.push_back({u, v, t});
      }
    }
  }
  std::vector<int64_t> cellTotal = apportion(weights, g.totalDemand);

  int64_t reservedTarget =
      static_cast<int64_t>(std::llround(g.bookingRatio * g.totalDemand));
  std::vector<double> reservedWeights(cellTotal.size());
  for (size_t i = 0; i < cellTotal.size(); ++i)
    reservedWeights[i] = g.bookingRatio * static_cast<double>(cellTotal[i]);
  std::vector<int64_t> reservedCell = apportion(reservedWeights, reservedTarget);

  for (size_t i = 0; i < cells.size(); ++i) {
    auto [u, v, t] = cells[i];
    int64_t res = std::min(reservedCell[i], cellTotal[i]);
    inst.demand.reservedAt(u, v, t) = res;
    inst.demand.freeAt(u, v, t) = cellTotal[i] - res;
  }
  return inst;
}

Instance builtinBatongInstance(const std::string& shape, uint64_t demandSeed) {
  struct ShapeDef {
    int horizon;
    int trains;
    int peakStart;  // 1-based
    std::string start;
  };
  ShapeDef def;
  if (shape == "H") def = {60, 6, 6, "06:30"};
  else if (shape == "I") def = {75, 14, 31, "06:30"};
  else if (shape == "J") def = {90, 18, 31, "06:30"};
  else if (shape == "K") def = {100, 24, 11, "06:50"};
  else if (shape == "L") def = {120, 33, 31, "06:30"};
  else throw std::invalid_argument("builtinBatongInstance: unknown shape " + shape);

  GeneratorSettings g;
  g.stationCount = 13;
  g.odPattern = GeneratorSettings::OdPattern::Feeder;
  g.horizonLength = def.horizon;
  g.trainCount = def.trains;
  g.peakStart = def.peakStart;
  g.peakEnd = def.horizon;
  g.totalDemand = static_cast<int64_t>(std::llround(0.55 * 2000.0 * def.trains));
  g.bookingRatio = 0.3;
  g.seed = demandSeed;
  g.capacity = 2000;
  g.headwayMin = 2;   // 120 s
  g.headwayMax = 6;   // 360 s
  g.maxShift = 5;
  g.fairness = 0.2;
  g.farePaidFraction = 0.8;  // 20% discount
  g.weightWaiting = 1.0;
  g.weightSubsidy = 10.0;
  Instance inst = generateSyntheticInstance(g);
  inst.name = "batong-" + shape + "-seed" + std::to_string(demandSeed);
  inst.horizon.physicalStart = def.start;

  // Running and dwell times of the Batong line (seconds).
  inst.line.dwellTimeSeconds.assign(13, 60);
  inst.line.sectionRunTimeSeconds.assign(12, 120);
  for (int s = 5; s <= 9; ++s) inst.line.sectionRunTimeSeconds[s] = 180;
  inst.line.sectionRunTimeSeconds[11] = 180;

  // Distance-based fares.
  static const int fareRow[13][13] = {
      {0, 3, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5},
      {0, 0, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5},
      {0, 0, 0, 3, 3, 3, 3, 4, 4, 4, 5, 5, 5},
      {0, 0, 0, 0, 3, 3, 3, 3, 4, 4, 4, 5, 5},
      {0, 0, 0, 0, 0, 3, 3, 3, 3, 4, 4, 5, 5},
      {0, 0, 0, 0, 0, 0, 3, 3, 3, 4, 4, 4, 5},
      {0, 0, 0, 0, 0, 0, 0, 3, 3, 3, 4, 4, 4},
      {0, 0, 0, 0, 0, 0, 0, 0, 3, 3, 3, 4, 4},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 3, 3, 3, 4},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 3, 3, 3},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 3, 3},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 3},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}};
  inst.fares.resize(13, 0.0);
  for (int u = 0; u < 13; ++u)
    for (int v = u + 1; v < 13; ++v) inst.fares.at(u, v) = fareRow[u][v];
  return inst;
}

namespace {

ordered_json demandToJson(const DemandProfile& d, bool reserved) {
  ordered_json arr = ordered_json::array();
  for (int u = 0; u < d.stations - 1; ++u) {
    for (int v = u + 1; v < d.stations; ++v) {
      for (int t = 0; t < d.horizon; ++t) {
        int64_t c = reserved ? d.reservedAt(u, v, t) : d.freeAt(u, v, t);
        if (c != 0) arr.push_back({u + 1, v + 1, t + 1, c});
      }
    }
  }
  return arr;
}

std::vector<std::pair<int, int>> peakRanges(const TimeHorizon& hz) {
  std::vector<std::pair<int, int>> ranges;
  int start = -1;
  for (int t = 0; t < hz.horizonLength; ++t) {
    if (hz.peak[t] && start < 0) start = t;
    if (!hz.peak[t] && start >= 0) {
      ranges.push_back({start + 1, t});
      start = -1;
    }
  }
  if (start >= 0) ranges.push_back({start + 1, hz.horizonLength});
  return ranges;
}

}  // namespace

std::string instanceToJson(const Instance& inst) {
  ordered_json j;
  j["schemaVersion"] = 1;
  j["name"] = inst.name;
  j["line"] = {{"stationCount", inst.line.stationCount},
               {"sectionRunTimeSeconds", inst.line.sectionRunTimeSeconds},
               {"dwellTimeSeconds", inst.line.dwellTimeSeconds}};
  ordered_json ranges = ordered_json::array();
  for (auto [a, b] : peakRanges(inst.horizon)) ranges.push_back({a, b});
  j["horizon"] = {{"timestampSeconds", inst.horizon.timestampSeconds},
                  {"horizonLength", inst.horizon.horizonLength},
                  {"peakRanges", ranges},
                  {"physicalStart", inst.horizon.physicalStart}};
  ordered_json params = {
      {"trainCount", inst.params.trainCount},
      {"capacity", inst.params.capacity},
      {"headwayMinTimestamps", inst.params.headwayMin},
      {"headwayMaxTimestamps", inst.params.headwayMax},
      {"maxShiftTimestamps", inst.params.maxShift},
      {"farePaidFraction", inst.params.farePaidFraction},
      {"weightWaiting", inst.params.weightWaiting},
      {"weightSubsidy", inst.params.weightSubsidy}};
  if (inst.params.fairnessIsScalar()) {
    params["fairness"] = inst.params.fairness[0];
  } else {
    params["fairness"] = inst.params.fairness;
  }
  j["params"] = params;

  // Fares as a full matrix, zero at and below the diagonal.
  ordered_json fares = ordered_json::array();
  for (int u = 0; u < inst.line.stationCount; ++u) {
    ordered_json row = ordered_json::array();
    for (int v = 0; v < inst.line.stationCount; ++v) {
      row.push_back(v > u ? inst.fares.at(u, v) : 0.0);
    }
    fares.push_back(row);
  }
  j["fares"] = fares;
  j["demand"] = {{"free", demandToJson(inst.demand, false)},
                 {"reserved", demandToJson(inst.demand, true)}};
  return j.dump(1);
}

Instance instanceFromJson(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw InstanceIoError(std::string("parse failure: ") + e.what());
  }
  auto need = [&](const ordered_json& obj, const char* field) -> const ordered_json& {
    auto it = obj.find(field);
    if (it == obj.end())
      throw InstanceIoError(std::string("schema error: missing field \"") +
                            field + "\"");
    return *it;
  };
  int version = need(j, "schemaVersion").get<int>();
  if (version != 1)
    throw InstanceIoError("schema error: unsupported schemaVersion " +
                          std::to_string(version));

  Instance inst;
  try {
    inst.name = need(j, "name").get<std::string>();
    const auto& line = need(j, "line");
    inst.line.stationCount = need(line, "stationCount").get<int>();
    inst.line.sectionRunTimeSeconds =
        need(line, "sectionRunTimeSeconds").get<std::vector<int>>();
    inst.line.dwellTimeSeconds =
        need(line, "dwellTimeSeconds").get<std::vector<int>>();

    const auto& hz = need(j, "horizon");
    inst.horizon.timestampSeconds = need(hz, "timestampSeconds").get<int>();
    inst.horizon.horizonLength = need(hz, "horizonLength").get<int>();
    inst.horizon.physicalStart = need(hz, "physicalStart").get<std::string>();
    inst.horizon.peak.assign(std::max(inst.horizon.horizonLength, 0), 0);
    for (const auto& range : need(hz, "peakRanges")) {
      int a = range.at(0).get<int>();
      int b = range.at(1).get<int>();
      if (a < 1 || b > inst.horizon.horizonLength || a > b)
        throw InstanceIoError("schema error: peak range outside horizon");
      for (int t = a; t <= b; ++t) inst.horizon.peak[t - 1] = 1;
    }

    const auto& params = need(j, "params");
    inst.params.trainCount = need(params, "trainCount").get<int>();
    inst.params.capacity = need(params, "capacity").get<int64_t>();
    inst.params.headwayMin = need(params, "headwayMinTimestamps").get<int>();
    inst.params.headwayMax = need(params, "headwayMaxTimestamps").get<int>();
    inst.params.maxShift = need(params, "maxShiftTimestamps").get<int>();
    inst.params.farePaidFraction = need(params, "farePaidFraction").get<double>();
    const auto& fairness = need(params, "fairness");
    if (fairness.is_number()) {
      inst.params.fairness = {fairness.get<double>()};
    } else {
      inst.params.fairness = fairness.get<std::vector<double>>();
    }
    inst.params.weightWaiting = need(params, "weightWaiting").get<double>();
    inst.params.weightSubsidy = need(params, "weightSubsidy").get<double>();

    const auto& fares = need(j, "fares");
    inst.fares.resize(inst.line.stationCount, 0.0);
    if (static_cast<int>(fares.size()) != inst.line.stationCount)
      throw InstanceIoError("schema error: fares matrix must have |S| rows");
    for (int u = 0; u < inst.line.stationCount; ++u) {
      if (static_cast<int>(fares[u].size()) != inst.line.stationCount)
        throw InstanceIoError("schema error: fares matrix must be square");
      for (int v = u + 1; v < inst.line.stationCount; ++v)
        inst.fares.at(u, v) = fares[u][v].get<double>();
    }

    inst.demand.resize(inst.line.stationCount, inst.horizon.horizonLength);
    const auto& demand = need(j, "demand");
    std::vector<Violation> rangeViolations;
    auto readTriples = [&](const ordered_json& arr, bool reserved,
                           const char* field) {
      for (const auto& e : arr) {
        int u = e.at(0).get<int>();
        int v = e.at(1).get<int>();
        int t = e.at(2).get<int>();
        int64_t c = e.at(3).get<int64_t>();
        if (u < 1 || u > inst.line.stationCount || v <= u ||
            v > inst.line.stationCount) {
          rangeViolations.push_back({field, "demand entry with invalid stations"});
          continue;
        }
        if (t < 1 || t > inst.horizon.horizonLength) {
          rangeViolations.push_back(
              {field, "demand at equivalent timestamp outside {1..|T|}"});
          continue;
        }
        if (reserved)
          inst.demand.reservedAt(u - 1, v - 1, t - 1) += c;
        else
          inst.demand.freeAt(u - 1, v - 1, t - 1) += c;
      }
    };
    readTriples(need(demand, "free"), false, "demand.free");
    readTriples(need(demand, "reserved"), true, "demand.reserved");
    if (!rangeViolations.empty())
      throw InstanceIoError("validation failed", rangeViolations);
  } catch (const InstanceIoError&) {
    throw;
  } catch (const std::exception& e) {
    throw InstanceIoError(std::string("schema error: ") + e.what());
  }

  auto violations = validateInstance(inst);
  if (!violations.empty())
    throw InstanceIoError("validation failed", std::move(violations));
  return inst;
}

void saveInstance(const Instance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InstanceIoError("cannot open for writing: " + path);
  out << instanceToJson(inst);
  out << "\n";
}

Instance loadInstance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InstanceIoError("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return instanceFromJson(buf.str());
}

}  // namespace bdtt
