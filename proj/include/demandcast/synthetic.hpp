#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "demandcast/data.hpp"
#include "demandcast/timestamp.hpp"

namespace demandcast {

inline constexpr const char* kGeneratorVersion = "1";

/// Outdoor temperature model: seasonal + diurnal sinusoids, a persistent
/// day-to-day anomaly and small per-interval noise.
struct SeasonalTempSpec {
  double annual_mean = 15.5;        // deg C
  double annual_amplitude = 6.5;    // deg C, half peak-to-peak
  int warmest_day_of_year = 30;     // southern-hemisphere summer
  double diurnal_amplitude = 5.0;   // deg C
  double diurnal_peak_hour = 15.0;
  double anomaly_sd = 3.0;          // stationary sd of the daily anomaly
  double anomaly_persistence = 0.7; // AR(1) coefficient between days
  double noise_sd = 0.3;
  std::optional<double> fixed_celsius;  // overrides the model when set
};

struct SyntheticSpec {
  std::uint64_t seed = 42;
  std::size_t consumers = 16;
  std::size_t days = 365;
  int start_year = 2015;
  unsigned start_month = 3;
  unsigned start_day = 9;
  SeasonalTempSpec temperature;

  TimeStamp start() const { return TimeStamp::from_civil(start_year, start_month, start_day); }
};

struct SyntheticDataset {
  std::vector<MeterReading> readings;  // interval-major, consumers in id order
  std::vector<TimeStamp> time;
  std::vector<double> temperature;
  ClusterAssignment assignment;  // ground truth archetype, clusters 1..4
};

inline constexpr double kComfortLow = 19.0;
inline constexpr double kComfortHigh = 25.0;

/// Degrees outside the comfort band: max(0, T - 25) + max(0, 19 - T).
double comfort_excess(double celsius);

/// Deterministic for a given spec. Consumer i (0-based) gets id `C%04d` of i + 1
/// and archetype cluster (i % 4) + 1.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace demandcast
