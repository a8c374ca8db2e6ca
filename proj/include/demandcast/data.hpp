#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "demandcast/errors.hpp"
#include "demandcast/linalg.hpp"
#include "demandcast/timestamp.hpp"

namespace demandcast {

struct MeterReading {
  std::string consumer_id;
  TimeStamp timestamp;
  double kwh = 0.0;  // energy over the 30-minute interval
};

/// Parses a meter CSV with header `consumer_id,timestamp,kwh`. Errors carry
/// `source:line`. Rejects off-grid timestamps, negative or non-finite energy and
/// duplicate (consumer, timestamp) pairs.
std::vector<MeterReading> parse_meter_csv(std::istream& in, std::string_view source = "<stream>");

/// Parses and concatenates several files; duplicates are detected across files.
std::vector<MeterReading> parse_meter_files(std::span<const std::filesystem::path> paths);

void write_meter_csv(std::ostream& out, std::span<const MeterReading> readings);

/// Intervals x consumers energy matrix with a presence mask for cells not yet cleaned.
struct ConsumptionMatrix {
  MatrixXd values;  // rows: time_index, cols: consumer_ids
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> present;
  std::vector<TimeStamp> time_index;
  std::vector<std::string> consumer_ids;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  bool complete() const { return present.all(); }
  /// True when consecutive rows are exactly 30 minutes apart.
  bool uniform_grid() const;
};

/// Rows are the sorted union of timestamps, columns the sorted consumer ids.
ConsumptionMatrix build_matrix(std::span<const MeterReading> readings);

struct DropResult {
  ConsumptionMatrix matrix;
  std::vector<TimeStamp> removed;
};

/// Removes every row with at least one absent cell. Throws DataError if nothing is left.
DropResult drop_incomplete(const ConsumptionMatrix& m);

using ClusterAssignment = std::map<std::string, int>;

ClusterAssignment parse_cluster_csv(std::istream& in, std::string_view source = "<stream>");
void write_cluster_csv(std::ostream& out, const ClusterAssignment& assignment);

struct ClusterProfile {
  int cluster_id = 0;
  std::vector<std::string> members;
  std::vector<double> profile;  // mean kWh over members, per row
};

/// Per-cluster mean profile, ordered by cluster id. The matrix must be complete
/// and every column assigned.
std::vector<ClusterProfile> cluster_profile(const ConsumptionMatrix& m, const ClusterAssignment& assignment);

struct SplitSpec {
  double train_frac = 0.70;
  double val_frac = 0.10;
  double test_frac = 0.20;

  void validate() const;
};

/// Half-open index ranges [0, train_end), [train_end, val_end), [val_end, size).
struct SplitBounds {
  std::size_t train_end = 0;
  std::size_t val_end = 0;
  std::size_t size = 0;

  std::size_t train_size() const { return train_end; }
  std::size_t val_size() const { return val_end - train_end; }
  std::size_t test_size() const { return size - val_end; }
};

/// floor(frac * n) for train and validation, remainder to test. Throws DataError
/// when any segment is shorter than window_length + 1.
SplitBounds split_bounds(std::size_t n, const SplitSpec& spec, std::size_t window_length);

template <typename T>
struct ChronoSplit {
  std::span<const T> train;
  std::span<const T> val;
  std::span<const T> test;
};

template <typename T>
ChronoSplit<T> split_chrono(std::span<const T> series, const SplitSpec& spec, std::size_t window_length) {
  const SplitBounds b = split_bounds(series.size(), spec, window_length);
  return {series.subspan(0, b.train_end), series.subspan(b.train_end, b.val_size()),
          series.subspan(b.val_end)};
}

struct TemperatureReading {
  TimeStamp timestamp;
  double celsius = 0.0;
};

/// Header `timestamp,celsius`; any regular or irregular sampling accepted.
std::vector<TemperatureReading> parse_temperature_csv(std::istream& in, std::string_view source = "<stream>");
void write_temperature_csv(std::ostream& out, std::span<const TimeStamp> time, std::span<const double> celsius);

/// Linear interpolation onto `grid`. Grid points up to one hour outside the
/// observed range take the nearest observation; anything further is an error.
std::vector<double> align_temperature(std::span<const TemperatureReading> readings, std::span<const TimeStamp> grid);

/// One cluster's aligned consumption and temperature on the cleaned time grid.
struct ProfileSeries {
  int cluster_id = 0;
  std::vector<TimeStamp> time;
  std::vector<double> consumption;
  std::vector<double> temperature;

  std::size_t size() const { return time.size(); }
  /// Copy of rows [begin, end).
  ProfileSeries slice(std::size_t begin, std::size_t end) const;
};

/// Cleaned dataset: shared time grid and temperature plus per-cluster profiles.
struct Dataset {
  std::vector<TimeStamp> time;
  std::vector<double> temperature;
  std::vector<ClusterProfile> clusters;
  std::vector<TimeStamp> removed;  // timestamps dropped during cleaning

  const ClusterProfile& cluster(int id) const;
  ProfileSeries series(int cluster_id) const;
};

Dataset assemble_dataset(std::span<const MeterReading> readings, std::span<const TemperatureReading> temperature,
                         const ClusterAssignment& assignment);

/// Reads meter.csv, temperature.csv and clusters.csv from `dir`.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace demandcast
