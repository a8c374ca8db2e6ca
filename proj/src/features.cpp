#include "demandcast/features.hpp"

#include <algorithm>
#include <stdexcept>

#include "demandcast/errors.hpp"

namespace demandcast {

int interval_of_clock(int hour, int minute) {
  if (hour < 0 || hour > 23) {
    throw std::out_of_range("interval_of_clock: hour " + std::to_string(hour) + " outside 0..23");
  }
  if (minute != 0 && minute != 30) {
    throw std::out_of_range("interval_of_clock: minute " + std::to_string(minute) +
                            " is not on a 30-minute boundary");
  }
  return 2 * hour + minute / 30 + 1;
}

namespace {

void check_day_interval(int day_code, int interval) {
  if (day_code < 1 || day_code > 7) {
    throw std::out_of_range("day code " + std::to_string(day_code) + " outside 1..7");
  }
  if (interval < 1 || interval > TimeStamp::kIntervalsPerDay) {
    throw std::out_of_range("interval " + std::to_string(interval) + " outside 1..48");
  }
}

}  // namespace

double encode_time(int day_code, int interval) {
  check_day_interval(day_code, interval);
  const int concat = interval < 10 ? day_code * 10 + interval : day_code * 100 + interval;
  return static_cast<double>(concat) / kTimeFeatureMax;
}

double encode_time_linear(int day_code, int interval) {
  check_day_interval(day_code, interval);
  return static_cast<double>((day_code - 1) * TimeStamp::kIntervalsPerDay + interval) / 336.0;
}

double time_feature(const TimeStamp& t, TimeEncoding encoding) {
  return encoding == TimeEncoding::Concatenated ? encode_time(t.day_code(), t.interval())
                                                : encode_time_linear(t.day_code(), t.interval());
}

std::string to_string(TimeEncoding e) {
  return e == TimeEncoding::Concatenated ? "concatenated" : "linear";
}

TimeEncoding parse_time_encoding(std::string_view s) {
  if (s == "concatenated") return TimeEncoding::Concatenated;
  if (s == "linear") return TimeEncoding::Linear;
  throw std::invalid_argument("unknown time encoding '" + std::string(s) + "'");
}

ScalerParams fit_scaler(std::span<const double> series) {
  if (series.empty()) throw DataError("fit_scaler: empty series");
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  if (!(*hi > *lo)) {
    throw DataError("fit_scaler: constant series (value " + std::to_string(*lo) + ") cannot be scaled");
  }
  return {*lo, *hi};
}

std::vector<double> scale_all(std::span<const double> xs, const ScalerParams& s) {
  std::vector<double> out(xs.size());
  std::transform(xs.begin(), xs.end(), out.begin(), [&](double x) { return s.scale(x); });
  return out;
}

int feature_count(FeatureSet f) { return f == FeatureSet::All ? 3 : 2; }

std::string to_string(FeatureSet f) {
  switch (f) {
    case FeatureSet::ConsumptionTemperature: return "temp";
    case FeatureSet::ConsumptionTime: return "time";
    case FeatureSet::All: return "all";
  }
  return "?";
}

FeatureSet parse_feature_set(std::string_view s) {
  if (s == "temp") return FeatureSet::ConsumptionTemperature;
  if (s == "time") return FeatureSet::ConsumptionTime;
  if (s == "all") return FeatureSet::All;
  throw std::invalid_argument("unknown feature set '" + std::string(s) + "' (expected temp, time or all)");
}

VectorXd feature_vector(double consumption, double temperature, double time, FeatureSet f) {
  VectorXd x(feature_count(f));
  x[0] = consumption;
  switch (f) {
    case FeatureSet::ConsumptionTemperature: x[1] = temperature; break;
    case FeatureSet::ConsumptionTime: x[1] = time; break;
    case FeatureSet::All:
      x[1] = temperature;
      x[2] = time;
      break;
  }
  return x;
}

std::vector<FeatureWindow> build_windows(std::span<const double> consumption,
                                         std::span<const double> temperature,
                                         std::span<const TimeStamp> timestamps, std::size_t window_length,
                                         FeatureSet selector, const WindowOptions& options) {
  const std::size_t n = consumption.size();
  if (temperature.size() != n || timestamps.size() != n) {
    throw DimensionError("build_windows: series lengths differ (" + std::to_string(n) + ", " +
                         std::to_string(temperature.size()) + ", " + std::to_string(timestamps.size()) + ")");
  }
  if (window_length == 0) throw std::invalid_argument("build_windows: window length must be positive");
  if (options.stride == 0) throw std::invalid_argument("build_windows: stride must be positive");
  if (n < window_length + 1) {
    throw DataError("build_windows: series of length " + std::to_string(n) + " is shorter than window + 1 (" +
                    std::to_string(window_length + 1) + ")");
  }

  std::vector<double> time(n);
  for (std::size_t t = 0; t < n; ++t) time[t] = time_feature(timestamps[t], options.encoding);

  const std::size_t count = (n - window_length - 1) / options.stride + 1;
  std::vector<FeatureWindow> windows;
  windows.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t begin = w * options.stride;
    FeatureWindow fw;
    fw.inputs.reserve(window_length);
    fw.targets.reserve(window_length);
    for (std::size_t t = begin; t < begin + window_length; ++t) {
      fw.inputs.push_back(feature_vector(consumption[t], temperature[t], time[t], selector));
      fw.targets.push_back(consumption[t + 1]);
    }
    windows.push_back(std::move(fw));
  }
  return windows;
}

}  // namespace demandcast
