#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "demandcast/linalg.hpp"
#include "demandcast/timestamp.hpp"

namespace demandcast {

// ---------------------------------------------------------------------------
// Time feature
// ---------------------------------------------------------------------------

/// Highest concatenated day/interval value: Saturday (7) at interval 48.
inline constexpr double kTimeFeatureMax = 748.0;

enum class TimeEncoding {
  // Day code with the interval number appended as decimal digits, divided by 748.
  Concatenated,
  // ((d - 1) * 48 + k) / 336; monotonic across the week. Ablation only.
  Linear,
};

/// Half-hour interval index, 00:00 -> 1 ... 23:30 -> 48. Minutes must be 0 or 30.
int interval_of_clock(int hour, int minute);

/// Concatenated time feature for day code d (Sunday = 1) and interval k.
/// k < 10 appends one digit (d*10 + k), otherwise two (d*100 + k).
double encode_time(int day_code, int interval);

double encode_time_linear(int day_code, int interval);

double time_feature(const TimeStamp& t, TimeEncoding encoding = TimeEncoding::Concatenated);

std::string to_string(TimeEncoding e);
TimeEncoding parse_time_encoding(std::string_view s);

// ---------------------------------------------------------------------------
// Min-max scaling
// ---------------------------------------------------------------------------

struct ScalerParams {
  double min = 0.0;
  double max = 1.0;

  double scale(double x) const { return (x - min) / (max - min); }
  double unscale(double y) const { return min + y * (max - min); }
};

/// Records min and max of `series`. Throws DataError for empty or constant input.
ScalerParams fit_scaler(std::span<const double> series);

inline double scale(double x, const ScalerParams& s) { return s.scale(x); }
inline double unscale(double y, const ScalerParams& s) { return s.unscale(y); }

std::vector<double> scale_all(std::span<const double> xs, const ScalerParams& s);

// ---------------------------------------------------------------------------
// Feature windows
// ---------------------------------------------------------------------------

/// Which channels enter the network. Consumption is always channel 0.
enum class FeatureSet {
  ConsumptionTemperature,
  ConsumptionTime,
  All,
};

int feature_count(FeatureSet f);
std::string to_string(FeatureSet f);
/// Accepts "temp", "time", "all".
FeatureSet parse_feature_set(std::string_view s);

/// Assembles one input vector in channel order (consumption, temperature, time),
/// omitting channels not in `f`.
VectorXd feature_vector(double consumption, double temperature, double time, FeatureSet f);

struct FeatureWindow {
  std::vector<VectorXd> inputs;  // L per-step feature vectors
  std::vector<double> targets;   // consumption at t+1 for each step t
};

struct WindowOptions {
  std::size_t stride = 1;
  TimeEncoding encoding = TimeEncoding::Concatenated;
};

/// Sliding windows over aligned series. Consumption and temperature are expected
/// to be scaled already; the time feature is computed from `timestamps`.
/// Window w covers steps [w*stride, w*stride + L) with targets shifted by one.
std::vector<FeatureWindow> build_windows(std::span<const double> consumption,
                                         std::span<const double> temperature,
                                         std::span<const TimeStamp> timestamps, std::size_t window_length,
                                         FeatureSet selector, const WindowOptions& options = {});

}  // namespace demandcast
