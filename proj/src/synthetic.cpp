#include "demandcast/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

namespace demandcast {

namespace {

// Gaussian bump on a 24-hour circle.
double bump(double hour, double centre, double width) {
  double d = std::fmod(std::abs(hour - centre), 24.0);
  d = std::min(d, 24.0 - d);
  return std::exp(-0.5 * (d / width) * (d / width));
}

// Base load shape in kWh per 30 minutes for each archetype.
double archetype_load(int archetype, double hour, bool weekend) {
  const double morning = weekend ? 1.5 : 0.0;  // weekend mornings start later
  const double midday = weekend ? 0.15 * bump(hour, 12.5, 3.0) : 0.0;
  switch (archetype) {
    case 0:  // morning and evening peaks
      return 0.12 + 0.35 * bump(hour, 7.5 + morning, 1.2) + 0.55 * bump(hour, 19.0, 2.0) + midday;
    case 1:  // out all day, heavy evening
      return 0.10 + 0.15 * bump(hour, 7.0 + morning, 1.0) + 0.80 * bump(hour, 20.0, 1.5) + midday;
    case 2:  // occupied during the day
      return 0.15 + 0.25 * bump(hour, 8.0 + morning, 1.5) + 0.35 * bump(hour, 13.0, 3.0) +
             0.35 * bump(hour, 18.5, 2.0) + midday;
    default:  // off-peak storage heating / hot water overnight
      return 0.10 + 0.20 * bump(hour, 7.5 + morning, 1.2) + 0.30 * bump(hour, 19.0, 2.0) +
             0.60 * bump(hour, 1.5, 1.5) + midday;
  }
}

// Overall level; puts the default households at roughly 15-25 kWh per day.
constexpr double kLoadLevel = 0.85;

struct Household {
  int archetype = 0;
  double scale = 1.0;
  double shift_hours = 0.0;
  double comfort_kwh_per_degree = 0.03;
};

int day_of_year(const TimeStamp& t) {
  using namespace std::chrono;
  const auto ymd = t.date();
  const sys_days jan1{ymd.year() / January / 1};
  return static_cast<int>((sys_days{ymd} - jan1).count());
}

}  // namespace

double comfort_excess(double celsius) {
  return std::max(0.0, celsius - kComfortHigh) + std::max(0.0, kComfortLow - celsius);
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.consumers < 1 || spec.days < 1) {
    throw std::invalid_argument("generate_synthetic: consumers and days must be >= 1");
  }
  const std::size_t intervals = spec.days * TimeStamp::kIntervalsPerDay;
  const TimeStamp start = spec.start();

  SyntheticDataset out;
  out.time.reserve(intervals);
  for (std::size_t t = 0; t < intervals; ++t) {
    out.time.push_back(start.plus_minutes(static_cast<std::int64_t>(t) * TimeStamp::kIntervalMinutes));
  }

  // Independent streams so changing the temperature model leaves household draws intact.
  std::mt19937_64 temp_rng(spec.seed ^ 0x7465'6d70ULL);
  std::mt19937_64 house_rng(spec.seed);
  std::mt19937_64 noise_rng(spec.seed ^ 0x6e6f'6973'6500ULL);
  std::normal_distribution<double> unit(0.0, 1.0);

  // Temperature.
  const auto& tm = spec.temperature;
  out.temperature.resize(intervals);
  if (tm.fixed_celsius) {
    std::fill(out.temperature.begin(), out.temperature.end(), *tm.fixed_celsius);
  } else {
    // Daily anomalies, interpolated between noon anchors so there is no jump at midnight.
    std::vector<double> anomaly(spec.days + 1);
    const double innovation = tm.anomaly_sd * std::sqrt(1.0 - tm.anomaly_persistence * tm.anomaly_persistence);
    anomaly[0] = tm.anomaly_sd * unit(temp_rng);
    for (std::size_t d = 1; d < anomaly.size(); ++d) {
      anomaly[d] = tm.anomaly_persistence * anomaly[d - 1] + innovation * unit(temp_rng);
    }
    for (std::size_t t = 0; t < intervals; ++t) {
      const TimeStamp& ts = out.time[t];
      const double hour = ts.hour() + ts.minute() / 60.0;
      const double day_pos = static_cast<double>(t) / TimeStamp::kIntervalsPerDay - 0.5;
      const auto d0 = static_cast<std::size_t>(std::clamp(std::floor(day_pos), 0.0, double(spec.days - 1)));
      const double w = std::clamp(day_pos - static_cast<double>(d0), 0.0, 1.0);
      const double anom = (1.0 - w) * anomaly[d0] + w * anomaly[d0 + 1];
      const double seasonal = tm.annual_amplitude *
                              std::cos(2.0 * std::numbers::pi * (day_of_year(ts) - tm.warmest_day_of_year) / 365.25);
      const double diurnal = tm.diurnal_amplitude * std::cos(2.0 * std::numbers::pi * (hour - tm.diurnal_peak_hour) / 24.0);
      out.temperature[t] = tm.annual_mean + seasonal + diurnal + anom + tm.noise_sd * unit(temp_rng);
    }
  }

  // Households.
  std::vector<Household> homes(spec.consumers);
  std::vector<std::string> ids(spec.consumers);
  for (std::size_t c = 0; c < spec.consumers; ++c) {
    auto& h = homes[c];
    h.archetype = static_cast<int>(c % 4);
    h.scale = std::clamp(std::exp(0.2 * unit(house_rng)), 0.6, 1.6);
    h.shift_hours = std::clamp(0.5 * unit(house_rng), -1.0, 1.0);
    h.comfort_kwh_per_degree = 0.025 * std::clamp(std::exp(0.3 * unit(house_rng)), 0.5, 2.0);
    char buf[32];
    std::snprintf(buf, sizeof buf, "C%04zu", c + 1);
    ids[c] = buf;
    out.assignment[ids[c]] = h.archetype + 1;
  }

  // Consumption. Day-level behaviour factors are drawn per consumer per day.
  std::vector<double> day_factor(spec.consumers, 1.0);
  out.readings.reserve(intervals * spec.consumers);
  for (std::size_t t = 0; t < intervals; ++t) {
    const TimeStamp& ts = out.time[t];
    if (t % TimeStamp::kIntervalsPerDay == 0) {
      for (auto& f : day_factor) f = std::exp(0.08 * unit(noise_rng));
    }
    const int dow = ts.day_code();
    const bool weekend = dow == 1 || dow == 7;
    const double hour = ts.hour() + ts.minute() / 60.0;
    const double excess = comfort_excess(out.temperature[t]);
    for (std::size_t c = 0; c < spec.consumers; ++c) {
      const auto& h = homes[c];
      const double base = archetype_load(h.archetype, hour - h.shift_hours, weekend) * (weekend ? 1.1 : 1.0);
      const double load = kLoadLevel * (h.scale * base * day_factor[c] + h.comfort_kwh_per_degree * excess);
      const double noisy = load * std::exp(0.15 * unit(noise_rng));
      out.readings.push_back({ids[c], ts, std::max(0.02, noisy)});
    }
  }
  return out;
}

}  // namespace demandcast
