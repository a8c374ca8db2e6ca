#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace demandcast {

/// Naive local wall-clock time at minute resolution. No time zone or DST handling.
class TimeStamp {
 public:
  static constexpr std::int64_t kIntervalMinutes = 30;
  static constexpr int kIntervalsPerDay = 48;

  TimeStamp() = default;

  /// Throws DataError for an invalid calendar date or clock time.
  static TimeStamp from_civil(int year, unsigned month, unsigned day, int hour = 0, int minute = 0);
  static TimeStamp from_minutes(std::int64_t minutes_since_epoch) { return TimeStamp(minutes_since_epoch); }

  /// Strict `YYYY-MM-DDTHH:MM`. Throws DataError on anything else.
  static TimeStamp parse(std::string_view text);

  std::int64_t minutes() const { return minutes_; }
  std::chrono::year_month_day date() const;
  int hour() const;
  int minute() const;

  /// Day-of-week code: Sunday = 1, Monday..Friday = 2..6, Saturday = 7.
  int day_code() const;

  /// Half-hour interval index 1..48. Throws DataError when not on a :00/:30 boundary.
  int interval() const;

  bool on_half_hour_grid() const { return minute() % 30 == 0; }

  TimeStamp plus_minutes(std::int64_t m) const { return TimeStamp(minutes_ + m); }
  TimeStamp next_interval() const { return plus_minutes(kIntervalMinutes); }

  std::string str() const;

  auto operator<=>(const TimeStamp&) const = default;

 private:
  explicit TimeStamp(std::int64_t minutes) : minutes_(minutes) {}
  std::int64_t minutes_ = 0;
};

/// Calendar month key used to slice series for monthly experiments.
struct YearMonth {
  int year = 0;
  unsigned month = 0;

  static YearMonth of(const TimeStamp& t);
  /// `YYYY-MM`.
  static YearMonth parse(std::string_view text);
  std::string str() const;

  auto operator<=>(const YearMonth&) const = default;
};

}  // namespace demandcast
