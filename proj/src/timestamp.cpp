#include "demandcast/timestamp.hpp"

#include <cstdio>

#include "demandcast/errors.hpp"

namespace demandcast {

namespace {

using namespace std::chrono;

constexpr std::int64_t kMinutesPerDay = 24 * 60;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

sys_days day_of(std::int64_t minutes) { return sys_days{days{floor_div(minutes, kMinutesPerDay)}}; }

int minute_of_day(std::int64_t minutes) {
  return static_cast<int>(minutes - floor_div(minutes, kMinutesPerDay) * kMinutesPerDay);
}

bool parse_digits(std::string_view s, int& out) {
  out = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    out = out * 10 + (c - '0');
  }
  return !s.empty();
}

}  // namespace

TimeStamp TimeStamp::from_civil(int year, unsigned month, unsigned day, int hour, int minute) {
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok()) {
    throw DataError("invalid calendar date " + std::to_string(year) + "-" + std::to_string(month) +
                    "-" + std::to_string(day));
  }
  if (hour < 0 || hour > 23 || minute < 0 || minute > 59) {
    throw DataError("invalid clock time " + std::to_string(hour) + ":" + std::to_string(minute));
  }
  const std::int64_t d = sys_days{ymd}.time_since_epoch().count();
  return TimeStamp(d * kMinutesPerDay + hour * 60 + minute);
}

TimeStamp TimeStamp::parse(std::string_view text) {
  // YYYY-MM-DDTHH:MM
  if (text.size() != 16 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':') {
    throw DataError("malformed timestamp '" + std::string(text) + "', expected YYYY-MM-DDTHH:MM");
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  if (!parse_digits(text.substr(0, 4), y) || !parse_digits(text.substr(5, 2), mo) ||
      !parse_digits(text.substr(8, 2), d) || !parse_digits(text.substr(11, 2), h) ||
      !parse_digits(text.substr(14, 2), mi)) {
    throw DataError("malformed timestamp '" + std::string(text) + "', expected YYYY-MM-DDTHH:MM");
  }
  return from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), h, mi);
}

year_month_day TimeStamp::date() const { return year_month_day{day_of(minutes_)}; }

int TimeStamp::hour() const { return minute_of_day(minutes_) / 60; }

int TimeStamp::minute() const { return minute_of_day(minutes_) % 60; }

int TimeStamp::day_code() const { return static_cast<int>(weekday{day_of(minutes_)}.c_encoding()) + 1; }

int TimeStamp::interval() const {
  if (!on_half_hour_grid()) {
    throw DataError("timestamp " + str() + " is not on the 30-minute grid");
  }
  return 2 * hour() + minute() / 30 + 1;
}

std::string TimeStamp::str() const {
  const auto ymd = date();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour(), minute());
  return buf;
}

YearMonth YearMonth::of(const TimeStamp& t) {
  const auto ymd = t.date();
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month())};
}

YearMonth YearMonth::parse(std::string_view text) {
  int y = 0, m = 0;
  if (text.size() != 7 || text[4] != '-' || !parse_digits(text.substr(0, 4), y) ||
      !parse_digits(text.substr(5, 2), m) || m < 1 || m > 12) {
    throw DataError("malformed month '" + std::string(text) + "', expected YYYY-MM");
  }
  return {y, static_cast<unsigned>(m)};
}

std::string YearMonth::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", year, month);
  return buf;
}

}  // namespace demandcast
