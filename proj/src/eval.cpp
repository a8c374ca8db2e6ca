#include "demandcast/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>

namespace demandcast {

namespace {

void check_metric_inputs(std::span<const double> actual, std::span<const double> predicted, const char* what) {
  if (actual.empty() || actual.size() != predicted.size()) {
    throw DimensionError(std::string(what) + ": need equal nonempty lengths, got " + std::to_string(actual.size()) +
                         " and " + std::to_string(predicted.size()));
  }
}

}  // namespace

double mape(std::span<const double> actual, std::span<const double> predicted) {
  check_metric_inputs(actual, predicted, "mape");
  std::vector<std::size_t> bad;
  double sum = 0.0;
  for (std::size_t t = 0; t < actual.size(); ++t) {
    if (std::abs(actual[t]) <= kMapeFloor) {
      bad.push_back(t);
      continue;
    }
    sum += std::abs(actual[t] - predicted[t]) / std::abs(actual[t]);
  }
  if (!bad.empty()) {
    std::string list;
    for (std::size_t k = 0; k < bad.size() && k < 20; ++k) list += (k ? "," : "") + std::to_string(bad[k]);
    if (bad.size() > 20) list += ",...";
    throw MetricError("mape: " + std::to_string(bad.size()) + " actual value(s) within 1e-6 of zero at index " + list);
  }
  return 100.0 * sum / static_cast<double>(actual.size());
}

double nrmse_percent(std::span<const double> actual, std::span<const double> predicted) {
  check_metric_inputs(actual, predicted, "nrmse_percent");
  const auto [lo, hi] = std::minmax_element(actual.begin(), actual.end());
  if (!(*hi > *lo)) throw MetricError("nrmse_percent: actual series is constant");
  return 100.0 * rmse_loss(predicted, actual) / (*hi - *lo);
}

ForecastResult score(std::vector<TimeStamp> time, std::vector<double> actual, std::vector<double> predicted) {
  if (time.size() != actual.size()) throw DimensionError("score: timestamps and actuals differ in length");
  ForecastResult r;
  r.mape_percent = mape(actual, predicted);
  r.rmse_kwh = rmse_loss(predicted, actual);
  r.nrmse_percent = nrmse_percent(actual, predicted);
  r.time = std::move(time);
  r.actual = std::move(actual);
  r.predicted = std::move(predicted);
  return r;
}

void write_forecast_csv(std::ostream& out, const ForecastResult& r) {
  out << "timestamp,actual_kwh,predicted_kwh\n";
  char buf[96];
  for (std::size_t t = 0; t < r.time.size(); ++t) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", r.actual[t], r.predicted[t]);
    out << r.time[t].str() << buf;
  }
}

ForecastResult read_forecast_csv(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": " + msg);
  };
  if (!std::getline(in, line)) fail("empty forecast file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "timestamp,actual_kwh,predicted_kwh") fail("unexpected header '" + line + "'");
  ForecastResult r;
  auto number = [&](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) fail("malformed number '" + std::string(s) + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) fail("expected 3 fields");
    const std::string_view v(line);
    try {
      r.time.push_back(TimeStamp::parse(v.substr(0, c1)));
    } catch (const DataError& e) {
      fail(e.what());
    }
    r.actual.push_back(number(v.substr(c1 + 1, c2 - c1 - 1)));
    r.predicted.push_back(number(v.substr(c2 + 1)));
  }
  return r;
}

std::vector<double> LstmForecaster::fit_and_forecast(const ForecastTask& task) {
  auto fit = fit_model(task.series, task.bounds, task.features, cfg_);
  last_report_ = std::move(fit.report);
  return forecast_from(fit.model, task.series, task.begin, task.horizon);
}

std::vector<double> SeasonalNaiveForecaster::fit_and_forecast(const ForecastTask& task) {
  constexpr std::size_t period = TimeStamp::kIntervalsPerDay;
  if (task.begin < period) throw DataError("seasonal naive forecast needs one full day of history");
  std::vector<double> out(task.horizon);
  for (std::size_t j = 0; j < task.horizon; ++j) out[j] = task.series.consumption[task.begin - period + j % period];
  return out;
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  out << "scope,month,cluster,features,mape_percent,rmse_kwh,nrmse_percent\n";
  char buf[128];
  auto emit = [&](const ReportRow& r) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g\n", r.mape_percent, r.rmse_kwh, r.nrmse_percent);
    out << r.scope << ',' << r.month << ',' << r.cluster << ',' << to_string(r.features) << buf;
  };
  for (const auto& r : report.rows) emit(r);
  for (const auto& r : report.averages) emit(r);
}

void compute_averages(ExperimentReport& report) {
  std::map<FeatureSet, std::vector<const ReportRow*>> groups;
  for (const auto& r : report.rows) groups[r.features].push_back(&r);
  for (const auto& [features, rows] : groups) {
    ReportRow avg;
    avg.scope = "average";
    avg.features = features;
    // A single cluster shared by every row is kept; mixed clusters report 0.
    avg.cluster = rows.front()->cluster;
    for (const auto* r : rows) {
      if (r->cluster != avg.cluster) avg.cluster = 0;
      avg.mape_percent += r->mape_percent;
      avg.rmse_kwh += r->rmse_kwh;
      avg.nrmse_percent += r->nrmse_percent;
    }
    const double n = static_cast<double>(rows.size());
    avg.mape_percent /= n;
    avg.rmse_kwh /= n;
    avg.nrmse_percent /= n;
    report.averages.push_back(avg);
  }
}

std::vector<MonthSegment> month_segments(std::span<const TimeStamp> time) {
  std::vector<MonthSegment> out;
  for (std::size_t t = 0; t < time.size(); ++t) {
    const YearMonth ym = YearMonth::of(time[t]);
    if (out.empty() || out.back().month != ym) {
      out.push_back({ym, t, t + 1, false});
    } else {
      out.back().end = t + 1;
    }
  }
  for (auto& seg : out) {
    const TimeStamp first = time[seg.begin];
    const TimeStamp last = time[seg.end - 1];
    const auto ymd_last = last.date();
    const bool starts = static_cast<unsigned>(first.date().day()) == 1 && first.hour() == 0 && first.minute() == 0;
    const bool ends = std::chrono::year_month_day_last{ymd_last.year() / ymd_last.month() / std::chrono::last}.day() ==
                          ymd_last.day() &&
                      last.hour() == 23 && last.minute() == 30;
    seg.full = starts && ends;
  }
  return out;
}

namespace {

void require_uniform(std::span<const TimeStamp> time, const std::string& what) {
  for (std::size_t t = 1; t < time.size(); ++t) {
    if (time[t].minutes() - time[t - 1].minutes() != TimeStamp::kIntervalMinutes) {
      throw DataError(what + ": time grid has a gap at " + time[t - 1].str() + " -> " + time[t].str());
    }
  }
}

// Runs one split/fit/forecast/score cycle over `series`, forecasting its final `horizon` steps.
ForecastResult run_task(const ProfileSeries& series, std::size_t horizon, FeatureSet features,
                        Forecaster& forecaster, const PipelineConfig& cfg, const std::string& label) {
  require_uniform(series.time, label);
  const SplitBounds bounds = [&] {
    try {
      return split_bounds(series.size(), cfg.split, cfg.window);
    } catch (const DataError& e) {
      throw DataError(label + ": " + e.what());
    }
  }();
  if (bounds.test_size() < horizon) {
    throw DataError(label + ": test segment of " + std::to_string(bounds.test_size()) +
                    " steps is shorter than the " + std::to_string(horizon) + "-step horizon");
  }
  const std::size_t begin = series.size() - horizon;
  const ForecastTask task{series, bounds, begin, horizon, features};
  auto predicted = forecaster.fit_and_forecast(task);
  if (predicted.size() != horizon) throw DimensionError(label + ": forecaster returned the wrong number of steps");
  std::vector<TimeStamp> time(series.time.begin() + static_cast<std::ptrdiff_t>(begin), series.time.end());
  std::vector<double> actual(series.consumption.begin() + static_cast<std::ptrdiff_t>(begin), series.consumption.end());
  try {
    return score(std::move(time), std::move(actual), std::move(predicted));
  } catch (const MetricError& e) {
    throw MetricError(label + ": " + e.what());
  }
}

std::vector<MonthSegment> select_months(std::span<const TimeStamp> time, std::span<const YearMonth> months) {
  const auto segments = month_segments(time);
  std::vector<MonthSegment> out;
  if (months.empty()) {
    std::copy_if(segments.begin(), segments.end(), std::back_inserter(out), [](const auto& s) { return s.full; });
    if (out.empty()) throw DataError("dataset contains no complete calendar month");
    return out;
  }
  for (const auto& m : months) {
    const auto it = std::find_if(segments.begin(), segments.end(), [&](const auto& s) { return s.month == m; });
    if (it == segments.end()) throw DataError("month " + m.str() + " is not in the dataset");
    out.push_back(*it);
  }
  return out;
}

ReportRow to_row(const ForecastResult& r, std::string scope, std::string month, int cluster, FeatureSet features) {
  return {std::move(scope), std::move(month), cluster, features, r.mape_percent, r.rmse_kwh, r.nrmse_percent};
}

}  // namespace

ExperimentReport run_monthly_3day(const Dataset& data, int cluster_id, std::span<const FeatureSet> selectors,
                                  Forecaster& forecaster, const PipelineConfig& cfg,
                                  std::span<const YearMonth> months) {
  if (selectors.empty()) throw std::invalid_argument("run_monthly_3day: no feature sets requested");
  const ProfileSeries full = data.series(cluster_id);
  ExperimentReport report;
  for (const auto& seg : select_months(full.time, months)) {
    const ProfileSeries series = full.slice(seg.begin, seg.end);
    for (FeatureSet f : selectors) {
      const std::string label = "cluster " + std::to_string(cluster_id) + ", " + seg.month.str();
      const auto r = run_task(series, kThreeDayHorizon, f, forecaster, cfg, label);
      report.rows.push_back(to_row(r, "month", seg.month.str(), cluster_id, f));
    }
  }
  compute_averages(report);
  return report;
}

ExperimentReport run_monthly_3day(const Dataset& data, int cluster_id, std::span<const FeatureSet> selectors,
                                  const PipelineConfig& cfg, std::span<const YearMonth> months) {
  LstmForecaster forecaster(cfg);
  return run_monthly_3day(data, cluster_id, selectors, forecaster, cfg, months);
}

ExperimentReport run_clusters_3day(const Dataset& data, std::span<const YearMonth> months, Forecaster& forecaster,
                                   const PipelineConfig& cfg, int exclude_cluster) {
  if (data.clusters.size() < 2) throw DataError("run_clusters_3day: need at least 2 clusters");
  if (months.empty()) throw std::invalid_argument("run_clusters_3day: no months requested");
  ExperimentReport report;
  for (const auto& cluster : data.clusters) {
    if (cluster.cluster_id == exclude_cluster) continue;
    const ProfileSeries full = data.series(cluster.cluster_id);
    for (const auto& seg : select_months(full.time, months)) {
      const ProfileSeries series = full.slice(seg.begin, seg.end);
      const std::string label = "cluster " + std::to_string(cluster.cluster_id) + ", " + seg.month.str();
      const auto r = run_task(series, kThreeDayHorizon, FeatureSet::All, forecaster, cfg, label);
      report.rows.push_back(to_row(r, "cluster", seg.month.str(), cluster.cluster_id, FeatureSet::All));
    }
  }
  compute_averages(report);
  return report;
}

ExperimentReport run_clusters_3day(const Dataset& data, std::span<const YearMonth> months,
                                   const PipelineConfig& cfg, int exclude_cluster) {
  LstmForecaster forecaster(cfg);
  return run_clusters_3day(data, months, forecaster, cfg, exclude_cluster);
}

ForecastResult run_annual_15day(const Dataset& data, int cluster_id, Forecaster& forecaster,
                                const PipelineConfig& cfg, FeatureSet features) {
  const ProfileSeries series = data.series(cluster_id);
  if (series.size() < kMinAnnualDays * TimeStamp::kIntervalsPerDay) {
    throw DataError("run_annual_15day: dataset spans " + std::to_string(series.size() / TimeStamp::kIntervalsPerDay) +
                    " days, need at least " + std::to_string(kMinAnnualDays));
  }
  return run_task(series, kFifteenDayHorizon, features, forecaster, cfg, "cluster " + std::to_string(cluster_id) + ", annual");
}

ForecastResult run_annual_15day(const Dataset& data, int cluster_id, const PipelineConfig& cfg, FeatureSet features) {
  LstmForecaster forecaster(cfg);
  return run_annual_15day(data, cluster_id, forecaster, cfg, features);
}

ForecastResult forecast_tail(const TrainedModel& model, const ProfileSeries& series, std::size_t horizon) {
  if (horizon == 0 || horizon > series.size()) throw DataError("forecast: horizon must be in 1..series length");
  const std::size_t begin = series.size() - horizon;
  auto predicted = forecast_from(model, series, begin, horizon);
  std::vector<TimeStamp> time(series.time.begin() + static_cast<std::ptrdiff_t>(begin), series.time.end());
  std::vector<double> actual(series.consumption.begin() + static_cast<std::ptrdiff_t>(begin), series.consumption.end());
  return score(std::move(time), std::move(actual), std::move(predicted));
}

}  // namespace demandcast
