#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "demandcast/data.hpp"
#include "demandcast/model.hpp"

namespace demandcast {

inline constexpr std::size_t kThreeDayHorizon = 3 * TimeStamp::kIntervalsPerDay;
inline constexpr std::size_t kFifteenDayHorizon = 15 * TimeStamp::kIntervalsPerDay;
inline constexpr double kMapeFloor = 1e-6;

/// Mean absolute percentage error in percent. Throws MetricError listing every
/// index whose |actual| <= 1e-6.
double mape(std::span<const double> actual, std::span<const double> predicted);

/// RMSE over the range of `actual`, in percent. Throws MetricError for a constant series.
double nrmse_percent(std::span<const double> actual, std::span<const double> predicted);

struct ForecastResult {
  std::vector<TimeStamp> time;
  std::vector<double> predicted;
  std::vector<double> actual;
  double mape_percent = 0.0;
  double rmse_kwh = 0.0;
  double nrmse_percent = 0.0;
};

ForecastResult score(std::vector<TimeStamp> time, std::vector<double> actual, std::vector<double> predicted);

/// CSV `timestamp,actual_kwh,predicted_kwh`.
void write_forecast_csv(std::ostream& out, const ForecastResult& r);
ForecastResult read_forecast_csv(std::istream& in, std::string_view source = "<stream>");

/// One forecasting problem: a contiguous series, its chronological split, and the
/// block [begin, begin + horizon) to forecast.
struct ForecastTask {
  const ProfileSeries& series;
  SplitBounds bounds;
  std::size_t begin = 0;
  std::size_t horizon = 0;
  FeatureSet features = FeatureSet::All;
};

/// Fits on a task's training and validation data and forecasts its horizon in kWh.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::vector<double> fit_and_forecast(const ForecastTask& task) = 0;
};

class LstmForecaster final : public Forecaster {
 public:
  explicit LstmForecaster(PipelineConfig cfg) : cfg_(std::move(cfg)) {}
  std::vector<double> fit_and_forecast(const ForecastTask& task) override;

  /// Training report of the most recent fit.
  const TrainReport& last_report() const { return last_report_; }

 private:
  PipelineConfig cfg_;
  TrainReport last_report_;
};

/// Repeats the last observed day. Baseline only.
class SeasonalNaiveForecaster final : public Forecaster {
 public:
  std::vector<double> fit_and_forecast(const ForecastTask& task) override;
};

struct ReportRow {
  std::string scope;  // "month", "cluster", "annual" or "average"
  std::string month;  // YYYY-MM, empty for averages over months
  int cluster = 0;
  FeatureSet features = FeatureSet::All;
  double mape_percent = 0.0;
  double rmse_kwh = 0.0;
  double nrmse_percent = 0.0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::vector<ReportRow> averages;  // one per feature set, means over `rows`
};

/// CSV `scope,month,cluster,features,mape_percent,rmse_kwh,nrmse_percent`; rows then averages.
void write_report_csv(std::ostream& out, const ExperimentReport& report);

/// Appends per-feature-set mean rows to `report.averages`.
void compute_averages(ExperimentReport& report);

struct MonthSegment {
  YearMonth month;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool full = false;  // starts at day 1 00:00 and ends at the last day 23:30
};

/// Contiguous calendar-month blocks of `time`.
std::vector<MonthSegment> month_segments(std::span<const TimeStamp> time);

/// Per month: split, fit, forecast the final three days of the test segment and score.
/// With no explicit months, every full calendar month in the data is used.
ExperimentReport run_monthly_3day(const Dataset& data, int cluster_id, std::span<const FeatureSet> selectors,
                                  Forecaster& forecaster, const PipelineConfig& cfg,
                                  std::span<const YearMonth> months = {});
ExperimentReport run_monthly_3day(const Dataset& data, int cluster_id, std::span<const FeatureSet> selectors,
                                  const PipelineConfig& cfg, std::span<const YearMonth> months = {});

/// The monthly procedure, all three features, for every cluster except `exclude_cluster`.
ExperimentReport run_clusters_3day(const Dataset& data, std::span<const YearMonth> months, Forecaster& forecaster,
                                   const PipelineConfig& cfg, int exclude_cluster = 1);
ExperimentReport run_clusters_3day(const Dataset& data, std::span<const YearMonth> months,
                                   const PipelineConfig& cfg, int exclude_cluster = 1);

inline constexpr std::size_t kMinAnnualDays = 330;

/// Trains on the whole-series split and forecasts the final 15 days of the test segment.
ForecastResult run_annual_15day(const Dataset& data, int cluster_id, Forecaster& forecaster,
                                const PipelineConfig& cfg, FeatureSet features = FeatureSet::All);
ForecastResult run_annual_15day(const Dataset& data, int cluster_id, const PipelineConfig& cfg,
                                FeatureSet features = FeatureSet::All);

/// Forecasts the final `horizon` steps of `series` with an already-trained model.
ForecastResult forecast_tail(const TrainedModel& model, const ProfileSeries& series, std::size_t horizon);

}  // namespace demandcast
