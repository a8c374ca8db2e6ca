#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "demandcast/errors.hpp"
#include "demandcast/eval.hpp"
#include "demandcast/synthetic.hpp"

using namespace demandcast;

namespace {

// Returns the true future, so every metric must come out as zero.
class OracleForecaster final : public Forecaster {
 public:
  std::vector<double> fit_and_forecast(const ForecastTask& task) override {
    ++calls;
    const auto& c = task.series.consumption;
    return {c.begin() + static_cast<std::ptrdiff_t>(task.begin),
            c.begin() + static_cast<std::ptrdiff_t>(task.begin + task.horizon)};
  }
  int calls = 0;
};

Dataset synthetic_dataset(std::size_t consumers, std::size_t days, int year, unsigned month, unsigned day) {
  SyntheticSpec spec;
  spec.consumers = consumers;
  spec.days = days;
  spec.start_year = year;
  spec.start_month = month;
  spec.start_day = day;
  const auto s = generate_synthetic(spec);
  std::vector<TemperatureReading> temp;
  for (std::size_t t = 0; t < s.time.size(); ++t) temp.push_back({s.time[t], s.temperature[t]});
  return assemble_dataset(s.readings, temp, s.assignment);
}

const Dataset& calendar_year() {
  static const Dataset d = synthetic_dataset(8, 365, 2015, 1, 1);
  return d;
}

PipelineConfig tiny_config() {
  PipelineConfig cfg;
  cfg.hidden = 3;
  cfg.window = 12;
  cfg.stride = 8;
  cfg.train.max_epochs = 2;
  cfg.train.learning_rate = 1e-2;
  return cfg;
}

}  // namespace

TEST_CASE("mape") {
  const std::vector<double> a{100.0, 200.0}, p{110.0, 180.0};
  CHECK(mape(a, p) == 10.0);
  CHECK(mape(a, a) == 0.0);
  CHECK(mape(std::vector<double>{-50.0}, std::vector<double>{-55.0}) == doctest::Approx(10.0));
  try {
    mape(std::vector<double>{1.0, 0.0, 2.0, 1e-7}, std::vector<double>{1.0, 1.0, 1.0, 1.0});
    FAIL("expected MetricError");
  } catch (const MetricError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('1') != std::string::npos);
    CHECK(msg.find('3') != std::string::npos);
  }
  CHECK_THROWS(mape(std::vector<double>{}, std::vector<double>{}));
  CHECK_THROWS(mape(a, std::vector<double>{1.0}));
}

TEST_CASE("nrmse") {
  const std::vector<double> a{0.0, 10.0}, p{0.0, 10.0 + std::sqrt(2.0)};
  CHECK(nrmse_percent(a, p) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(nrmse_percent(a, a) == 0.0);
  CHECK_THROWS_AS(nrmse_percent(std::vector<double>{3.0, 3.0}, std::vector<double>{1.0, 2.0}), MetricError);
}

TEST_CASE("property: metrics are invariant to pairing order and common scale") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.5, 5.0), k(0.01, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(20), p(20);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = u(rng);
      p[i] = u(rng);
    }
    const double m = mape(a, p), n = nrmse_percent(a, p);

    std::vector<std::size_t> idx(a.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> as, ps;
    for (auto i : idx) {
      as.push_back(a[i]);
      ps.push_back(p[i]);
    }
    CHECK(mape(as, ps) == doctest::Approx(m).epsilon(1e-12));
    CHECK(nrmse_percent(as, ps) == doctest::Approx(n).epsilon(1e-12));

    const double c = k(rng);
    for (auto& v : as) v *= c;
    for (auto& v : ps) v *= c;
    CHECK(std::abs(nrmse_percent(as, ps) - n) <= 1e-12 * std::max(1.0, n));
    CHECK(mape(as, ps) == doctest::Approx(m).epsilon(1e-12));
  }
}

TEST_CASE("score and forecast CSV") {
  const auto t0 = TimeStamp::parse("2015-03-09T00:00");
  const auto r = score({t0, t0.next_interval()}, {100.0, 200.0}, {110.0, 180.0});
  CHECK(r.mape_percent == 10.0);
  CHECK(r.rmse_kwh == doctest::Approx(std::sqrt(250.0)));
  CHECK(r.nrmse_percent == doctest::Approx(100.0 * std::sqrt(250.0) / 100.0));

  std::ostringstream out;
  write_forecast_csv(out, r);
  CHECK(out.str().rfind("timestamp,actual_kwh,predicted_kwh\n2015-03-09T00:00,", 0) == 0);
  std::istringstream in(out.str());
  const auto back = read_forecast_csv(in);
  CHECK(back.time == r.time);
  CHECK(back.actual == r.actual);
  CHECK(back.predicted == r.predicted);
}

TEST_CASE("month segments") {
  const auto& d = calendar_year();
  const auto segs = month_segments(d.time);
  REQUIRE(segs.size() == 12);
  CHECK(std::all_of(segs.begin(), segs.end(), [](const auto& s) { return s.full; }));
  CHECK(segs[1].month.str() == "2015-02");
  CHECK(segs[1].end - segs[1].begin == 28 * 48);

  std::vector<TimeStamp> partial(d.time.begin() + 10, d.time.begin() + 40 * 48);
  const auto ps = month_segments(partial);
  REQUIRE(ps.size() == 2);
  CHECK_FALSE(ps[0].full);
  CHECK_FALSE(ps[1].full);
}

TEST_CASE("monthly harness with an oracle forecaster") {
  OracleForecaster oracle;
  const std::vector<FeatureSet> selectors{FeatureSet::ConsumptionTemperature, FeatureSet::All};
  const auto report = run_monthly_3day(calendar_year(), 1, selectors, oracle, PipelineConfig{});
  CHECK(oracle.calls == 24);
  CHECK(report.rows.size() == 24);
  CHECK(report.averages.size() == 2);
  for (const auto& row : report.rows) {
    CHECK(row.scope == "month");
    CHECK(row.cluster == 1);
    CHECK(row.mape_percent == 0.0);
    CHECK(row.rmse_kwh == 0.0);
    CHECK(row.nrmse_percent == 0.0);
  }
  for (const auto& avg : report.averages) {
    CHECK(avg.mape_percent == 0.0);
    CHECK(avg.nrmse_percent == 0.0);
  }
  CHECK(report.rows[0].month == "2015-01");
  CHECK(report.rows[23].month == "2015-12");

  std::ostringstream out;
  write_report_csv(out, report);
  std::string line;
  std::istringstream lines(out.str());
  std::getline(lines, line);
  CHECK(line == "scope,month,cluster,features,mape_percent,rmse_kwh,nrmse_percent");
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 26);
}

TEST_CASE("property: report averages are row means") {
  ExperimentReport r;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  for (int m = 0; m < 7; ++m)
    for (FeatureSet f : {FeatureSet::All, FeatureSet::ConsumptionTime})
      r.rows.push_back({"month", "2015-0" + std::to_string(m + 1), 2, f, u(rng), u(rng), u(rng)});
  compute_averages(r);
  REQUIRE(r.averages.size() == 2);
  for (const auto& avg : r.averages) {
    double mape_sum = 0.0, rmse_sum = 0.0, nrmse_sum = 0.0;
    int n = 0;
    for (const auto& row : r.rows)
      if (row.features == avg.features) {
        mape_sum += row.mape_percent;
        rmse_sum += row.rmse_kwh;
        nrmse_sum += row.nrmse_percent;
        ++n;
      }
    CHECK(std::abs(avg.mape_percent - mape_sum / n) < 1e-12);
    CHECK(std::abs(avg.rmse_kwh - rmse_sum / n) < 1e-12);
    CHECK(std::abs(avg.nrmse_percent - nrmse_sum / n) < 1e-12);
    CHECK(avg.scope == "average");
    CHECK(avg.cluster == 2);
  }
}

TEST_CASE("cluster harness") {
  OracleForecaster oracle;
  const std::vector<YearMonth> months{YearMonth{2015, 2}, YearMonth{2015, 9}};
  const auto report = run_clusters_3day(calendar_year(), months, oracle, PipelineConfig{});
  REQUIRE(report.rows.size() == 6);
  std::vector<int> ids;
  for (const auto& row : report.rows) {
    ids.push_back(row.cluster);
    CHECK(row.mape_percent == 0.0);
  }
  CHECK(ids == std::vector<int>{2, 2, 3, 3, 4, 4});
  CHECK(report.rows[0].month == "2015-02");
  CHECK(report.rows[1].month == "2015-09");

  const std::vector<YearMonth> missing{YearMonth{2017, 1}};
  CHECK_THROWS_AS(run_clusters_3day(calendar_year(), missing, oracle, PipelineConfig{}), DataError);
}

TEST_CASE("near-zero cluster surfaces a metric error") {
  const auto start = TimeStamp::parse("2015-02-01T00:00");
  std::vector<MeterReading> r;
  std::vector<TemperatureReading> temp;
  for (int t = 0; t < 28 * 48; ++t) {
    const auto ts = start.plus_minutes(30 * t);
    temp.push_back({ts, 20.0});
    r.push_back({"A", ts, 1.0 + 0.5 * std::sin(t / 7.0)});
    r.push_back({"Z", ts, 0.0});
  }
  const auto d = assemble_dataset(r, temp, {{"A", 1}, {"Z", 2}});
  OracleForecaster oracle;
  const std::vector<YearMonth> months{YearMonth{2015, 2}};
  try {
    run_clusters_3day(d, months, oracle, PipelineConfig{});
    FAIL("expected MetricError");
  } catch (const MetricError& e) {
    CHECK(std::string(e.what()).find("cluster 2") != std::string::npos);
  }
}

TEST_CASE("annual harness") {
  OracleForecaster oracle;
  const auto& d = calendar_year();
  const auto r = run_annual_15day(d, 3, oracle, PipelineConfig{});
  REQUIRE(r.predicted.size() == 720);
  CHECK(r.mape_percent == 0.0);
  CHECK(r.time.front() == d.time[d.time.size() - 720]);
  CHECK(r.time.back() == d.time.back());
  for (std::size_t t = 1; t < r.time.size(); ++t) CHECK(r.time[t].minutes() - r.time[t - 1].minutes() == 30);

  const auto short_data = synthetic_dataset(4, 200, 2015, 1, 1);
  CHECK_THROWS_AS(run_annual_15day(short_data, 1, oracle, PipelineConfig{}), DataError);
}

TEST_CASE("month too short for the split") {
  OracleForecaster oracle;
  auto cfg = PipelineConfig{};
  cfg.window = 400;
  const std::vector<FeatureSet> all{FeatureSet::All};
  const std::vector<YearMonth> months{YearMonth{2015, 2}};
  CHECK_THROWS_AS(run_monthly_3day(calendar_year(), 1, all, oracle, cfg, months), DataError);
}

TEST_CASE("seasonal naive baseline repeats the last day") {
  SeasonalNaiveForecaster naive;
  const auto series = calendar_year().series(1).slice(0, 31 * 48);
  const auto bounds = split_bounds(series.size(), {}, 48);
  const std::size_t begin = series.size() - 144;
  const auto out = naive.fit_and_forecast({series, bounds, begin, 144, FeatureSet::All});
  REQUIRE(out.size() == 144);
  for (std::size_t j = 0; j < 144; ++j) CHECK(out[j] == series.consumption[begin - 48 + j % 48]);
}

TEST_CASE("LSTM monthly run is deterministic") {
  const auto cfg = tiny_config();
  const std::vector<FeatureSet> all{FeatureSet::All};
  const std::vector<YearMonth> months{YearMonth{2015, 6}};
  const auto a = run_monthly_3day(calendar_year(), 1, all, cfg, months);
  const auto b = run_monthly_3day(calendar_year(), 1, all, cfg, months);
  std::ostringstream ca, cb;
  write_report_csv(ca, a);
  write_report_csv(cb, b);
  CHECK(ca.str() == cb.str());
  CHECK(a.rows.size() == 1);
  CHECK(std::isfinite(a.rows[0].mape_percent));
}
