#include <random>

#include "doctest.h"
#include "demandcast/errors.hpp"
#include "demandcast/model.hpp"

#include "json.hpp"

using namespace demandcast;

namespace {

TrainedModel random_model(std::uint64_t seed) {
  TrainedModel m;
  m.params = init_params(5, 3, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto block : parameter_blocks(m.params))
    for (auto& v : block) v += 1e-3 * n(rng);
  m.consumption_scaler = {0.1234567890123, 2.718281828459045};
  m.temperature_scaler = {-3.25, 41.000000000000007};
  m.features = FeatureSet::All;
  m.window = 48;
  m.seed = seed;
  m.cluster_id = 3;
  return m;
}

ProfileSeries toy_series(std::size_t n) {
  ProfileSeries s;
  s.cluster_id = 1;
  const auto start = TimeStamp::parse("2015-05-01T00:00");
  for (std::size_t t = 0; t < n; ++t) {
    s.time.push_back(start.plus_minutes(30 * static_cast<std::int64_t>(t)));
    s.consumption.push_back(1.0 + 0.5 * std::sin(2.0 * 3.141592653589793 * static_cast<double>(t) / 48.0));
    s.temperature.push_back(15.0 + 5.0 * std::cos(static_cast<double>(t) / 30.0));
  }
  return s;
}

}  // namespace

TEST_CASE("model JSON round trip is byte-stable") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto m = random_model(seed);
    const auto text = model_to_json(m);
    const auto back = model_from_json(text);
    CHECK(model_to_json(back) == text);
    const auto a = parameter_blocks(m.params), b = parameter_blocks(back.params);
    for (std::size_t i = 0; i < kParameterBlocks; ++i)
      for (std::size_t k = 0; k < a[i].size(); ++k) CHECK(a[i][k] == b[i][k]);
    CHECK(back.consumption_scaler.min == m.consumption_scaler.min);
    CHECK(back.temperature_scaler.max == m.temperature_scaler.max);
    CHECK(back.cluster_id == 3);
  }
}

TEST_CASE("model JSON layout") {
  const auto j = nlohmann::json::parse(model_to_json(random_model(4)));
  CHECK(j.at("schema_version") == kModelSchemaVersion);
  CHECK(j.at("H") == 5);
  CHECK(j.at("D") == 3);
  CHECK(j.at("seed") == 4);
  CHECK(j.at("gates").at("forget").at("input_weights").size() == 5);
  CHECK(j.at("gates").at("forget").at("input_weights")[0].size() == 3);
  CHECK(j.at("gates").at("cell").at("recurrent_weights")[4].size() == 5);
  CHECK(j.at("head").at("weights").size() == 5);
  CHECK(j.at("scalers").at("consumption").contains("min"));
}

TEST_CASE("model JSON validation") {
  const auto good = nlohmann::json::parse(model_to_json(random_model(5)));
  auto broken = good;
  broken["schema_version"] = 99;
  CHECK_THROWS_AS(model_from_json(broken.dump()), DataError);
  broken = good;
  broken["gates"]["input"]["bias"].erase(0);
  CHECK_THROWS_AS(model_from_json(broken.dump()), DataError);
  broken = good;
  broken["features"] = "everything";
  CHECK_THROWS_AS(model_from_json(broken.dump()), DataError);
  CHECK_THROWS_AS(model_from_json("{not json"), DataError);
}

TEST_CASE("fit_model and forecast_from") {
  const auto series = toy_series(20 * 48);
  PipelineConfig cfg;
  cfg.hidden = 4;
  cfg.window = 24;
  cfg.stride = 6;
  cfg.train.max_epochs = 3;
  cfg.train.seed = 9;
  const auto bounds = split_bounds(series.size(), cfg.split, cfg.window);
  const auto fit = fit_model(series, bounds, FeatureSet::All, cfg);
  CHECK(fit.model.params.input_size() == 3);
  CHECK(fit.model.params.hidden_size() == 4);
  CHECK(fit.report.epochs_run() == 3);
  const auto train_part = std::span<const double>(series.consumption).first(bounds.train_end);
  CHECK(fit.model.consumption_scaler.min == *std::min_element(train_part.begin(), train_part.end()));

  const auto f = forecast_from(fit.model, series, series.size() - 144, 144);
  CHECK(f.size() == 144);
  for (double v : f) CHECK(std::isfinite(v));
  CHECK_THROWS(forecast_from(fit.model, series, 10, 144));

  const auto again = fit_model(series, bounds, FeatureSet::All, cfg);
  CHECK(model_to_json(again.model) == model_to_json(fit.model));
}
