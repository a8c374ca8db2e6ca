#include "demandcast/model.hpp"

#include <json.hpp>

namespace demandcast {

using nlohmann::json;

FitResult fit_model(const ProfileSeries& series, const SplitBounds& bounds, FeatureSet features,
                    const PipelineConfig& cfg) {
  if (bounds.size != series.size()) throw DimensionError("fit_model: split bounds do not match series length");

  const std::span<const double> consumption(series.consumption);
  const std::span<const double> temperature(series.temperature);
  const std::span<const TimeStamp> time(series.time);

  TrainedModel model;
  model.consumption_scaler = fit_scaler(consumption.first(bounds.train_end));
  model.temperature_scaler = fit_scaler(temperature.first(bounds.train_end));
  model.features = features;
  model.encoding = cfg.encoding;
  model.window = cfg.window;
  model.seed = cfg.train.seed;
  model.cluster_id = series.cluster_id;

  const auto cons = scale_all(consumption.first(bounds.val_end), model.consumption_scaler);
  const auto temp = scale_all(temperature.first(bounds.val_end), model.temperature_scaler);
  const std::span<const double> cs(cons), ts(temp);

  const auto train_windows =
      build_windows(cs.first(bounds.train_end), ts.first(bounds.train_end), time.first(bounds.train_end),
                    cfg.window, features, {cfg.stride, cfg.encoding});
  const auto val_windows =
      build_windows(cs.subspan(bounds.train_end), ts.subspan(bounds.train_end),
                    time.subspan(bounds.train_end, bounds.val_size()), cfg.window, features, {1, cfg.encoding});

  const auto init = init_params<double>(static_cast<Eigen::Index>(cfg.hidden), feature_count(features), cfg.train.seed);
  auto result = train(init, train_windows, val_windows, cfg.train);
  model.params = std::move(result.params);
  return {std::move(model), std::move(result.report)};
}

std::vector<double> forecast_from(const TrainedModel& model, const ProfileSeries& series, std::size_t begin,
                                  std::size_t horizon) {
  if (begin < model.window) {
    throw DataError("forecast: need " + std::to_string(model.window) + " observed steps before the forecast start");
  }
  if (begin + horizon > series.size()) {
    throw DataError("forecast: horizon of " + std::to_string(horizon) + " steps runs past the end of the series");
  }
  std::vector<VectorXd> warmup;
  warmup.reserve(model.window);
  for (std::size_t t = begin - model.window; t < begin; ++t) {
    warmup.push_back(feature_vector(model.consumption_scaler.scale(series.consumption[t]),
                                    model.temperature_scaler.scale(series.temperature[t]),
                                    time_feature(series.time[t], model.encoding), model.features));
  }
  std::vector<ExogenousFeatures> exog;
  exog.reserve(horizon);
  for (std::size_t t = begin; t < begin + horizon; ++t) {
    exog.push_back({model.temperature_scaler.scale(series.temperature[t]), time_feature(series.time[t], model.encoding)});
  }
  return forecast_closed_loop<double>(model.params, warmup, exog, horizon, model.consumption_scaler, model.features);
}

namespace {

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw DataError(std::string("model: '") + what + "' must have " + std::to_string(rows) + " rows");
  }
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DataError(std::string("model: '") + what + "' rows must have " + std::to_string(cols) + " entries");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

VectorXd vector_from_json(const json& j, Eigen::Index n, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw DataError(std::string("model: '") + what + "' must have " + std::to_string(n) + " entries");
  }
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

constexpr std::array<const char*, kGateCount> kGateNames{"input", "forget", "output", "cell"};

}  // namespace

std::string model_to_json(const TrainedModel& m) {
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["H"] = m.params.hidden_size();
  j["D"] = m.params.input_size();
  j["seed"] = m.seed;
  j["cluster"] = m.cluster_id;
  j["features"] = to_string(m.features);
  j["time_encoding"] = to_string(m.encoding);
  j["window"] = m.window;
  json gates;
  for (std::size_t k = 0; k < kGateCount; ++k) {
    const auto& g = m.params.gates[k];
    gates[kGateNames[k]] = {{"input_weights", matrix_to_json(g.input)},
                            {"recurrent_weights", matrix_to_json(g.recurrent)},
                            {"bias", vector_to_json(g.bias)}};
  }
  j["gates"] = std::move(gates);
  j["head"] = {{"weights", vector_to_json(m.params.head_weights)}, {"bias", m.params.head_bias}};
  j["scalers"] = {{"consumption", {{"min", m.consumption_scaler.min}, {"max", m.consumption_scaler.max}}},
                  {"temperature", {{"min", m.temperature_scaler.min}, {"max", m.temperature_scaler.max}}}};
  return j.dump(2) + "\n";
}

TrainedModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model: invalid JSON: ") + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kModelSchemaVersion) {
      throw DataError("model: unsupported schema_version " + j.at("schema_version").dump());
    }
    const auto hidden = j.at("H").get<Eigen::Index>();
    const auto input = j.at("D").get<Eigen::Index>();
    if (hidden < 1 || input < 1) throw DataError("model: H and D must be >= 1");

    TrainedModel m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.cluster_id = j.at("cluster").get<int>();
    m.features = parse_feature_set(j.at("features").get<std::string>());
    m.encoding = parse_time_encoding(j.at("time_encoding").get<std::string>());
    m.window = j.at("window").get<std::size_t>();
    if (feature_count(m.features) != input) throw DataError("model: D does not match the feature set");

    m.params = Params::zeros(hidden, input);
    for (std::size_t k = 0; k < kGateCount; ++k) {
      const auto& g = j.at("gates").at(kGateNames[k]);
      m.params.gates[k].input = matrix_from_json(g.at("input_weights"), hidden, input, "input_weights");
      m.params.gates[k].recurrent = matrix_from_json(g.at("recurrent_weights"), hidden, hidden, "recurrent_weights");
      m.params.gates[k].bias = vector_from_json(g.at("bias"), hidden, "bias");
    }
    m.params.head_weights = vector_from_json(j.at("head").at("weights"), hidden, "head.weights");
    m.params.head_bias = j.at("head").at("bias").get<double>();
    const auto& s = j.at("scalers");
    m.consumption_scaler = {s.at("consumption").at("min").get<double>(), s.at("consumption").at("max").get<double>()};
    m.temperature_scaler = {s.at("temperature").at("min").get<double>(), s.at("temperature").at("max").get<double>()};
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

}  // namespace demandcast
