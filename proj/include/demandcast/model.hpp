#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "demandcast/data.hpp"
#include "demandcast/features.hpp"
#include "demandcast/training.hpp"

namespace demandcast {

inline constexpr int kModelSchemaVersion = 1;

/// Everything the forecasting pipeline needs besides the network itself.
struct PipelineConfig {
  TrainConfig train;
  SplitSpec split;
  std::size_t hidden = 32;
  std::size_t window = 48;
  std::size_t stride = 1;  // spacing of training windows; validation windows always use 1
  TimeEncoding encoding = TimeEncoding::Concatenated;
};

/// A trained network with its feature scaling.
struct TrainedModel {
  Params params;
  ScalerParams consumption_scaler;
  ScalerParams temperature_scaler;
  FeatureSet features = FeatureSet::All;
  TimeEncoding encoding = TimeEncoding::Concatenated;
  std::size_t window = 48;
  std::uint64_t seed = 0;
  int cluster_id = 0;
};

struct FitResult {
  TrainedModel model;
  TrainReport report;
};

/// Fits scalers on the training segment of `series`, builds train/validation
/// windows and trains from init_params(hidden, D, cfg.train.seed).
FitResult fit_model(const ProfileSeries& series, const SplitBounds& bounds, FeatureSet features,
                    const PipelineConfig& cfg);

/// Closed-loop forecast of `horizon` steps starting at row `begin` of `series`,
/// warmed up on the `model.window` observed rows before it. Returns kWh.
std::vector<double> forecast_from(const TrainedModel& model, const ProfileSeries& series, std::size_t begin,
                                  std::size_t horizon);

/// JSON document, see README for the layout. Doubles are written in shortest
/// round-trip form so dump(parse(dump(m))) is byte-identical.
std::string model_to_json(const TrainedModel& m);
TrainedModel model_from_json(const std::string& text);

}  // namespace demandcast
