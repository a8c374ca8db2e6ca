#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "demandcast/features.hpp"
#include "demandcast/lstm.hpp"

namespace demandcast {

using Params = LstmParams<double>;
/// Gradients share the parameter layout, one entry per parameter.
using Gradients = LstmParams<double>;

enum class LossMode {
  AllSteps,  // loss on every step's prediction within a window
  LastStep,  // loss on the final step only
};

std::string to_string(LossMode m);
LossMode parse_loss_mode(std::string_view s);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t max_epochs = 500;
  std::size_t patience = 20;
  double grad_clip_norm = 1.0;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  LossMode loss = LossMode::AllSteps;
  // Gaussian noise (sd, scaled units) added to the consumption input channel of
  // training windows. Makes the network tolerate its own fed-back predictions.
  double input_noise = 0.0;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

double rmse_loss(std::span<const double> pred, std::span<const double> target);

/// Mean squared error over the steps selected by `mode`.
double mse_loss(std::span<const double> pred, std::span<const double> target, LossMode mode = LossMode::AllSteps);

/// Exact gradient of mse_loss(forward predictions, targets) by backpropagation through time.
Gradients bptt(const Params& p, const StepTrace<double>& trace, std::span<const double> targets,
               LossMode mode = LossMode::AllSteps);

/// Central finite differences of the same loss, one parameter at a time.
Gradients finite_diff(const Params& p, std::span<const VectorXd> xs, std::span<const double> targets,
                      double eps = 1e-5, LossMode mode = LossMode::AllSteps);

double global_norm(const Gradients& g);

/// Rescales `g` so its global norm is at most `max_norm`. Returns the norm before clipping.
double clip_global_norm(Gradients& g, double max_norm);

/// max over entries of |a - b| / max(|a|, |b|, 1e-8).
double max_relative_error(const Gradients& a, const Gradients& b);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t instances = 0;
  std::size_t parameters_checked = 0;
};

/// Compares bptt against finite_diff on `instances` random problems with
/// H <= 4, D <= 3, T <= 10 drawn from `seed`.
GradCheckResult gradient_check(std::uint64_t seed, std::size_t instances = 20, double eps = 1e-5);

enum class StopReason { MaxEpochs, EarlyStop };
std::string to_string(StopReason r);

struct TrainReport {
  std::vector<double> train_rmse;  // one entry per epoch run
  std::vector<double> val_rmse;
  std::size_t best_epoch = 0;  // 1-based
  StopReason stop = StopReason::MaxEpochs;

  std::size_t epochs_run() const { return train_rmse.size(); }
};

/// CSV with header `epoch,train_rmse,val_rmse`.
void write_report_csv(std::ostream& os, const TrainReport& report);

struct TrainResult {
  Params params;  // parameters from the best validation epoch
  TrainReport report;
};

/// RMSE of the model's predictions over a window set, using the loss-mode step selection.
double evaluate_rmse(const Params& p, std::span<const FeatureWindow> windows, LossMode mode = LossMode::AllSteps);

/// Adam over seeded shuffled mini-batches with global-norm clipping and early stopping on
/// validation RMSE. Throws NumericalError naming the epoch and batch on a non-finite loss.
TrainResult train(Params init, std::span<const FeatureWindow> train_windows,
                  std::span<const FeatureWindow> val_windows, const TrainConfig& cfg);

}  // namespace demandcast
