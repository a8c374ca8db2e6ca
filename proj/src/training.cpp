#include "demandcast/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "demandcast/errors.hpp"

namespace demandcast {

std::string to_string(LossMode m) { return m == LossMode::AllSteps ? "all_steps" : "last_step"; }

LossMode parse_loss_mode(std::string_view s) {
  if (s == "all_steps") return LossMode::AllSteps;
  if (s == "last_step") return LossMode::LastStep;
  throw std::invalid_argument("unknown loss mode '" + std::string(s) + "'");
}

std::string to_string(StopReason r) { return r == StopReason::MaxEpochs ? "max_epochs" : "early_stop"; }

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be > 0");
  }
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (!(grad_clip_norm > 0.0)) throw std::invalid_argument("grad_clip_norm must be > 0");
  if (batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (!(input_noise >= 0.0) || !std::isfinite(input_noise)) throw std::invalid_argument("input_noise must be >= 0");
}

namespace {

void check_pair(std::span<const double> pred, std::span<const double> target, const char* what) {
  if (pred.empty() || pred.size() != target.size()) {
    throw std::invalid_argument(std::string(what) + ": need equal nonempty lengths, got " +
                                std::to_string(pred.size()) + " and " + std::to_string(target.size()));
  }
}

std::size_t first_scored_step(std::size_t n, LossMode mode) { return mode == LossMode::AllSteps ? 0 : n - 1; }

}  // namespace

double rmse_loss(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred, target, "rmse_loss");
  return std::sqrt(mse_loss(pred, target));
}

double mse_loss(std::span<const double> pred, std::span<const double> target, LossMode mode) {
  check_pair(pred, target, "mse_loss");
  const std::size_t first = first_scored_step(pred.size(), mode);
  double sum = 0.0;
  for (std::size_t t = first; t < pred.size(); ++t) {
    const double d = pred[t] - target[t];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size() - first);
}

Gradients bptt(const Params& p, const StepTrace<double>& trace, std::span<const double> targets, LossMode mode) {
  const std::size_t steps = trace.length();
  if (steps == 0 || targets.size() != steps || trace.states.size() != steps + 1) {
    throw std::invalid_argument("bptt: trace length " + std::to_string(steps) + " does not match " +
                                std::to_string(targets.size()) + " targets");
  }
  const Eigen::Index hidden = p.hidden_size();
  const std::size_t first = first_scored_step(steps, mode);
  const double scale = 2.0 / static_cast<double>(steps - first);

  Gradients grad = Gradients::zeros(hidden, p.input_size());
  VectorXd dh_next = VectorXd::Zero(hidden);
  VectorXd dc_next = VectorXd::Zero(hidden);
  std::array<VectorXd, kGateCount> dz;
  VectorXd dh(hidden), dc(hidden), tanh_c(hidden);

  for (std::size_t t = steps; t-- > 0;) {
    const auto& s = trace.states[t + 1];
    const auto& prev = trace.states[t];
    const auto& x = trace.inputs[t];

    dh = dh_next;
    if (t >= first) {
      const double pred = head(p, s.h);
      const double dy = scale * (pred - targets[t]);
      grad.head_weights.noalias() += dy * s.h;
      grad.head_bias += dy;
      dh.noalias() += dy * p.head_weights;
    }

    tanh_c = s.c.array().tanh();
    dc = dc_next.array() + dh.array() * s.o.array() * (1.0 - tanh_c.array().square());

    // Gradients w.r.t. gate pre-activations.
    dz[kOutputGate] = dh.array() * tanh_c.array() * s.o.array() * (1.0 - s.o.array());
    dz[kInputGate] = dc.array() * s.g.array() * s.i.array() * (1.0 - s.i.array());
    dz[kForgetGate] = dc.array() * prev.c.array() * s.f.array() * (1.0 - s.f.array());
    dz[kCellGate] = dc.array() * s.i.array() * (1.0 - s.g.array().square());

    dc_next = dc.cwiseProduct(s.f);
    dh_next.setZero();
    for (std::size_t k = 0; k < kGateCount; ++k) {
      auto& gw = grad.gates[k];
      gw.input.noalias() += dz[k] * x.transpose();
      gw.recurrent.noalias() += dz[k] * prev.h.transpose();
      gw.bias += dz[k];
      dh_next.noalias() += p.gates[k].recurrent.transpose() * dz[k];
    }
  }
  return grad;
}

Gradients finite_diff(const Params& p, std::span<const VectorXd> xs, std::span<const double> targets, double eps,
                      LossMode mode) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff: eps must be > 0");
  Params probe = p;
  Gradients grad = Gradients::zeros(p.hidden_size(), p.input_size());
  auto loss = [&]() { return mse_loss(predict(probe, xs), targets, mode); };
  auto probe_blocks = parameter_blocks(probe);
  auto grad_blocks = parameter_blocks(grad);
  for (std::size_t b = 0; b < kParameterBlocks; ++b) {
    for (std::size_t i = 0; i < probe_blocks[b].size(); ++i) {
      double& theta = probe_blocks[b][i];
      const double saved = theta;
      theta = saved + eps;
      const double up = loss();
      theta = saved - eps;
      const double down = loss();
      theta = saved;
      grad_blocks[b][i] = (up - down) / (2.0 * eps);
    }
  }
  return grad;
}

double global_norm(const Gradients& g) {
  double sum = 0.0;
  for (auto block : parameter_blocks(g)) {
    for (double v : block) sum += v * v;
  }
  return std::sqrt(sum);
}

double clip_global_norm(Gradients& g, double max_norm) {
  const double norm = global_norm(g);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto block : parameter_blocks(g)) {
      for (double& v : block) v *= factor;
    }
  }
  return norm;
}

double max_relative_error(const Gradients& a, const Gradients& b) {
  const auto ab = parameter_blocks(a);
  const auto bb = parameter_blocks(b);
  double worst = 0.0;
  for (std::size_t k = 0; k < kParameterBlocks; ++k) {
    if (ab[k].size() != bb[k].size()) throw DimensionError("max_relative_error: gradient shapes differ");
    for (std::size_t i = 0; i < ab[k].size(); ++i) {
      const double denom = std::max({std::abs(ab[k][i]), std::abs(bb[k][i]), 1e-8});
      worst = std::max(worst, std::abs(ab[k][i] - bb[k][i]) / denom);
    }
  }
  return worst;
}

GradCheckResult gradient_check(std::uint64_t seed, std::size_t instances, double eps) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> hidden_dist(1, 4), input_dist(1, 3), length_dist(1, 10);
  std::uniform_real_distribution<double> value(-1.0, 1.0);

  GradCheckResult result;
  for (std::size_t n = 0; n < instances; ++n) {
    const int hidden = hidden_dist(rng), input = input_dist(rng), steps = length_dist(rng);
    Params p = init_params<double>(hidden, input, rng());
    // Spread biases and the head so no gradient block is trivially zero.
    for (auto& g : p.gates) {
      for (Eigen::Index i = 0; i < g.bias.size(); ++i) g.bias[i] += 0.5 * value(rng);
    }
    p.head_bias = value(rng);

    std::vector<VectorXd> xs(steps, VectorXd(input));
    std::vector<double> targets(steps);
    for (auto& x : xs) {
      for (Eigen::Index i = 0; i < input; ++i) x[i] = value(rng);
    }
    for (auto& y : targets) y = value(rng);

    const auto fwd = forward<double>(p, xs);
    const Gradients analytic = bptt(p, fwd.trace, targets);
    const Gradients numeric = finite_diff(p, xs, targets, eps);
    result.max_relative_error = std::max(result.max_relative_error, max_relative_error(analytic, numeric));
    result.parameters_checked += parameter_count(p);
    ++result.instances;
  }
  return result;
}

void write_report_csv(std::ostream& os, const TrainReport& report) {
  os << "epoch,train_rmse,val_rmse\n";
  char buf[96];
  for (std::size_t e = 0; e < report.epochs_run(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e + 1, report.train_rmse[e], report.val_rmse[e]);
    os << buf;
  }
}

double evaluate_rmse(const Params& p, std::span<const FeatureWindow> windows, LossMode mode) {
  if (windows.empty()) throw std::invalid_argument("evaluate_rmse: no windows");
  double sum = 0.0;
  for (const auto& w : windows) sum += mse_loss(predict<double>(p, w.inputs), w.targets, mode);
  return std::sqrt(sum / static_cast<double>(windows.size()));
}

namespace {

class Adam {
 public:
  Adam(const Params& shape, double lr)
      : lr_(lr), m_(Gradients::zeros(shape.hidden_size(), shape.input_size())), v_(m_) {}

  void update(Params& p, const Gradients& g) {
    ++t_;
    const double bias1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bias2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    auto pb = parameter_blocks(p);
    auto gb = parameter_blocks(g);
    auto mb = parameter_blocks(m_);
    auto vb = parameter_blocks(v_);
    for (std::size_t k = 0; k < kParameterBlocks; ++k) {
      for (std::size_t i = 0; i < pb[k].size(); ++i) {
        const double grad = gb[k][i];
        mb[k][i] = kBeta1 * mb[k][i] + (1.0 - kBeta1) * grad;
        vb[k][i] = kBeta2 * vb[k][i] + (1.0 - kBeta2) * grad * grad;
        const double m_hat = mb[k][i] / bias1;
        const double v_hat = vb[k][i] / bias2;
        pb[k][i] -= lr_ * m_hat / (std::sqrt(v_hat) + kEpsilon);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  double lr_;
  Gradients m_;
  Gradients v_;
  std::uint64_t t_ = 0;
};

void accumulate(Gradients& into, const Gradients& g) {
  auto ib = parameter_blocks(into);
  auto gb = parameter_blocks(g);
  for (std::size_t k = 0; k < kParameterBlocks; ++k) {
    for (std::size_t i = 0; i < ib[k].size(); ++i) ib[k][i] += gb[k][i];
  }
}

void scale_gradients(Gradients& g, double factor) {
  for (auto block : parameter_blocks(g)) {
    for (double& v : block) v *= factor;
  }
}

}  // namespace

TrainResult train(Params init, std::span<const FeatureWindow> train_windows,
                  std::span<const FeatureWindow> val_windows, const TrainConfig& cfg) {
  cfg.validate();
  if (train_windows.empty() || val_windows.empty()) {
    throw DataError("train: training and validation window sets must both be nonempty");
  }
  init.check_shapes();

  Params params = std::move(init);
  TrainResult best{params, {}};
  TrainReport& report = best.report;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  Adam adam(params, cfg.learning_rate);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<VectorXd> noisy;
  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_mse = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch);
      Gradients grad = Gradients::zeros(params.hidden_size(), params.input_size());
      double batch_mse = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const auto& w = train_windows[order[b]];
        std::span<const VectorXd> inputs(w.inputs);
        if (cfg.input_noise > 0.0) {
          noisy = w.inputs;
          for (auto& x : noisy) x[0] += cfg.input_noise * noise(rng);
          inputs = noisy;
        }
        const auto fwd = forward<double>(params, inputs);
        batch_mse += mse_loss(fwd.predictions, w.targets, cfg.loss);
        accumulate(grad, bptt(params, fwd.trace, w.targets, cfg.loss));
      }
      if (!std::isfinite(batch_mse)) {
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index + 1));
      }
      epoch_mse += batch_mse;
      scale_gradients(grad, 1.0 / static_cast<double>(stop - start));
      if (!std::isfinite(global_norm(grad))) {
        throw NumericalError("train: non-finite gradient at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index + 1));
      }
      clip_global_norm(grad, cfg.grad_clip_norm);
      adam.update(params, grad);
    }

    const double train_rmse = std::sqrt(epoch_mse / static_cast<double>(train_windows.size()));
    const double val_rmse = evaluate_rmse(params, val_windows, cfg.loss);
    if (!std::isfinite(val_rmse)) {
      throw NumericalError("train: non-finite validation loss at epoch " + std::to_string(epoch));
    }
    report.train_rmse.push_back(train_rmse);
    report.val_rmse.push_back(val_rmse);

    if (val_rmse < best_val) {
      best_val = val_rmse;
      best.params = params;
      report.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      report.stop = StopReason::EarlyStop;
      break;
    }
  }
  return best;
}

}  // namespace demandcast
