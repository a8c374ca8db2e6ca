#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "demandcast/errors.hpp"
#include "demandcast/features.hpp"
#include "demandcast/linalg.hpp"

namespace demandcast {

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCellGate = 3 };
inline constexpr std::size_t kGateCount = 4;

/// Weights feeding one gate: input (H x D), recurrent (H x H), bias (H).
template <typename Scalar>
struct GateWeights {
  Matrix<Scalar> input;
  Matrix<Scalar> recurrent;
  Vector<Scalar> bias;
};

/// Single-layer LSTM cell with a scalar linear regression head.
template <typename Scalar>
struct LstmParams {
  std::array<GateWeights<Scalar>, kGateCount> gates;
  Vector<Scalar> head_weights;
  Scalar head_bias = Scalar(0);

  Eigen::Index hidden_size() const { return head_weights.size(); }
  Eigen::Index input_size() const { return gates[kInputGate].input.cols(); }

  static LstmParams zeros(Eigen::Index hidden, Eigen::Index input) {
    LstmParams p;
    for (auto& g : p.gates) {
      g.input = Matrix<Scalar>::Zero(hidden, input);
      g.recurrent = Matrix<Scalar>::Zero(hidden, hidden);
      g.bias = Vector<Scalar>::Zero(hidden);
    }
    p.head_weights = Vector<Scalar>::Zero(hidden);
    p.head_bias = Scalar(0);
    return p;
  }

  /// Throws DimensionError if any tensor disagrees with (H, D).
  void check_shapes() const {
    const Eigen::Index h = hidden_size(), d = input_size();
    for (const auto& g : gates) {
      if (g.input.rows() != h || g.input.cols() != d || g.recurrent.rows() != h || g.recurrent.cols() != h ||
          g.bias.size() != h) {
        throw DimensionError("LstmParams: inconsistent gate shapes for H=" + std::to_string(h) +
                             ", D=" + std::to_string(d));
      }
    }
  }
};

inline constexpr std::size_t kParameterBlocks = 3 * kGateCount + 2;

/// Every parameter tensor as a flat contiguous span, in a fixed order
/// (per gate: input, recurrent, bias; then head weights, head bias).
template <typename Scalar>
std::array<std::span<Scalar>, kParameterBlocks> parameter_blocks(LstmParams<Scalar>& p) {
  std::array<std::span<Scalar>, kParameterBlocks> out;
  std::size_t i = 0;
  for (auto& g : p.gates) {
    out[i++] = {g.input.data(), static_cast<std::size_t>(g.input.size())};
    out[i++] = {g.recurrent.data(), static_cast<std::size_t>(g.recurrent.size())};
    out[i++] = {g.bias.data(), static_cast<std::size_t>(g.bias.size())};
  }
  out[i++] = {p.head_weights.data(), static_cast<std::size_t>(p.head_weights.size())};
  out[i++] = {&p.head_bias, 1};
  return out;
}

template <typename Scalar>
std::array<std::span<const Scalar>, kParameterBlocks> parameter_blocks(const LstmParams<Scalar>& p) {
  auto blocks = parameter_blocks(const_cast<LstmParams<Scalar>&>(p));
  std::array<std::span<const Scalar>, kParameterBlocks> out;
  for (std::size_t i = 0; i < kParameterBlocks; ++i) out[i] = blocks[i];
  return out;
}

template <typename Scalar>
std::size_t parameter_count(const LstmParams<Scalar>& p) {
  std::size_t n = 0;
  for (auto b : parameter_blocks(p)) n += b.size();
  return n;
}

/// Weights uniform in [-1/sqrt(H), 1/sqrt(H)] from a seeded mt19937_64; forget-gate
/// bias 1, all other biases and the head bias 0.
template <typename Scalar = double>
LstmParams<Scalar> init_params(Eigen::Index hidden, Eigen::Index input, std::uint64_t seed) {
  if (hidden < 1 || input < 1) {
    throw std::invalid_argument("init_params: hidden and input sizes must be >= 1");
  }
  auto p = LstmParams<Scalar>::zeros(hidden, input);
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto draw = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(dist(rng));
  };
  for (auto& g : p.gates) {
    draw(g.input);
    draw(g.recurrent);
  }
  draw(p.head_weights);
  p.gates[kForgetGate].bias.setOnes();
  return p;
}

/// Hidden/cell state after one step, with the gate activations that produced it.
template <typename Scalar>
struct LstmState {
  Vector<Scalar> h;
  Vector<Scalar> c;
  Vector<Scalar> i;  // input gate
  Vector<Scalar> f;  // forget gate
  Vector<Scalar> o;  // output gate
  Vector<Scalar> g;  // cell candidate

  static LstmState zeros(Eigen::Index hidden) {
    LstmState s;
    s.h = Vector<Scalar>::Zero(hidden);
    s.c = Vector<Scalar>::Zero(hidden);
    return s;
  }
};

/// Everything backpropagation needs from a forward pass. states[0] is the
/// initial state; states[t + 1] follows inputs[t].
template <typename Scalar>
struct StepTrace {
  std::vector<Vector<Scalar>> inputs;
  std::vector<LstmState<Scalar>> states;

  std::size_t length() const { return inputs.size(); }
};

/// One LSTM step:
///   i = sigma(I_i x + R_i h + b_i), f, o likewise, g = tanh(I_c x + R_c h + b_c)
///   c' = f * c + i * g,  h' = o * tanh(c')
template <typename Scalar, typename DerivedX>
LstmState<Scalar> step(const LstmParams<Scalar>& p, const Eigen::MatrixBase<DerivedX>& x,
                       const LstmState<Scalar>& prev) {
  const Eigen::Index hidden = p.hidden_size();
  if (x.size() != p.input_size() || prev.h.size() != hidden || prev.c.size() != hidden) {
    throw DimensionError("step: x has " + std::to_string(x.size()) + " entries (D=" +
                         std::to_string(p.input_size()) + "), state has " + std::to_string(prev.h.size()) +
                         "/" + std::to_string(prev.c.size()) + " (H=" + std::to_string(hidden) + ")");
  }
  auto pre = [&](Gate gate) {
    const auto& w = p.gates[gate];
    Vector<Scalar> z = affine(w.input, x, w.bias);
    z.noalias() += w.recurrent * prev.h;
    return z;
  };
  LstmState<Scalar> next;
  next.i = sigmoid(pre(kInputGate));
  next.f = sigmoid(pre(kForgetGate));
  next.o = sigmoid(pre(kOutputGate));
  next.g = tanh_act(pre(kCellGate));
  next.c = hadamard(next.f, prev.c) + hadamard(next.i, next.g);
  next.h = hadamard(next.o, Vector<Scalar>(tanh_act(next.c)));
  return next;
}

template <typename Scalar>
Scalar head(const LstmParams<Scalar>& p, const Vector<Scalar>& h) {
  return p.head_weights.dot(h) + p.head_bias;
}

template <typename Scalar>
struct ForwardResult {
  std::vector<Scalar> predictions;
  StepTrace<Scalar> trace;
};

/// Unrolls `step` from a zero state, emitting a head prediction at every step.
template <typename Scalar>
ForwardResult<Scalar> forward(const LstmParams<Scalar>& p, std::span<const Vector<Scalar>> xs) {
  if (xs.empty()) throw std::invalid_argument("forward: empty input sequence");
  ForwardResult<Scalar> out;
  out.predictions.reserve(xs.size());
  out.trace.inputs.assign(xs.begin(), xs.end());
  out.trace.states.reserve(xs.size() + 1);
  out.trace.states.push_back(LstmState<Scalar>::zeros(p.hidden_size()));
  for (const auto& x : xs) {
    out.trace.states.push_back(step(p, x, out.trace.states.back()));
    out.predictions.push_back(head(p, out.trace.states.back().h));
  }
  return out;
}

/// Predictions only, without keeping the trace.
template <typename Scalar>
std::vector<Scalar> predict(const LstmParams<Scalar>& p, std::span<const Vector<Scalar>> xs) {
  std::vector<Scalar> out;
  out.reserve(xs.size());
  auto state = LstmState<Scalar>::zeros(p.hidden_size());
  for (const auto& x : xs) {
    state = step(p, x, state);
    out.push_back(head(p, state.h));
  }
  return out;
}

/// Known future inputs at one forecast step, already on the model's feature scale.
struct ExogenousFeatures {
  double temperature = 0.0;
  double time = 0.0;
};

/// Iterated one-step forecasting.
///
/// The network is run over `warmup` (observed inputs) from a zero state; its last
/// prediction is forecast[0]. Each further forecast[j] comes from feeding back
/// forecast[j-1] as the consumption channel together with future_exogenous[j-1].
/// future_exogenous[j] therefore describes the timestamp of forecast[j]; the final
/// entry is not consumed. Returned values are unscaled with `consumption_scaler`.
template <typename Scalar>
std::vector<Scalar> forecast_closed_loop(const LstmParams<Scalar>& p, std::span<const Vector<Scalar>> warmup,
                                         std::span<const ExogenousFeatures> future_exogenous,
                                         std::size_t horizon, const ScalerParams& consumption_scaler,
                                         FeatureSet features = FeatureSet::All) {
  if (horizon == 0) return {};
  if (warmup.empty()) throw std::invalid_argument("forecast_closed_loop: empty warmup");
  if (future_exogenous.size() != horizon) {
    throw DimensionError("forecast_closed_loop: " + std::to_string(future_exogenous.size()) +
                         " exogenous steps for horizon " + std::to_string(horizon));
  }
  if (feature_count(features) != p.input_size()) {
    throw DimensionError("forecast_closed_loop: feature set '" + to_string(features) + "' has " +
                         std::to_string(feature_count(features)) + " channels, model expects " +
                         std::to_string(p.input_size()));
  }

  auto state = LstmState<Scalar>::zeros(p.hidden_size());
  for (const auto& x : warmup) state = step(p, x, state);
  Scalar next = head(p, state.h);

  std::vector<Scalar> out;
  out.reserve(horizon);
  out.push_back(next);
  for (std::size_t j = 0; j + 1 < horizon; ++j) {
    const auto& ex = future_exogenous[j];
    const Vector<Scalar> x =
        feature_vector(static_cast<double>(next), ex.temperature, ex.time, features).template cast<Scalar>();
    state = step(p, x, state);
    next = head(p, state.h);
    out.push_back(next);
  }
  for (auto& v : out) v = static_cast<Scalar>(consumption_scaler.unscale(static_cast<double>(v)));
  return out;
}

}  // namespace demandcast
