#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "demandcast/errors.hpp"
#include "demandcast/training.hpp"

using namespace demandcast;

namespace {

Params random_params(Eigen::Index H, Eigen::Index D, std::uint64_t seed) {
  auto p = Params::zeros(H, D);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (auto block : parameter_blocks(p))
    for (auto& v : block) v = u(rng);
  return p;
}

std::vector<VectorXd> random_inputs(std::size_t T, Eigen::Index D, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<VectorXd> xs(T, VectorXd(D));
  for (auto& x : xs)
    for (Eigen::Index j = 0; j < D; ++j) x(j) = u(rng);
  return xs;
}

std::vector<double> random_targets(std::size_t T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> t(T);
  for (auto& v : t) v = u(rng);
  return t;
}

double grad_error(const Params& p, const std::vector<VectorXd>& xs, const std::vector<double>& ys, LossMode mode,
                  double eps = 1e-5) {
  const auto fwd = forward<double>(p, xs);
  return max_relative_error(bptt(p, fwd.trace, ys, mode), finite_diff(p, xs, ys, eps, mode));
}

FeatureWindow constant_window(std::size_t L, double input, double target) {
  FeatureWindow w;
  w.inputs.assign(L, VectorXd::Constant(1, input));
  w.targets.assign(L, target);
  return w;
}

bool same_params(const Params& a, const Params& b) {
  const auto ba = parameter_blocks(a), bb = parameter_blocks(b);
  for (std::size_t i = 0; i < kParameterBlocks; ++i) {
    if (ba[i].size() != bb[i].size()) return false;
    for (std::size_t k = 0; k < ba[i].size(); ++k)
      if (ba[i][k] != bb[i][k]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("rmse_loss") {
  const std::vector<double> a{3.0, 4.0}, z{0.0, 0.0};
  CHECK(rmse_loss(a, a) == 0.0);
  CHECK(rmse_loss(a, z) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  CHECK(rmse_loss(std::vector<double>{2.5}, std::vector<double>{-1.0}) == doctest::Approx(3.5));
  CHECK_THROWS(rmse_loss(std::vector<double>{}, std::vector<double>{}));
  CHECK_THROWS(rmse_loss(a, std::vector<double>{1.0}));
}

TEST_CASE("mse_loss step selection") {
  const std::vector<double> p{1.0, 2.0, 3.0}, t{0.0, 0.0, 0.0};
  CHECK(mse_loss(p, t, LossMode::AllSteps) == doctest::Approx(14.0 / 3.0));
  CHECK(mse_loss(p, t, LossMode::LastStep) == 9.0);
  CHECK(parse_loss_mode("last_step") == LossMode::LastStep);
  CHECK(to_string(LossMode::AllSteps) == "all_steps");
  CHECK_THROWS(parse_loss_mode("sometimes"));
}

TEST_CASE("gradients vanish at a perfect fit") {
  const auto p = random_params(3, 2, 1);
  const auto xs = random_inputs(7, 2, 2);
  const auto fwd = forward<double>(p, xs);
  for (auto mode : {LossMode::AllSteps, LossMode::LastStep}) {
    const auto g = bptt(p, fwd.trace, fwd.predictions, mode);
    CHECK(global_norm(g) == 0.0);
  }
}

TEST_CASE("bptt agrees with finite differences") {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int n = 0; n < 25; ++n) {
    const auto H = static_cast<Eigen::Index>(1 + rng() % 4);
    const auto D = static_cast<Eigen::Index>(1 + rng() % 3);
    const auto T = static_cast<std::size_t>(1 + rng() % 10);
    const auto p = random_params(H, D, rng());
    const auto xs = random_inputs(T, D, rng());
    const auto ys = random_targets(T, rng());
    worst = std::max(worst, grad_error(p, xs, ys, LossMode::AllSteps));
    worst = std::max(worst, grad_error(p, xs, ys, LossMode::LastStep));
  }
  CHECK(worst < 1e-5);

  SUBCASE("full-size instance") {
    const auto p = random_params(4, 3, 77);
    CHECK(grad_error(p, random_inputs(10, 3, 78), random_targets(10, 79), LossMode::AllSteps) < 1e-5);
  }
}

TEST_CASE("gradient_check helper") {
  const auto r = gradient_check(1);
  CHECK(r.instances == 20);
  CHECK(r.parameters_checked > 0);
  CHECK(r.max_relative_error < 1e-5);
}

TEST_CASE("single scalar step gradient by hand") {
  const auto p = random_params(1, 1, 5);
  const double x = 0.6, target = -0.3;
  const std::vector<VectorXd> xs{VectorXd::Constant(1, x)};
  const std::vector<double> ys{target};

  auto pre = [&](Gate g) { return p.gates[g].input(0, 0) * x + p.gates[g].bias(0); };
  const double i = 1.0 / (1.0 + std::exp(-pre(kInputGate)));
  const double o = 1.0 / (1.0 + std::exp(-pre(kOutputGate)));
  const double g = std::tanh(pre(kCellGate));
  const double c = i * g;
  const double h = o * std::tanh(c);
  const double y = p.head_weights(0) * h + p.head_bias;

  const double dy = 2.0 * (y - target);
  const double dh = dy * p.head_weights(0);
  const double dc = dh * o * (1.0 - std::tanh(c) * std::tanh(c));
  const double dzi = dc * g * i * (1.0 - i);
  const double dzo = dh * std::tanh(c) * o * (1.0 - o);
  const double dzg = dc * i * (1.0 - g * g);

  const auto grad = bptt(p, forward<double>(p, xs).trace, ys);
  CHECK(grad.head_bias == doctest::Approx(dy).epsilon(1e-14));
  CHECK(grad.head_weights(0) == doctest::Approx(dy * h).epsilon(1e-14));
  CHECK(grad.gates[kInputGate].input(0, 0) == doctest::Approx(dzi * x).epsilon(1e-13));
  CHECK(grad.gates[kInputGate].bias(0) == doctest::Approx(dzi).epsilon(1e-13));
  CHECK(grad.gates[kOutputGate].input(0, 0) == doctest::Approx(dzo * x).epsilon(1e-13));
  CHECK(grad.gates[kOutputGate].bias(0) == doctest::Approx(dzo).epsilon(1e-13));
  CHECK(grad.gates[kCellGate].input(0, 0) == doctest::Approx(dzg * x).epsilon(1e-13));
  CHECK(grad.gates[kCellGate].bias(0) == doctest::Approx(dzg).epsilon(1e-13));
  // c_{t-1} = 0 and h_{t-1} = 0, so forget gate and all recurrent weights get nothing.
  CHECK(grad.gates[kForgetGate].input(0, 0) == 0.0);
  CHECK(grad.gates[kForgetGate].bias(0) == 0.0);
  for (const auto& gw : grad.gates) CHECK(gw.recurrent(0, 0) == 0.0);
}

TEST_CASE("finite differences") {
  const auto p = random_params(3, 2, 9);
  const auto xs = random_inputs(6, 2, 10);
  const auto ys = random_targets(6, 11);

  SUBCASE("head bias equals twice the mean residual") {
    const auto pred = predict<double>(p, xs);
    double mean = 0.0;
    for (std::size_t t = 0; t < pred.size(); ++t) mean += pred[t] - ys[t];
    mean /= static_cast<double>(pred.size());
    CHECK(std::abs(finite_diff(p, xs, ys).head_bias - 2.0 * mean) < 1e-8);
  }
  SUBCASE("halving epsilon does not hurt agreement") {
    const double coarse = grad_error(p, xs, ys, LossMode::AllSteps, 1e-3);
    const double fine = grad_error(p, xs, ys, LossMode::AllSteps, 5e-4);
    CHECK((fine <= coarse || fine < 1e-5));
  }
  SUBCASE("epsilon must be positive") { CHECK_THROWS(finite_diff(p, xs, ys, 0.0)); }
}

TEST_CASE("global-norm clipping") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = Gradients::zeros(3, 2);
    for (auto block : parameter_blocks(g))
      for (auto& v : block) v = n(rng);
    const double before = global_norm(g);
    const double limit = 0.1 + 0.05 * trial;
    CHECK(clip_global_norm(g, limit) == before);
    CHECK(global_norm(g) <= limit + 1e-12);
  }
  auto small = Gradients::zeros(2, 1);
  small.head_bias = 0.5;
  clip_global_norm(small, 1.0);
  CHECK(small.head_bias == 0.5);
}

TEST_CASE("TrainConfig validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.learning_rate = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.patience = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.grad_clip_norm = -1.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.input_noise = -0.1;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("train on a constant target converges") {
  std::vector<FeatureWindow> train_w(8, constant_window(6, 0.5, 0.5));
  std::vector<FeatureWindow> val_w(2, constant_window(6, 0.5, 0.5));
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 200;
  cfg.patience = 200;
  cfg.batch = 1;
  cfg.seed = 3;
  const auto res = train(init_params(4, 1, 3), train_w, val_w, cfg);
  CHECK(res.report.epochs_run() <= 200);
  CHECK(res.report.train_rmse.back() < 1e-3);
  const auto pred = predict<double>(res.params, train_w[0].inputs);
  CHECK(pred.back() == doctest::Approx(0.5).epsilon(1e-2));
}

TEST_CASE("early stopping returns the best epoch") {
  // Training pulls predictions toward 1 while validation wants 0, so validation
  // RMSE worsens after every epoch.
  std::vector<FeatureWindow> train_w(4, constant_window(4, 0.0, 1.0));
  std::vector<FeatureWindow> val_w(1, constant_window(4, 0.0, 0.0));
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.patience = 1;
  cfg.max_epochs = 50;
  cfg.batch = 2;
  cfg.seed = 8;
  auto init = init_params(3, 1, 8);
  init.head_bias = 0.5;

  const auto res = train(init, train_w, val_w, cfg);
  CHECK(res.report.epochs_run() == 2);
  CHECK(res.report.val_rmse[1] > res.report.val_rmse[0]);
  CHECK(res.report.best_epoch == 1);
  CHECK(res.report.stop == StopReason::EarlyStop);

  cfg.max_epochs = 1;
  const auto one = train(init, train_w, val_w, cfg);
  CHECK(one.report.stop == StopReason::MaxEpochs);
  CHECK(same_params(res.params, one.params));
}

TEST_CASE("property: returned parameters have the minimum validation RMSE") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<FeatureWindow> train_w, val_w;
  for (int w = 0; w < 12; ++w) {
    FeatureWindow f;
    for (int t = 0; t < 8; ++t) {
      f.inputs.push_back(VectorXd::Constant(2, u(rng)));
      f.targets.push_back(u(rng));
    }
    (w < 9 ? train_w : val_w).push_back(f);
  }
  TrainConfig cfg;
  cfg.learning_rate = 5e-2;
  cfg.max_epochs = 30;
  cfg.patience = 5;
  cfg.batch = 3;
  const auto res = train(init_params(3, 2, 1), train_w, val_w, cfg);
  const auto& v = res.report.val_rmse;
  const double best = *std::min_element(v.begin(), v.end());
  CHECK(v[res.report.best_epoch - 1] == best);
  CHECK(evaluate_rmse(res.params, val_w) == doctest::Approx(best).epsilon(1e-14));
  CHECK(res.report.best_epoch <= res.report.epochs_run());
  for (std::size_t e = 0; e < v.size(); ++e) {
    CHECK(v[e] >= 0.0);
    CHECK(res.report.train_rmse[e] >= 0.0);
  }
}

TEST_CASE("training is deterministic under a fixed seed") {
  std::vector<FeatureWindow> train_w, val_w;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int w = 0; w < 10; ++w) {
    FeatureWindow f;
    for (int t = 0; t < 5; ++t) {
      f.inputs.push_back(VectorXd::Constant(3, u(rng)));
      f.targets.push_back(u(rng));
    }
    (w < 8 ? train_w : val_w).push_back(f);
  }
  TrainConfig cfg;
  cfg.max_epochs = 10;
  cfg.seed = 17;
  cfg.batch = 3;
  cfg.input_noise = 0.05;
  const auto a = train(init_params(4, 3, 2), train_w, val_w, cfg);
  const auto b = train(init_params(4, 3, 2), train_w, val_w, cfg);
  std::ostringstream ca, cb;
  write_report_csv(ca, a.report);
  write_report_csv(cb, b.report);
  CHECK(ca.str() == cb.str());
  CHECK(same_params(a.params, b.params));
  CHECK(ca.str().rfind("epoch,train_rmse,val_rmse\n", 0) == 0);

  cfg.seed = 18;
  const auto c = train(init_params(4, 3, 2), train_w, val_w, cfg);
  CHECK_FALSE(same_params(a.params, c.params));
}

TEST_CASE("train rejects empty window sets") {
  std::vector<FeatureWindow> some(1, constant_window(3, 0.1, 0.2)), none;
  CHECK_THROWS_AS(train(init_params(2, 1, 0), none, some, TrainConfig{}), DataError);
  CHECK_THROWS_AS(train(init_params(2, 1, 0), some, none, TrainConfig{}), DataError);
}

TEST_CASE("non-finite loss aborts with the epoch and batch") {
  std::vector<FeatureWindow> train_w(2, constant_window(3, 0.1, std::nan("")));
  std::vector<FeatureWindow> val_w(1, constant_window(3, 0.1, 0.2));
  TrainConfig cfg;
  cfg.batch = 1;
  try {
    train(init_params(2, 1, 0), train_w, val_w, cfg);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("batch 1") != std::string::npos);
  }
}
