#include <gtest/gtest.h>

#include <cmath>

#include "pgbias/errors.hpp"
#include "pgbias/estimator/estimator.hpp"
#include "pgbias/optim/optim.hpp"
#include "pgbias/optim/trainer.hpp"

using namespace pgbias;

namespace {

OptimState make(Algorithm a, std::size_t n, double lr) { return OptimState::fresh(OptimizerConfig{a}, n, lr); }

}  // namespace

TEST(Optimizer, RmsPropFirstStepByHand) {
  auto st = make(Algorithm::RmsProp, 1, 0.1);
  std::vector<double> p{0.0};
  optimizer_step(st, p, std::vector<double>{1.0});
  EXPECT_NEAR(st.second_moment[0], 0.01, 1e-17);
  // 0.1 / sqrt(0.01 + 1e-8)
  EXPECT_NEAR(p[0], 0.9999995000003750, 1e-15);
}

TEST(Optimizer, ZeroGradientLeavesParamsUnchanged) {
  for (auto a : {Algorithm::Sgd, Algorithm::Momentum, Algorithm::RmsProp, Algorithm::Adam}) {
    auto st = make(a, 3, 0.5);
    std::vector<double> p{1.0, -2.0, 3.0};
    for (int k = 0; k < 5; ++k) optimizer_step(st, p, std::vector<double>(3, 0.0));
    EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0})) << to_string(a);
  }
}

TEST(Optimizer, SgdIsLinearInLr) {
  const std::vector<double> g{0.3, -1.2, 4.0};
  auto a = make(Algorithm::Sgd, 3, 0.01);
  auto b = make(Algorithm::Sgd, 3, 0.02);
  std::vector<double> pa(3, 0.0), pb(3, 0.0);
  optimizer_step(a, pa, g);
  optimizer_step(b, pb, g);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(pb[i], 2.0 * pa[i]);
}

TEST(Optimizer, RmsPropPreservesSignAndApproachesLr) {
  Rng rng(1);
  auto st = make(Algorithm::RmsProp, 5, 0.01);
  std::vector<double> p(5, 0.0);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> g(5);
    for (auto& v : g) v = rng.normal() * 10.0;
    auto before = p;
    optimizer_step(st, p, g);
    for (std::size_t i = 0; i < 5; ++i) {
      if (g[i] != 0.0) EXPECT_EQ(std::signbit(p[i] - before[i]), std::signbit(g[i]));
    }
  }
  for (double scale : {1e-3, 1.0, 1e3}) {
    auto c = make(Algorithm::RmsProp, 1, 0.01);
    c.config.delta = 0.0;
    std::vector<double> q{0.0};
    double last = 0.0;
    for (int k = 0; k < 5000; ++k) {
      const double before = q[0];
      optimizer_step(c, q, std::vector<double>{scale});
      last = q[0] - before;
    }
    EXPECT_NEAR(last, 0.01, 1e-8);
  }
}

TEST(Optimizer, AdamWithoutMomentumIsRmsProp) {
  OptimizerConfig rms{Algorithm::RmsProp};
  rms.delta = 0.0;
  rms.rmsprop_smoothing = 0.95;
  OptimizerConfig adam{Algorithm::Adam};
  adam.adam_beta1 = 0.0;
  adam.adam_beta2 = 0.95;
  adam.adam_bias_correction = false;
  adam.delta = 0.0;
  auto a = OptimState::fresh(rms, 4, 0.003);
  auto b = OptimState::fresh(adam, 4, 0.003);
  std::vector<double> pa(4, 0.1), pb(4, 0.1);
  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> g(4);
    for (auto& v : g) v = rng.normal();
    optimizer_step(a, pa, g);
    optimizer_step(b, pb, g);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(pa[i], pb[i], 1e-12);
  }
}

TEST(Optimizer, MomentumAndAdamByHand) {
  auto m = make(Algorithm::Momentum, 1, 0.1);
  std::vector<double> p{0.0};
  optimizer_step(m, p, std::vector<double>{1.0});
  optimizer_step(m, p, std::vector<double>{1.0});
  EXPECT_NEAR(p[0], 0.1 + 0.1 * 1.9, 1e-15);
  // Bias-corrected Adam's first step is lr * sign(g) up to delta.
  auto a = make(Algorithm::Adam, 1, 0.1);
  std::vector<double> q{0.0};
  optimizer_step(a, q, std::vector<double>{-3.0});
  EXPECT_NEAR(q[0], -0.1, 1e-8);
}

TEST(Optimizer, RejectsBadInput) {
  auto st = make(Algorithm::Sgd, 2, 0.1);
  std::vector<double> p(2, 0.0);
  EXPECT_THROW(optimizer_step(st, p, std::vector<double>{std::nan(""), 0.0}), Error);
  EXPECT_THROW(optimizer_step(st, p, std::vector<double>{1.0}), Error);
  st.lr = 0.0;
  EXPECT_THROW(optimizer_step(st, p, std::vector<double>{1.0, 1.0}), Error);
}

TEST(Optimizer, StateJsonRoundTrip) {
  auto st = make(Algorithm::Adam, 3, 0.2);
  std::vector<double> p(3, 0.0);
  optimizer_step(st, p, std::vector<double>{0.1, 0.2, 0.3});
  const auto back = OptimState::from_json(st.to_json());
  EXPECT_EQ(back.to_json().dump(), st.to_json().dump());
  EXPECT_EQ(back.step, 1u);
}

TEST(LrSchedule, Examples) {
  const LrSchedule s{3e-4, 0.8, 30};
  EXPECT_DOUBLE_EQ(s.lr_at(0), 3e-4);
  EXPECT_DOUBLE_EQ(s.lr_at(29), 3e-4);
  EXPECT_NEAR(s.lr_at(60), 1.92e-4, 1e-18);
  EXPECT_NEAR(s.lr_at(89), 1.92e-4, 1e-18);
  const LrSchedule flat{1e-3, 1.0, 5};
  for (std::size_t e = 0; e < 100; e += 7) EXPECT_EQ(flat.lr_at(e), 1e-3);
  EXPECT_THROW((LrSchedule{1e-3, 1.5, 1}.validate()), Error);
  EXPECT_THROW((LrSchedule{1e-3, 0.5, 0}.validate()), Error);
}

TEST(Fim, SingleStateSoftmaxDiagonal) {
  auto pi = PolicyModel::tabular_softmax(1, 4);
  pi.set_params(std::vector<double>{0.3, -0.7, 1.1, 0.0});
  const auto probs = pi.action_probs(State{0, {}});
  const std::vector<double> dist{1.0};
  const auto f = exact_fim(pi, dist);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(f.diagonal[i], probs[i] * (1.0 - probs[i]), 1e-14);
    for (std::size_t j = 0; j < 4; ++j) {
      const double expect = i == j ? probs[i] * (1.0 - probs[i]) : -probs[i] * probs[j];
      EXPECT_NEAR(f.full(i, j), expect, 1e-14);
    }
  }
  auto uniform = PolicyModel::tabular_softmax(1, 2);
  for (double d : exact_fim(uniform, dist).diagonal) EXPECT_DOUBLE_EQ(d, 0.25);
  auto sharp = PolicyModel::tabular_softmax(1, 2);
  sharp.set_params(std::vector<double>{40.0, -40.0});
  for (double d : exact_fim(sharp, dist).diagonal) EXPECT_LT(d, 1e-30);
}

TEST(Fim, WeightsStatesByDistribution) {
  auto pi = PolicyModel::tabular_softmax(2, 2);
  const std::vector<double> dist{0.25, 0.75};
  const auto f = exact_fim(pi, dist);
  EXPECT_NEAR(f.diagonal[0], 0.25 * 0.25, 1e-15);
  EXPECT_NEAR(f.diagonal[2], 0.75 * 0.25, 1e-15);
  EXPECT_EQ(f.full(0, 2), 0.0);
  EXPECT_THROW(exact_fim(pi, std::vector<double>{0.5, 0.6}), Error);
  Rng rng(3);
  EXPECT_THROW(exact_fim(PolicyModel::mlp_softmax(2, 2, rng), dist), Error);
}

TEST(Fim, MonteCarloOuterProduct) {
  auto pi = PolicyModel::tabular_softmax(1, 3);
  pi.set_params(std::vector<double>{0.5, -0.2, 0.1});
  const auto f = exact_fim(pi, std::vector<double>{1.0});
  Rng rng(4);
  const std::size_t n = 100000;
  std::vector<double> sum(9, 0.0), sq(9, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto g = pi.grad_log_prob(State{0, {}}, pi.sample_action(State{0, {}}, rng).action);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        const double v = g[i] * g[j];
        sum[i * 3 + j] += v;
        sq[i * 3 + j] += v * v;
      }
  }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const double m = sum[i * 3 + j] / n;
      const double se = std::sqrt((sq[i * 3 + j] / n - m * m) / (n - 1));
      EXPECT_LT(std::abs(m - f.full(i, j)), 4.0 * se);
    }
}

TEST(Fim, PreconditionExamples) {
  const std::vector<double> g{0.5, -2.0, 0.0};
  const auto same = fim_precondition(g, std::vector<double>{1.0, 1.0, 1.0}, 1e-8);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(same[i], g[i], 1e-8);
  const auto one = fim_precondition(g, std::vector<double>{0.3, 0.7, 2.0}, 0.0);
  const auto two = fim_precondition(g, std::vector<double>{0.6, 1.4, 4.0}, 0.0);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(two[i], one[i] / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(two[2], 0.0);
  EXPECT_THROW(fim_precondition(g, std::vector<double>{1.0, -1.0, 1.0}, 0.0), Error);
}

TEST(Fim, PreconditionMatchesRmsPropDivisor) {
  // An RMSProp state whose accumulator already equals F gives the same step.
  const std::vector<double> g{0.2, -0.4};
  auto st = make(Algorithm::RmsProp, 2, 1.0);
  st.config.rmsprop_smoothing = 0.0;
  std::vector<double> p(2, 0.0);
  optimizer_step(st, p, g);
  const auto pre = fim_precondition(g, std::vector<double>{g[0] * g[0], g[1] * g[1]}, st.config.delta);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(p[i], pre[i]);
}

TEST(Trainer, StepLrScaling) {
  InnerLoop loop;
  EXPECT_DOUBLE_EQ(loop.step_lr(1e-3, 500), 1e-3 * 1000.0 / 500.0);
  loop.full_batch = true;
  EXPECT_EQ(loop.resolved_steps(500), 1u);
  loop.steps = 7;
  EXPECT_EQ(loop.resolved_steps(500), 7u);
}

TEST(Trainer, ZeroRewardKlKeepsPolicyNearBehavior) {
  Rng rng(5);
  auto pi = PolicyModel::tabular_softmax(1, 3);
  pi.set_params(std::vector<double>{0.4, -0.3, 0.1});
  Dataset data;
  data.gamma = 0.9;
  for (std::size_t i = 0; i < 2000; ++i) {
    const auto draw = pi.sample_action(State{0, {}}, rng);
    data.samples.push_back({State{0, {}}, draw.action, 0.0, draw.log_prob, 1.0, 0, i});
  }
  data.n_trajectories = 2000;
  SurrogateSpec spec;
  spec.regularizer = RegularizerKind::Kl;
  spec.alpha = 0.3;
  InnerLoop loop;
  loop.full_batch = true;
  loop.steps = 500;
  loop.lr_scale = 500.0;
  auto trained = pi;
  auto st = make(Algorithm::Sgd, 3, 1.0);
  Rng mb(6);
  train_epoch(trained, st, data, spec, loop, 1.0, mb);
  // Full-batch ascent converges to the empirical action frequencies.
  std::vector<double> freq(3, 0.0);
  for (const auto& s : data.samples) freq[s.action.id] += 1.0 / 2000.0;
  const auto probs = trained.action_probs(State{0, {}});
  for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(probs[a], freq[a], 1e-6);
}

TEST(Trainer, SameRngSameResult) {
  Rng rng(7);
  auto pi = PolicyModel::tabular_softmax(2, 2);
  Dataset data;
  data.gamma = 0.9;
  for (std::size_t i = 0; i < 50; ++i) {
    const State s{i % 2, {}};
    const auto draw = pi.sample_action(s, rng);
    data.samples.push_back({s, draw.action, rng.normal(), draw.log_prob, 1.0, 0, i});
  }
  data.n_trajectories = 50;
  auto a = pi, b = pi;
  auto sa = make(Algorithm::RmsProp, 4, 1e-3), sb = sa;
  Rng ra(8), rb(8);
  train_epoch(a, sa, data, SurrogateSpec{}, InnerLoop{}, 1e-3, ra);
  train_epoch(b, sb, data, SurrogateSpec{}, InnerLoop{}, 1e-3, rb);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(a.params()[i], b.params()[i]);
  EXPECT_NE(a.params()[0], pi.params()[0]);
}
