#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "pgbias/errors.hpp"
#include "pgbias/estimator/estimator.hpp"
#include "pgbias/policy/policy_model.hpp"

using namespace pgbias;

namespace {

State obs_state(Rng& rng, std::size_t dim) {
  State s;
  for (std::size_t i = 0; i < dim; ++i) s.x.push_back(rng.uniform(-2.0, 2.0));
  return s;
}

PolicyModel random_model(PolicyKind kind, Rng& rng) {
  switch (kind) {
    case PolicyKind::TabularSoftmax: {
      auto m = PolicyModel::tabular_softmax(4, 3);
      std::vector<double> p(m.num_params());
      for (auto& v : p) v = rng.normal();
      m.set_params(p);
      return m;
    }
    case PolicyKind::TiedAlias: return PolicyModel::tied_alias(rng.uniform(0.05, 0.95));
    case PolicyKind::MlpSoftmax: return PolicyModel::mlp_softmax(3, 4, rng);
    case PolicyKind::MlpGaussian: {
      auto m = PolicyModel::mlp_gaussian(3, 2, rng);
      std::vector<double> p(m.params().begin(), m.params().end());
      p[p.size() - 1] = rng.uniform(-1.0, 0.5);
      p[p.size() - 2] = rng.uniform(-1.0, 0.5);
      m.set_params(p);
      return m;
    }
  }
  throw Error(ErrorKind::Unsupported, "kind");
}

State random_state(const PolicyModel& m, Rng& rng) {
  if (m.is_tabular()) return State{m.kind() == PolicyKind::TiedAlias ? rng.index(2) : rng.index(m.n_states()), {}};
  return obs_state(rng, m.obs_dim());
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

}  // namespace

TEST(LogProb, Examples) {
  const auto tab = PolicyModel::tabular_softmax(2, 2);
  EXPECT_NEAR(tab.log_prob(State{0, {}}, Action{1, {}}), std::log(0.5), 1e-15);
  const auto tied = PolicyModel::tied_alias(0.25);
  EXPECT_NEAR(tied.log_prob(State{0, {}}, Action{0, {}}), std::log(0.25), 1e-15);
  EXPECT_NEAR(tied.log_prob(State{1, {}}, Action{1, {}}), std::log(0.75), 1e-15);

  Rng rng(1);
  auto g = PolicyModel::mlp_gaussian(3, 1, rng, 0.0);
  const State s{0, {0.2, -0.3, 1.0}};
  const auto mu = g.gaussian_mean(s);
  EXPECT_NEAR(g.log_prob(s, Action{0, mu}), -0.5 * std::log(2.0 * std::numbers::pi), 1e-12);
}

TEST(LogProb, DimensionMismatchThrows) {
  Rng rng(2);
  const auto g = PolicyModel::mlp_gaussian(3, 1, rng);
  EXPECT_THROW(g.log_prob(State{0, {1.0, 2.0}}, Action{0, {0.0}}), Error);
  EXPECT_THROW(g.log_prob(State{0, {1.0, 2.0, 3.0}}, Action{0, {0.0, 1.0}}), Error);
  const auto tab = PolicyModel::tabular_softmax(2, 2);
  EXPECT_THROW(tab.log_prob(State{5, {}}, Action{0, {}}), Error);
  EXPECT_THROW(tab.log_prob(State{0, {}}, Action{2, {}}), Error);
}

TEST(GradLogProb, TabularSoftmaxIdentity) {
  auto m = PolicyModel::tabular_softmax(2, 3);
  m.set_params(std::vector<double>{0.1, -0.4, 0.9, 0.0, 0.0, 0.0});
  const auto probs = m.action_probs(State{0, {}});
  const auto g = m.grad_log_prob(State{0, {}}, Action{2, {}});
  for (std::size_t b = 0; b < 3; ++b) EXPECT_NEAR(g[b], (b == 2 ? 1.0 : 0.0) - probs[b], 1e-15);
  for (std::size_t b = 3; b < 6; ++b) EXPECT_EQ(g[b], 0.0);
  const auto tied = PolicyModel::tied_alias(0.3);
  EXPECT_NEAR(tied.grad_log_prob(State{0, {}}, Action{0, {}})[0], 1.0 / 0.3, 1e-12);
  EXPECT_NEAR(tied.grad_log_prob(State{0, {}}, Action{1, {}})[0], -1.0 / 0.7, 1e-12);
}

TEST(GradLogProb, MatchesFiniteDifferencesForEveryKind) {
  Rng rng(3);
  for (auto kind : {PolicyKind::TabularSoftmax, PolicyKind::TiedAlias, PolicyKind::MlpSoftmax, PolicyKind::MlpGaussian}) {
    for (int trial = 0; trial < 100; ++trial) {
      auto m = random_model(kind, rng);
      const State s = random_state(m, rng);
      const Action a = m.sample_action(s, rng).action;
      const auto analytic = m.grad_log_prob(s, a);
      const std::vector<double> base(m.params().begin(), m.params().end());
      auto probe = m;
      const auto fd = finite_diff_grad(
          [&](std::span<const double> p) {
            probe.set_params(p);
            return probe.log_prob(s, a);
          },
          base, 1e-5);
      EXPECT_LT(rel_error(analytic, fd), 1e-4) << to_string(kind) << " trial " << trial;
    }
  }
}

TEST(GradLogProb, AccumulateAddsScaledScore) {
  Rng rng(4);
  const auto m = PolicyModel::mlp_softmax(3, 2, rng);
  const State s = obs_state(rng, 3);
  const Action a{1, {}};
  std::vector<double> acc(m.num_params(), 1.0);
  const double lp = m.accumulate_grad_log_prob(s, a, 2.5, acc);
  EXPECT_EQ(lp, m.log_prob(s, a));
  const auto g = m.grad_log_prob(s, a);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(acc[i], 1.0 + 2.5 * g[i], 1e-12);
}

TEST(GradLogProb, ScoreHasMeanZero) {
  Rng rng(5);
  for (auto kind : {PolicyKind::TabularSoftmax, PolicyKind::TiedAlias, PolicyKind::MlpSoftmax, PolicyKind::MlpGaussian}) {
    const auto m = random_model(kind, rng);
    const State s = random_state(m, rng);
    const std::size_t n = 100000;
    std::vector<double> sum(m.num_params(), 0.0), sq(m.num_params(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto g = m.grad_log_prob(s, m.sample_action(s, rng).action);
      for (std::size_t j = 0; j < g.size(); ++j) {
        sum[j] += g[j];
        sq[j] += g[j] * g[j];
      }
    }
    for (std::size_t j = 0; j < sum.size(); ++j) {
      const double mean = sum[j] / n;
      const double se = std::sqrt(std::max(0.0, sq[j] / n - mean * mean) / (n - 1));
      EXPECT_LE(std::abs(mean), 4.0 * se + 1e-12) << to_string(kind) << " coordinate " << j;
    }
  }
}

TEST(SampleAction, UniformFrequencies) {
  const auto m = PolicyModel::tabular_softmax(1, 3);
  Rng rng(6);
  std::vector<double> count(3, 0.0);
  const std::size_t n = 1000000;
  for (std::size_t i = 0; i < n; ++i) {
    const auto draw = m.sample_action(State{0, {}}, rng);
    count[draw.action.id] += 1.0;
    if (i < 100) EXPECT_EQ(draw.log_prob, m.log_prob(State{0, {}}, draw.action));
  }
  for (double c : count) EXPECT_NEAR(c / n, 1.0 / 3.0, 0.01 / 3.0);
}

TEST(SampleAction, TiedAliasNearOne) {
  const auto m = PolicyModel::tied_alias(1.0 - 1e-6);
  Rng rng(7);
  std::size_t go = 0;
  for (int i = 0; i < 10000; ++i) go += m.sample_action(State{0, {}}, rng).action.id == 0;
  EXPECT_GE(go, 9990u);
}

TEST(SampleAction, GaussianMeanWithinFourSe) {
  Rng rng(8);
  const auto m = PolicyModel::mlp_gaussian(3, 2, rng, -0.5);
  const State s{0, {0.5, 0.5, -1.0}};
  const auto mu = m.gaussian_mean(s);
  const auto sd = m.gaussian_std();
  const std::size_t n = 100000;
  std::vector<double> sum(2, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto draw = m.sample_action(s, rng);
    if (i < 100) EXPECT_EQ(draw.log_prob, m.log_prob(s, draw.action));
    for (std::size_t j = 0; j < 2; ++j) sum[j] += draw.action.u[j];
  }
  for (std::size_t j = 0; j < 2; ++j) EXPECT_LT(std::abs(sum[j] / n - mu[j]), 4.0 * sd[j] / std::sqrt(double(n)));
}

TEST(Policy, DiscreteHeadsNormalize) {
  Rng rng(9);
  for (auto kind : {PolicyKind::TabularSoftmax, PolicyKind::TiedAlias, PolicyKind::MlpSoftmax}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto m = random_model(kind, rng);
      const State s = random_state(m, rng);
      double total = 0.0;
      for (std::size_t a = 0; a < m.n_actions(); ++a) total += std::exp(m.log_prob(s, Action{a, {}}));
      EXPECT_NEAR(total, 1.0, 1e-10);
    }
  }
}

TEST(Policy, LogStdIsClamped) {
  Rng rng(10);
  auto m = PolicyModel::mlp_gaussian(3, 1, rng);
  std::vector<double> p(m.params().begin(), m.params().end());
  p.back() = 10.0;
  m.set_params(p);
  EXPECT_NEAR(m.gaussian_std()[0], std::exp(PolicyModel::kLogStdMax), 1e-12);
  p.back() = -10.0;
  m.set_params(p);
  EXPECT_NEAR(m.gaussian_std()[0], std::exp(PolicyModel::kLogStdMin), 1e-15);
}

TEST(Policy, TiedProjection) {
  auto m = PolicyModel::tied_alias(0.5);
  m.set_params(std::vector<double>{1.7});
  m.project();
  EXPECT_EQ(m.params()[0], PolicyModel::kTiedMax);
  m.set_params(std::vector<double>{-0.2});
  m.project();
  EXPECT_EQ(m.params()[0], PolicyModel::kTiedMin);
}

TEST(Features, ZeroWeightsGiveZero) {
  Rng rng(11);
  auto m = PolicyModel::mlp_softmax(3, 2, rng);
  m.set_params(std::vector<double>(m.num_params(), 0.0));
  for (int layer : {1, 2}) {
    const auto f = m.features(State{0, {1.0, 2.0, 3.0}}, layer);
    ASSERT_EQ(f.size(), PolicyModel::kHiddenWidth);
    for (double v : f) EXPECT_EQ(v, 0.0);
  }
}

TEST(Features, IdentityFirstLayerCopiesPositiveInput) {
  Rng rng(12);
  auto m = PolicyModel::mlp_softmax(3, 2, rng);
  std::vector<double> p(m.num_params(), 0.0);
  const auto& net = m.network();
  for (std::size_t i = 0; i < 3; ++i) p[net.weight_offset(0) + i * 3 + i] = 1.0;
  m.set_params(p);
  const auto f = m.features(State{0, {0.5, 1.5, 2.5}}, 1);
  EXPECT_EQ(f[0], 0.5);
  EXPECT_EQ(f[1], 1.5);
  EXPECT_EQ(f[2], 2.5);
  for (std::size_t i = 3; i < f.size(); ++i) EXPECT_EQ(f[i], 0.0);
}

TEST(Features, LayerTwoComposesLayerOne) {
  Rng rng(13);
  const auto m = PolicyModel::mlp_gaussian(3, 1, rng);
  const State s{0, {0.3, -0.8, 1.2}};
  const auto h1 = m.features(s, 1);
  const auto h2 = m.features(s, 2);
  const auto& net = m.network();
  const auto p = m.params();
  const std::size_t w = PolicyModel::kHiddenWidth;
  for (std::size_t o = 0; o < w; ++o) {
    double z = p[net.bias_offset(1) + o];
    for (std::size_t i = 0; i < w; ++i) z += p[net.weight_offset(1) + o * w + i] * h1[i];
    EXPECT_NEAR(h2[o], std::max(0.0, z), 1e-14);
  }
  EXPECT_THROW(PolicyModel::tabular_softmax(2, 2).features(State{0, {}}, 1), Error);
}

TEST(Policy, CheckpointRoundTripIsByteIdentical) {
  Rng rng(14);
  for (auto kind : {PolicyKind::TabularSoftmax, PolicyKind::TiedAlias, PolicyKind::MlpSoftmax, PolicyKind::MlpGaussian}) {
    const auto m = random_model(kind, rng);
    const std::string first = m.to_json().dump();
    const auto back = PolicyModel::from_json(nlohmann::json::parse(first));
    EXPECT_EQ(back.to_json().dump(), first);
    ASSERT_EQ(back.num_params(), m.num_params());
    for (std::size_t i = 0; i < m.num_params(); ++i) EXPECT_EQ(back.params()[i], m.params()[i]);
  }
}

TEST(Mlp, InitWithinFanInBounds) {
  Rng rng(15);
  const Mlp net({3, 16, 16, 2});
  const auto p = net.init_params(rng);
  ASSERT_EQ(p.size(), net.num_params());
  for (std::size_t layer = 0; layer < net.num_layers(); ++layer) {
    const double bound = 1.0 / std::sqrt(double(net.sizes()[layer]));
    for (std::size_t i = net.weight_offset(layer); i < net.bias_offset(layer) + net.sizes()[layer + 1]; ++i) {
      EXPECT_LE(std::abs(p[i]), bound);
    }
  }
}

TEST(Mlp, NonFiniteThrows) {
  Rng rng(16);
  auto m = PolicyModel::mlp_softmax(3, 2, rng);
  std::vector<double> p(m.params().begin(), m.params().end());
  p[0] = std::numeric_limits<double>::infinity();
  m.set_params(p);
  EXPECT_THROW(m.grad_log_prob(State{0, {1.0, 1.0, 1.0}}, Action{0, {}}), Error);
}
