#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "pgbias/diagnostics/bias_spread.hpp"
#include "pgbias/diagnostics/eard.hpp"
#include "pgbias/diagnostics/loss_surface.hpp"
#include "pgbias/diagnostics/pca.hpp"
#include "pgbias/diagnostics/score_model.hpp"
#include "pgbias/errors.hpp"
#include "pgbias/mdp/sampling.hpp"

using namespace pgbias;

namespace {

TabularMdp single_state_mdp() {
  std::vector<double> t(2 * 2 * 2, 0.0);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t a = 0; a < 2; ++a) t[(s * 2 + a) * 2 + 1] = 1.0;
  return TabularMdp(2, 2, 1, t, Table(2, 2), 0.9, {1.0, 0.0});
}

PolicyModel with_probs(std::size_t n_states, std::vector<double> row) {
  auto p = PolicyModel::tabular_softmax(n_states, row.size());
  std::vector<double> th;
  for (std::size_t s = 0; s < n_states; ++s)
    for (double v : row) th.push_back(std::log(v));
  p.set_params(th);
  return p;
}

Dataset sample_dataset(const TabularMdp& mdp, const PolicyModel& pi, std::size_t n, Rng& rng) {
  std::vector<Trajectory> batch;
  for (std::size_t i = 0; i < n; ++i) batch.push_back(sample_episode(mdp, pi, rng));
  return make_dataset(batch, mdp.gamma());
}

Table random_features(std::size_t n, std::size_t dim, Rng& rng) {
  Table t(n, dim);
  for (std::size_t r = 0; r < n; ++r) {
    const double a = rng.normal() * 3.0, b = rng.normal();
    for (std::size_t c = 0; c < dim; ++c) t(r, c) = a * std::cos(0.3 * c) + b * std::sin(0.7 * c) + 0.05 * rng.normal();
  }
  return t;
}

}  // namespace

TEST(Eard, HandExampleAndAsymmetry) {
  const auto mdp = single_state_mdp();
  const auto pi_t = with_probs(2, {0.5, 0.5});
  const auto p1 = with_probs(2, {0.6, 0.4});
  const auto p2 = with_probs(2, {0.5, 0.5});
  EXPECT_NEAR(eard_exact_tabular(mdp, pi_t, p1, p2), 0.2, 1e-12);
  EXPECT_NEAR(eard_exact_tabular(mdp, pi_t, p2, p1), 0.5 / 6.0 + 0.5 / 4.0, 1e-12);
  EXPECT_EQ(eard_exact_tabular(mdp, pi_t, p1, p1), 0.0);
  const std::vector<ProbePair> probe{{State{0, {}}, Action{0, {}}}, {State{0, {}}, Action{1, {}}}};
  EXPECT_NEAR(eard(probe, p1, p2).value, 0.2, 1e-12);
  EXPECT_EQ(eard(probe, p1, p1).value, 0.0);
  EXPECT_THROW(eard(std::vector<ProbePair>{}, p1, p2), Error);
}

TEST(Eard, ClampsHugeRatios) {
  auto a = PolicyModel::tabular_softmax(1, 2);
  auto b = a;
  b.set_params(std::vector<double>{-50.0, 50.0});
  const std::vector<ProbePair> probe{{State{0, {}}, Action{0, {}}}};
  const auto r = eard(probe, a, b);
  EXPECT_EQ(r.clamped_ratios, 1u);
  EXPECT_NEAR(r.value, std::expm1(20.0), 1e-3);
}

TEST(Eard, SampledConvergesToExact) {
  const AliasMdp alias(0.8);
  Rng rng(1);
  auto random = [&] {
    auto p = PolicyModel::tabular_softmax(3, 2);
    std::vector<double> th(p.num_params());
    for (auto& v : th) v = 0.5 * rng.normal();
    p.set_params(th);
    return p;
  };
  const auto pi_t = random(), p1 = random(), p2 = random();
  const auto data = sample_dataset(alias.mdp, pi_t, 50000, rng);
  Rng probe_rng(2);
  const auto probe = probe_from_dataset(data, data.samples.size(), probe_rng);
  const auto sampled = eard(probe, p1, p2);
  const double exact = eard_exact_tabular(alias.mdp, pi_t, p1, p2);
  // Samples within an episode are correlated; 3 SE of the per-sample mean is
  // widened by the maximal episode length of 2.
  EXPECT_LT(std::abs(sampled.value - exact), 3.0 * std::sqrt(2.0) * sampled.std_error);
  EXPECT_GE(sampled.value, 0.0);
}

TEST(Eard, ProbeSubsampleKeepsOrder) {
  const AliasMdp alias(0.9);
  Rng rng(3);
  const auto data = sample_dataset(alias.mdp, PolicyModel::tied_alias(0.5), 500, rng);
  const auto all = probe_from_dataset(data, 100000, rng);
  EXPECT_EQ(all.size(), data.samples.size());
  const auto some = probe_from_dataset(data, 50, rng);
  EXPECT_EQ(some.size(), 50u);
}

TEST(PercentageDistance, Properties) {
  EXPECT_EQ(percentage_distance(0.0, 0.0), 0.0);
  EXPECT_EQ(percentage_distance(4e-13, 5e-13), 0.0);
  EXPECT_DOUBLE_EQ(percentage_distance(3.0, 1.0), 0.5);
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform() * std::pow(10.0, rng.uniform(-6.0, 2.0));
    const double b = rng.uniform() * std::pow(10.0, rng.uniform(-6.0, 2.0));
    const double d = percentage_distance(a, b);
    EXPECT_GE(d, -1.0);
    EXPECT_LE(d, 1.0);
    EXPECT_EQ(d, -percentage_distance(b, a));
  }
}

TEST(BiasSpread, SelfTestGivesZero) {
  const AliasMdp alias(0.9);
  Rng rng(5);
  const auto pi = PolicyModel::tabular_softmax(3, 2);
  const auto data = sample_dataset(alias.mdp, pi, 200, rng);
  BiasSpreadConfig cfg;
  cfg.self_test = true;
  const auto plain = OptimState::fresh(OptimizerConfig{}, pi.num_params(), 1e-3);
  const auto corrected = OptimState::fresh(cfg.correction.optimizer, pi.num_params(), 1e-3);
  const auto r = bias_spread_step(pi, data, cfg, plain, corrected, 9);
  EXPECT_EQ(r.record.d1, 0.0);
  EXPECT_EQ(r.record.d2, 0.0);
  EXPECT_EQ(r.record.d_pct, 0.0);
  for (std::size_t f = 1; f < 4; ++f)
    for (std::size_t i = 0; i < pi.num_params(); ++i) EXPECT_EQ(r.forks[f].params()[i], r.forks[0].params()[i]);
}

TEST(BiasSpread, ZeroRewardForksStayClose) {
  Rng rng(6);
  const auto mdp = random_episodic_mdp(3, 3, 0.9, rng);
  const auto pi = PolicyModel::tabular_softmax(mdp.n_states(), 3);
  auto data = sample_dataset(mdp, pi, 100, rng);
  for (auto& s : data.samples) s.q_hat = 0.0;
  BiasSpreadConfig cfg;
  const auto plain = OptimState::fresh(OptimizerConfig{}, pi.num_params(), 1e-3);
  const auto corrected = OptimState::fresh(cfg.correction.optimizer, pi.num_params(), 1e-3);
  const auto r = bias_spread_step(pi, data, cfg, plain, corrected, 1);
  // Plain forks see a zero gradient; corrected forks differ only through
  // the state weighting of the KL term.
  EXPECT_EQ(r.record.d2, 0.0);
  EXPECT_LT(r.record.d1, 0.05);
  for (std::size_t i = 0; i < pi.num_params(); ++i) EXPECT_EQ(r.forks[0].params()[i], pi.params()[i]);
}

TEST(BiasSpread, AliasAtHalfSeparatesPlainForks) {
  const AliasMdp alias(0.9);
  Rng rng(7);
  const auto pi = PolicyModel::tied_alias(0.5);
  const auto data = sample_dataset(alias.mdp, pi, 500, rng);
  BiasSpreadConfig cfg;
  cfg.lr_epoch = 1e-4;
  const auto plain = OptimState::fresh(OptimizerConfig{}, 1, 1e-4);
  const auto corrected = OptimState::fresh(cfg.correction.optimizer, 1, 1e-4);
  const auto r = bias_spread_step(pi, data, cfg, plain, corrected, 3);
  EXPECT_GT(r.record.d2, 0.0);
  EXPECT_LT(r.forks[1].params()[0], r.forks[0].params()[0]);
}

TEST(Pca, MatchesEigenDecomposition) {
  Rng rng(8);
  const auto f = random_features(400, 6, rng);
  const auto pca = pca_2d(f);
  Eigen::MatrixXd x(400, 6);
  for (Eigen::Index r = 0; r < 400; ++r)
    for (Eigen::Index c = 0; c < 6; ++c) x(r, c) = f(r, c);
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / 399.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  for (int k = 0; k < 2; ++k) {
    const Eigen::VectorXd v = es.eigenvectors().col(5 - k);
    EXPECT_NEAR(pca.explained[k], es.eigenvalues()(5 - k), 1e-8 * es.eigenvalues()(5));
    double d = 0.0;
    for (Eigen::Index c = 0; c < 6; ++c) d += v(c) * pca.components(k, c);
    EXPECT_NEAR(std::abs(d), 1.0, 1e-8);
  }
  double cross = 0.0, n0 = 0.0, n1 = 0.0;
  for (std::size_t c = 0; c < 6; ++c) {
    cross += pca.components(0, c) * pca.components(1, c);
    n0 += pca.components(0, c) * pca.components(0, c);
    n1 += pca.components(1, c) * pca.components(1, c);
  }
  EXPECT_NEAR(cross, 0.0, 1e-8);
  EXPECT_NEAR(n0, 1.0, 1e-8);
  EXPECT_NEAR(n1, 1.0, 1e-8);
}

TEST(Pca, SingleAxisAndShiftInvariance) {
  Rng rng(9);
  Table f(200, 4);
  for (std::size_t r = 0; r < 200; ++r) f(r, 2) = rng.normal();
  const auto pca = pca_2d(f);
  EXPECT_NEAR(std::abs(pca.components(0, 2)), 1.0, 1e-12);
  EXPECT_NEAR(pca.explained[1], 0.0, 1e-12);

  const auto g = random_features(100, 5, rng);
  auto shifted = g;
  for (std::size_t r = 0; r < 100; ++r)
    for (std::size_t c = 0; c < 5; ++c) shifted(r, c) += 10.0 + c;
  const auto a = pca_2d(g), b = pca_2d(shifted);
  for (std::size_t r = 0; r < 100; ++r)
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(std::abs(a.projected(r, k)), std::abs(b.projected(r, k)), 1e-8);
}

TEST(Pca, ComponentImagesAndDegenerate) {
  Rng rng(10);
  const auto f = random_features(300, 4, rng);
  const auto pca = pca_2d(f);
  Table rows(2, 4);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t c = 0; c < 4; ++c) rows(k, c) = pca.mean[c] + pca.components(k, c);
  const auto img = pca_project(pca, rows);
  EXPECT_NEAR(img(0, 0), 1.0, 1e-10);
  EXPECT_NEAR(img(0, 1), 0.0, 1e-10);
  EXPECT_NEAR(img(1, 0), 0.0, 1e-10);
  EXPECT_NEAR(img(1, 1), 1.0, 1e-10);
  EXPECT_THROW(pca_2d(Table(5, 3, 2.0)), Error);
}

TEST(Pca, IsotropicExplainedVariancesAgree) {
  Rng rng(11);
  Table f(10000, 2);
  for (std::size_t r = 0; r < 10000; ++r) {
    f(r, 0) = rng.normal();
    f(r, 1) = rng.normal();
  }
  const auto pca = pca_2d(f);
  EXPECT_LT(pca.explained[0] / pca.explained[1], 1.1);
}

TEST(Correlation, Examples) {
  std::vector<double> x, y;
  for (int i = 0; i < 50; ++i) {
    x.push_back(0.1 * i);
    y.push_back(3.0 * x.back() - 2.0);
  }
  EXPECT_NEAR(pearson(x, y), 1.0, 1e-12);
  for (auto& v : y) v = -v;
  EXPECT_NEAR(pearson(x, y), -1.0, 1e-12);
  EXPECT_THROW(pearson(x, std::vector<double>(50, 1.0)), Error);

  Rng rng(12);
  Table proj(10000, 2);
  std::vector<double> actions(10000);
  for (std::size_t r = 0; r < 10000; ++r) {
    proj(r, 0) = rng.normal();
    proj(r, 1) = rng.normal();
    actions[r] = rng.normal();
  }
  const auto [rx, ry] = action_correlation(proj, actions);
  EXPECT_LT(std::abs(rx), 0.05);
  EXPECT_LT(std::abs(ry), 0.05);
}

TEST(ScoreModel, FitsConstantAndLinearTargets) {
  Rng rng(13);
  Table x(512, 3);
  std::vector<double> c(512, 2.5), lin(512);
  for (std::size_t r = 0; r < 512; ++r) {
    for (std::size_t k = 0; k < 3; ++k) x(r, k) = rng.uniform(-1.0, 1.0);
    lin[r] = 0.5 * x(r, 0) - 1.5 * x(r, 1) + x(r, 2);
  }
  ScoreFitConfig cfg;
  cfg.epochs = 300;
  const auto constant = fit_score_model(x, c, cfg);
  for (std::size_t r = 0; r < 20; ++r) EXPECT_NEAR(constant.predict(x.row(r)), 2.5, 1e-2);
  const auto linear = fit_score_model(x, lin, cfg);
  EXPECT_LT(linear.final_mse, 1e-3);
  EXPECT_THROW(fit_score_model(Table(0, 3), std::vector<double>{}, cfg), Error);
  const auto back = ScoreModel::from_json(linear.to_json());
  EXPECT_EQ(back.predict(x.row(3)), linear.predict(x.row(3)));
}

class LossSurfaceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(14);
    policy_ = PolicyModel::tabular_softmax(3, 2);
    std::vector<double> th(6);
    for (auto& v : th) v = rng.normal();
    policy_.set_params(th);
    const AliasMdp alias(0.9);
    const auto data = sample_dataset(alias.mdp, policy_, 300, rng);
    const auto sd = score_dataset(policy_, data);
    ScoreFitConfig cfg;
    cfg.epochs = 20;
    model_ = fit_score_model(sd.inputs, sd.targets, cfg);
    states_ = sd.states;
  }
  PolicyModel policy_ = PolicyModel::tabular_softmax(1, 1);
  ScoreModel model_;
  std::vector<State> states_;
};

TEST_F(LossSurfaceTest, CenterEqualsLossAndDeterministic) {
  LossSurfaceConfig cfg;
  cfg.resolution = 5;
  cfg.seed = 3;
  const auto a = loss_surface(policy_, model_, states_, cfg);
  EXPECT_EQ(a.grid(2, 2), surrogate_loss(policy_, model_, states_, cfg));
  EXPECT_EQ(a.center_loss, a.grid(2, 2));
  const auto b = loss_surface(policy_, model_, states_, cfg);
  EXPECT_EQ(a.grid, b.grid);
  EXPECT_DOUBLE_EQ(a.axis.front(), -1.0);
  EXPECT_DOUBLE_EQ(a.axis.back(), 1.0);
}

TEST_F(LossSurfaceTest, ZeroDirectionsGiveConstantGrid) {
  LossSurfaceConfig cfg;
  cfg.resolution = 3;
  const std::vector<double> zero(policy_.num_params(), 0.0);
  const auto s = loss_surface_along(policy_, model_, states_, zero, zero, cfg);
  for (double v : s.grid.data()) EXPECT_EQ(v, s.center_loss);
}

TEST_F(LossSurfaceTest, RegularizedWithZeroAlphaMatches) {
  LossSurfaceConfig plain;
  plain.resolution = 3;
  LossSurfaceConfig reg = plain;
  reg.regularized = true;
  reg.alpha = 0.0;
  EXPECT_EQ(loss_surface(policy_, model_, states_, plain).grid, loss_surface(policy_, model_, states_, reg).grid);
}

TEST_F(LossSurfaceTest, EvenResolutionRejected) {
  LossSurfaceConfig cfg;
  cfg.resolution = 4;
  EXPECT_THROW(loss_surface(policy_, model_, states_, cfg), Error);
}

TEST(FilterNormalization, GroupNormsMatchParameters) {
  Rng rng(15);
  const auto pi = PolicyModel::mlp_gaussian(3, 1, rng);
  const auto d = filter_normalized_direction(pi, rng);
  std::size_t covered = 0;
  for (const auto& g : filter_groups(pi)) {
    double dn = 0.0, tn = 0.0;
    for (auto i : g) {
      dn += d[i] * d[i];
      tn += pi.params()[i] * pi.params()[i];
    }
    EXPECT_NEAR(std::sqrt(dn), std::sqrt(tn), 1e-12);
    covered += g.size();
  }
  EXPECT_EQ(covered, pi.num_params());
}
