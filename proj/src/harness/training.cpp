#include "pgbias/harness/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "pgbias/diagnostics/eard.hpp"
#include "pgbias/errors.hpp"
#include "pgbias/mdp/sampling.hpp"
#include "pgbias/optim/trainer.hpp"

namespace pgbias {

Environment::Environment(const ExperimentConfig& config)
    : kind_(config.env),
      truncation_(config.truncation),
      init_theta_(config.init_theta),
      init_log_std_(config.init_log_std) {
  switch (config.env) {
    case EnvKind::Alias: mdp_ = AliasMdp(config.gamma).mdp; break;
    case EnvKind::Chain: mdp_ = chain_mdp(config.chain_length, config.gamma); break;
    case EnvKind::Pendulum: {
      PendulumEnv::Params params;
      params.init_angle = config.pendulum_init_angle;
      pendulum_ = PendulumEnv(params);
      break;
    }
  }
}

PolicyModel Environment::initial_policy(std::uint64_t seed) const {
  switch (kind_) {
    case EnvKind::Alias: return PolicyModel::tied_alias(init_theta_);
    case EnvKind::Chain: return PolicyModel::tabular_softmax(mdp_->n_states(), mdp_->n_actions());
    case EnvKind::Pendulum: {
      Rng rng(seed, streams::kInit);
      return PolicyModel::mlp_gaussian(PendulumEnv::kObservationDim, PendulumEnv::kActionDim, rng, init_log_std_);
    }
  }
  throw Error(ErrorKind::Unsupported, "unknown environment");
}

Trajectory Environment::sample(const PolicyModel& policy, Rng& rng) const {
  if (mdp_) return sample_episode(*mdp_, policy, rng, truncation_);
  return sample_episode(pendulum_, policy, rng, truncation_);
}

std::vector<VariantSpec> performance_variants(const ExperimentConfig& config) {
  SurrogateSpec biased = config.spec;
  biased.state_weighting = StateWeighting::Undiscounted;
  SurrogateSpec unbiased = config.spec;
  unbiased.state_weighting = StateWeighting::Discounted;
  const auto& c = config.correction;
  std::vector<VariantSpec> out;
  if (config.bias != BiasFilter::UnbiasedOnly) {
    out.push_back({"biased-baseline", biased, config.optimizer, 1.0});
    out.push_back({"biased-experimental", c.apply(biased), c.optimizer, c.lr_multiplier});
  }
  if (config.bias != BiasFilter::BiasedOnly) {
    out.push_back({"unbiased-baseline", unbiased, config.optimizer, 1.0});
    out.push_back({"unbiased-experimental", c.apply(unbiased), c.optimizer, c.lr_multiplier});
  }
  return out;
}

Dataset perturb_dataset(const Dataset& data, const PerturbationSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t n = data.samples.size();
  std::vector<double> cumulative(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += spec.matches(data.samples[i].state) ? spec.weight : 1.0;
    cumulative[i] = total;
  }
  std::vector<std::size_t> picks(n);
  for (auto& p : picks) {
    const double u = rng.uniform() * total;
    p = std::min<std::size_t>(n - 1, std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
  }
  std::sort(picks.begin(), picks.end());
  Dataset out;
  out.n_trajectories = data.n_trajectories;
  out.gamma = data.gamma;
  out.samples.reserve(n);
  for (auto p : picks) out.samples.push_back(data.samples[p]);
  return out;
}

void scale_rewards(std::vector<Trajectory>& batch, double scale) {
  if (scale == 1.0) return;
  for (auto& t : batch) {
    for (auto& s : t.steps) s.reward *= scale;
  }
}

VariantRun train_variant(const ExperimentConfig& config, const VariantSpec& variant, std::uint64_t seed) {
  config.validate();
  const Environment env(config);
  VariantRun run;
  run.variant = variant.name;
  run.seed = seed;
  PolicyModel policy = env.initial_policy(seed);
  OptimState optim = OptimState::fresh(variant.optimizer, policy.num_params(), config.schedule.base_lr);

  Rng sampler(seed, streams::kSampling);
  Rng minibatch(seed, streams::kMinibatch);
  Rng perturb(seed, streams::kPerturb);
  Rng probe_rng(seed, streams::kProbe);

  std::vector<double> state_scale;
  if (env.is_tabular() && config.perturbation) {
    state_scale.assign(env.mdp().n_states(), 1.0);
    for (std::size_t s = 0; s < state_scale.size(); ++s) {
      if (config.perturbation->matches(State{s, {}})) state_scale[s] = config.perturbation->weight;
    }
  }

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.epoch = epoch;
    rec.lr_used = config.schedule.lr_at(epoch) * variant.lr_multiplier;
    try {
      if (env.is_tabular()) {
        rec.exact_return = exact_return(env.mdp(), policy.table(env.mdp().n_states()));
        if (policy.kind() == PolicyKind::TiedAlias) rec.theta = policy.params()[0];
      }
      const PolicyModel before = policy;
      if (config.gradient_mode == GradientMode::Exact) {
        // The regularizers have zero gradient at pi_t, so one exact step
        // only sees the state-weighted policy gradient.
        rec.mean_return = rec.exact_return;
        const auto grad = exact_pg(env.mdp(), policy, variant.spec.state_weighting, state_scale);
        std::vector<double> params(policy.params().begin(), policy.params().end());
        optim.lr = rec.lr_used;
        optimizer_step(optim, params, grad);
        policy.set_params(params);
        policy.project();
        rec.update_eard = eard_exact_tabular(env.mdp(), before, policy, before);
      } else {
        std::vector<Trajectory> batch;
        batch.reserve(config.episodes_per_epoch);
        double total = 0.0;
        for (std::size_t i = 0; i < config.episodes_per_epoch; ++i) {
          batch.push_back(env.sample(policy, sampler));
          total += batch.back().total_reward();
        }
        rec.mean_return = total / static_cast<double>(batch.size());
        scale_rewards(batch, config.reward_scale);
        Dataset data = make_dataset(batch, config.gamma);
        if (config.perturbation) data = perturb_dataset(data, *config.perturbation, perturb);
        const auto stats = train_epoch(policy, optim, data, variant.spec, config.inner_loop, rec.lr_used, minibatch);
        rec.clamped_ratios = stats.clamped_ratios;
        const auto probe = probe_from_dataset(data, config.probe_size, probe_rng);
        rec.update_eard = eard(probe, policy, before).value;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonFinite && e.kind() != ErrorKind::Divergence) throw;
      run.failed = true;
      run.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    run.records.push_back(rec);
    if (run.failed) break;
  }
  run.final_policy = policy;
  run.final_optim = optim;
  return run;
}

}  // namespace pgbias
