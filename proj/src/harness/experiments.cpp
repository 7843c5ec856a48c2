#include "pgbias/harness/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <thread>

#include "pgbias/errors.hpp"

namespace pgbias {

void run_jobs(std::vector<std::function<void()>>& jobs, std::size_t workers) {
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        jobs[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(workers, jobs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

PerformanceResult run_performance(const ExperimentConfig& config) {
  config.validate();
  const auto variants = performance_variants(config);
  PerformanceResult out;
  out.runs.resize(variants.size() * config.seeds.size());
  std::vector<std::function<void()>> jobs;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (std::size_t s = 0; s < config.seeds.size(); ++s) {
      jobs.emplace_back([&, v, s] {
        out.runs[v * config.seeds.size() + s] = train_variant(config, variants[v], config.seeds[s]);
      });
    }
  }
  run_jobs(jobs, config.workers);
  return out;
}

PerformanceResult run_offpolicy(const ExperimentConfig& config) {
  require(config.perturbation.has_value(), ErrorKind::InvalidArgument,
          "run-offpolicy needs a perturbation in the config");
  return run_performance(config);
}

std::vector<BiasSpreadRecord> sliding_window(const std::vector<BiasSpreadRecord>& raw, std::size_t window) {
  require(window >= 1, ErrorKind::InvalidArgument, "window must be positive");
  std::vector<BiasSpreadRecord> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::size_t lo = i + 1 >= window ? i + 1 - window : 0;
    BiasSpreadRecord r;
    r.epoch = raw[i].epoch;
    for (std::size_t j = lo; j <= i; ++j) {
      r.d1 += raw[j].d1;
      r.d2 += raw[j].d2;
      r.d_pct += raw[j].d_pct;
    }
    const auto n = static_cast<double>(i - lo + 1);
    r.d1 /= n;
    r.d2 /= n;
    r.d_pct /= n;
    out.push_back(r);
  }
  return out;
}

BiasSpreadRun bias_spread_seed(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  const Environment env(config);
  BiasSpreadRun out;
  out.seed = seed;
  out.baseline.variant = "baseline";
  out.baseline.seed = seed;

  PolicyModel policy = env.initial_policy(seed);
  OptimState plain = OptimState::fresh(config.optimizer, policy.num_params(), config.schedule.base_lr);
  OptimState corrected =
      OptimState::fresh(config.correction.optimizer, policy.num_params(), config.schedule.base_lr);
  BiasSpreadConfig bs;
  bs.inner = config.inner_loop;
  bs.correction = config.correction;
  bs.probe_size = config.probe_size;
  bs.self_test = config.self_test;

  Rng sampler(seed, streams::kSampling);
  Rng perturb(seed, streams::kPerturb);
  Rng fork_seeds(seed, streams::kForks);
  const auto c = static_cast<std::size_t>(config.continue_with);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.epoch = epoch;
    rec.lr_used = config.schedule.lr_at(epoch);
    try {
      if (env.is_tabular()) {
        rec.exact_return = exact_return(env.mdp(), policy.table(env.mdp().n_states()));
        if (policy.kind() == PolicyKind::TiedAlias) rec.theta = policy.params()[0];
      }
      std::vector<Trajectory> batch;
      double total = 0.0;
      for (std::size_t i = 0; i < config.episodes_per_epoch; ++i) {
        batch.push_back(env.sample(policy, sampler));
        total += batch.back().total_reward();
      }
      rec.mean_return = total / static_cast<double>(batch.size());
      scale_rewards(batch, config.reward_scale);
      Dataset data = make_dataset(batch, config.gamma);
      if (config.perturbation) data = perturb_dataset(data, *config.perturbation, perturb);

      bs.lr_epoch = rec.lr_used;
      auto res = bias_spread_step(policy, data, bs, plain, corrected, fork_seeds.next_u64(), epoch);
      out.raw.push_back(res.record);
      rec.update_eard = res.record.d2;
      rec.clamped_ratios = res.eard_plain.clamped_ratios + res.eard_corrected.clamped_ratios;
      policy = res.forks[c];
      plain = c < 2 ? res.optim[c] : res.optim[static_cast<std::size_t>(Fork::Unbiased)];
      corrected = c >= 2 ? res.optim[c] : res.optim[static_cast<std::size_t>(Fork::UnbiasedCorrected)];
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonFinite && e.kind() != ErrorKind::Divergence) throw;
      out.baseline.failed = true;
      out.baseline.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.baseline.records.push_back(rec);
    if (out.baseline.failed) break;
  }
  out.baseline.final_policy = policy;
  out.baseline.final_optim = plain;
  out.smoothed = sliding_window(out.raw, 5);
  return out;
}

std::vector<BiasSpreadRun> run_bias_spread(const ExperimentConfig& config) {
  config.validate();
  std::vector<BiasSpreadRun> out(config.seeds.size());
  std::vector<std::function<void()>> jobs;
  for (std::size_t s = 0; s < config.seeds.size(); ++s) {
    jobs.emplace_back([&, s] { out[s] = bias_spread_seed(config, config.seeds[s]); });
  }
  run_jobs(jobs, config.workers);
  return out;
}

std::vector<AliasToyRow> run_alias_toy(const std::vector<double>& gammas, const AliasToyConfig& config) {
  require(!gammas.empty(), ErrorKind::InvalidArgument, "alias-toy needs at least one gamma");
  for (double g : gammas) require(g > 0.0 && g < 1.0, ErrorKind::Domain, "alias-toy gammas must lie in (0, 1)");
  require(!config.seeds.empty(), ErrorKind::InvalidArgument, "alias-toy needs at least one seed");

  const std::vector<std::uint64_t> seeds =
      config.mode == GradientMode::Exact ? std::vector<std::uint64_t>{config.seeds.front()} : config.seeds;
  // final theta per (gamma, weighting, seed)
  std::vector<double> theta(gammas.size() * 2 * seeds.size(), 0.0);
  std::vector<std::function<void()>> jobs;
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    for (std::size_t w = 0; w < 2; ++w) {
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        jobs.emplace_back([&, g, w, s] {
          ExperimentConfig c = ExperimentConfig::defaults(EnvKind::Alias);
          c.gamma = gammas[g];
          c.epochs = config.epochs;
          c.schedule = config.schedule;
          c.gradient_mode = config.mode;
          c.episodes_per_epoch = config.episodes_per_epoch;
          c.init_theta = config.init_theta;
          VariantSpec v;
          v.name = w == 0 ? "unbiased" : "biased";
          v.spec.state_weighting = w == 0 ? StateWeighting::Discounted : StateWeighting::Undiscounted;
          const auto run = train_variant(c, v, seeds[s]);
          require(!run.failed, ErrorKind::Divergence, "alias-toy run failed: " + run.error);
          theta[(g * 2 + w) * seeds.size() + s] = run.final_policy->params()[0];
        });
      }
    }
  }
  run_jobs(jobs, config.workers);

  std::vector<AliasToyRow> rows;
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    AliasToyRow row;
    row.gamma = gammas[g];
    row.mode = config.mode;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      row.measured_unbiased += theta[(g * 2 + 0) * seeds.size() + s];
      row.measured_biased += theta[(g * 2 + 1) * seeds.size() + s];
    }
    row.measured_unbiased /= static_cast<double>(seeds.size());
    row.measured_biased /= static_cast<double>(seeds.size());
    const auto fp = alias_fixed_points(row.gamma);
    row.predicted_unbiased = fp.unbiased;
    row.predicted_biased = fp.biased;
    row.predicted_ratio = fp.decay_ratio;
    const AliasMdp alias(row.gamma);
    const double ret_u = exact_return(alias.mdp, alias.policy(row.measured_unbiased, row.measured_unbiased));
    const double ret_b = exact_return(alias.mdp, alias.policy(row.measured_biased, row.measured_biased));
    row.measured_ratio = ret_b / ret_u;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pgbias
