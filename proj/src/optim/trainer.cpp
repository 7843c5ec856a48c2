#include "pgbias/optim/trainer.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "pgbias/errors.hpp"

namespace pgbias {

double InnerLoop::step_lr(double lr_epoch, std::size_t dataset_size) const {
  return lr_epoch * lr_scale / static_cast<double>(resolved_steps(dataset_size));
}

void InnerLoop::validate() const {
  require(batch_size >= 1, ErrorKind::InvalidArgument, "inner-loop batch size must be at least 1");
  require(std::isfinite(lr_scale) && lr_scale > 0.0, ErrorKind::InvalidArgument, "lr_scale must be positive");
}

nlohmann::json InnerLoop::to_json() const {
  return {{"steps", steps}, {"batch_size", batch_size}, {"lr_scale", lr_scale}, {"full_batch", full_batch}};
}

InnerLoop InnerLoop::from_json(const nlohmann::json& doc) {
  InnerLoop loop;
  try {
    loop.steps = doc.value("steps", loop.steps);
    loop.batch_size = doc.value("batch_size", loop.batch_size);
    loop.lr_scale = doc.value("lr_scale", loop.lr_scale);
    loop.full_batch = doc.value("full_batch", loop.full_batch);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed inner_loop: ") + e.what());
  }
  loop.validate();
  return loop;
}

EpochStats train_epoch(PolicyModel& policy, OptimState& optim, const Dataset& data, const SurrogateSpec& spec,
                       const InnerLoop& inner, double lr_epoch, Rng& rng) {
  inner.validate();
  require(!data.samples.empty(), ErrorKind::EmptyInput, "train_epoch: empty dataset");
  const std::size_t n = data.samples.size();
  const std::size_t steps = inner.resolved_steps(n);
  optim.lr = inner.step_lr(lr_epoch, n);

  EpochStats stats;
  std::vector<std::size_t> indices(inner.batch_size);
  std::vector<double> params(policy.params().begin(), policy.params().end());
  for (std::size_t k = 0; k < steps; ++k) {
    std::vector<double> grad;
    if (inner.full_batch) {
      auto est = surrogate_gradient(data, policy, spec);
      stats.clamped_ratios += est.clamped_ratios;
      grad = std::move(est.gradient);
    } else {
      for (auto& i : indices) i = rng.index(n);
      grad = minibatch_gradient(data, indices, policy, spec, &stats.clamped_ratios);
    }
    optimizer_step(optim, params, grad);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!std::isfinite(params[i])) {
        throw Error(ErrorKind::NonFinite, "parameter " + std::to_string(i) + " became non-finite at step " +
                                              std::to_string(k));
      }
    }
    policy.set_params(params);
    policy.project();
    if (policy.kind() == PolicyKind::TiedAlias) params.assign(policy.params().begin(), policy.params().end());
    ++stats.steps;
  }
  return stats;
}

}  // namespace pgbias
