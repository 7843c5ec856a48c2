#include "pgbias/diagnostics/score_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pgbias/errors.hpp"
#include "pgbias/optim/optim.hpp"
#include "pgbias/rng.hpp"

namespace pgbias {
namespace {

double standardized_mse(const ScoreModel& model, const Table& z, std::span<const double> y, Mlp::Cache& cache) {
  double total = 0.0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    model.network.forward(model.params, z.row(r), cache);
    const double e = cache.output()[0] - y[r];
    total += e * e;
  }
  return total / static_cast<double>(z.rows());
}

}  // namespace

double ScoreModel::predict(std::span<const double> input) const {
  require(input.size() == input_mean.size(), ErrorKind::InvalidArgument, "score model input has the wrong width");
  std::vector<double> z(input.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (input[i] - input_mean[i]) / input_std[i];
  Mlp::Cache cache;
  network.forward(params, z, cache);
  return target_mean + target_std * cache.output()[0];
}

nlohmann::json ScoreModel::to_json() const {
  return {{"sizes", network.sizes()},       {"params", params},           {"input_mean", input_mean},
          {"input_std", input_std},         {"target_mean", target_mean}, {"target_std", target_std},
          {"initial_mse", initial_mse},     {"final_mse", final_mse}};
}

ScoreModel ScoreModel::from_json(const nlohmann::json& doc) {
  try {
    ScoreModel m;
    m.network = Mlp(doc.at("sizes").get<std::vector<std::size_t>>());
    m.params = doc.at("params").get<std::vector<double>>();
    m.input_mean = doc.at("input_mean").get<std::vector<double>>();
    m.input_std = doc.at("input_std").get<std::vector<double>>();
    m.target_mean = doc.at("target_mean").get<double>();
    m.target_std = doc.at("target_std").get<double>();
    m.initial_mse = doc.value("initial_mse", 0.0);
    m.final_mse = doc.value("final_mse", 0.0);
    require(m.params.size() == m.network.num_params() && m.input_mean.size() == m.network.input_dim() &&
                m.input_std.size() == m.input_mean.size(),
            ErrorKind::InvalidArgument, "score model document is inconsistent");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed score model: ") + e.what());
  }
}

ScoreModel fit_score_model(const Table& inputs, std::span<const double> targets, const ScoreFitConfig& config) {
  const std::size_t n = inputs.rows();
  const std::size_t dim = inputs.cols();
  require(n > 0, ErrorKind::EmptyInput, "fit_score_model: empty dataset");
  require(targets.size() == n, ErrorKind::InvalidArgument, "fit_score_model: one target per input row expected");
  require(dim > 0 && config.batch_size > 0 && config.lr > 0.0, ErrorKind::InvalidArgument,
          "fit_score_model: bad configuration");

  ScoreModel model;
  model.network = Mlp({dim, PolicyModel::kHiddenWidth, PolicyModel::kHiddenWidth, 1});
  model.input_mean.assign(dim, 0.0);
  model.input_std.assign(dim, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < dim; ++c) model.input_mean[c] += inputs(r, c);
  }
  for (double& m : model.input_mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      const double d = inputs(r, c) - model.input_mean[c];
      model.input_std[c] += d * d;
    }
  }
  for (double& s : model.input_std) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s < 1e-12) s = 1.0;
  }
  model.target_mean = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double t : targets) var += (t - model.target_mean) * (t - model.target_mean);
  model.target_std = std::sqrt(var / static_cast<double>(n));
  if (model.target_std < 1e-12) model.target_std = 1.0;

  Table z(n, dim);
  std::vector<double> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    require(std::isfinite(targets[r]), ErrorKind::NonFinite, "fit_score_model: non-finite target");
    for (std::size_t c = 0; c < dim; ++c) z(r, c) = (inputs(r, c) - model.input_mean[c]) / model.input_std[c];
    y[r] = (targets[r] - model.target_mean) / model.target_std;
  }

  Rng rng(config.seed, 31);
  model.params = model.network.init_params(rng);
  Mlp::Cache cache;
  model.initial_mse = standardized_mse(model, z, y, cache);
  OptimizerConfig adam;
  adam.algorithm = Algorithm::Adam;
  auto optim = OptimState::fresh(adam, model.params.size(), config.lr);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(model.params.size());
  double loss = model.initial_mse;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t r = order[k];
        model.network.forward(model.params, z.row(r), cache);
        // Ascent on -MSE: d/dout of -(out - y)^2 is -2 (out - y).
        const double d_out = -2.0 * (cache.output()[0] - y[r]);
        model.network.backward(model.params, cache, std::span<const double>(&d_out, 1), scale, grad);
      }
      optimizer_step(optim, model.params, grad);
    }
    loss = standardized_mse(model, z, y, cache);
    if (!std::isfinite(loss) || loss > 10.0 * std::max(model.initial_mse, 1e-12)) {
      throw Error(ErrorKind::Divergence, "score model training diverged at epoch " + std::to_string(epoch) +
                                             " (loss " + std::to_string(loss) + "); try a smaller learning rate");
    }
  }
  model.final_mse = loss * model.target_std * model.target_std;
  return model;
}

std::vector<double> score_input(const PolicyModel& policy, const State& state, const Action& action) {
  std::vector<double> out;
  if (policy.is_mlp()) {
    out = state.x;
  } else {
    out.assign(policy.n_states(), 0.0);
    require(state.id < out.size(), ErrorKind::InvalidArgument, "state id out of range");
    out[state.id] = 1.0;
  }
  if (policy.is_discrete()) {
    const std::size_t base = out.size();
    out.resize(base + policy.n_actions(), 0.0);
    require(action.id < policy.n_actions(), ErrorKind::InvalidArgument, "action id out of range");
    out[base + action.id] = 1.0;
  } else {
    out.insert(out.end(), action.u.begin(), action.u.end());
  }
  return out;
}

ScoreDataset score_dataset(const PolicyModel& policy, const Dataset& data) {
  require(!data.samples.empty(), ErrorKind::EmptyInput, "score_dataset: empty dataset");
  const std::size_t width = score_input(policy, data.samples[0].state, data.samples[0].action).size();
  ScoreDataset out{Table(data.samples.size(), width), {}, {}};
  out.targets.reserve(data.samples.size());
  out.states.reserve(data.samples.size());
  for (std::size_t r = 0; r < data.samples.size(); ++r) {
    const auto& s = data.samples[r];
    const auto row = score_input(policy, s.state, s.action);
    std::copy(row.begin(), row.end(), out.inputs.row(r).begin());
    out.targets.push_back(s.q_hat);
    out.states.push_back(s.state);
  }
  return out;
}

}  // namespace pgbias
