#include "pgbias/diagnostics/eard.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pgbias/errors.hpp"

namespace pgbias {

nlohmann::json EardResult::to_json() const {
  return {{"value", value}, {"n_samples", n_samples}, {"clamped_ratios", clamped_ratios}, {"std_error", std_error}};
}

EardResult eard(std::span<const ProbePair> probe, const PolicyModel& pi1, const PolicyModel& pi2) {
  require(!probe.empty(), ErrorKind::EmptyInput, "eard: empty probe");
  EardResult out;
  out.n_samples = probe.size();
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& p : probe) {
    double log_ratio = pi1.log_prob(p.state, p.action) - pi2.log_prob(p.state, p.action);
    require(!std::isnan(log_ratio), ErrorKind::NonFinite, "eard: undefined log-ratio");
    if (std::abs(log_ratio) > kLogRatioClamp) {
      ++out.clamped_ratios;
      log_ratio = std::clamp(log_ratio, -kLogRatioClamp, kLogRatioClamp);
    }
    const double dev = std::abs(std::expm1(log_ratio));
    sum += dev;
    sum_sq += dev * dev;
  }
  const auto n = static_cast<double>(probe.size());
  out.value = sum / n;
  if (probe.size() > 1) {
    const double var = std::max(0.0, (sum_sq / n - out.value * out.value) * n / (n - 1.0));
    out.std_error = std::sqrt(var / n);
  }
  return out;
}

double eard_exact_tabular(const TabularMdp& mdp, const PolicyModel& pi_t, const PolicyModel& pi1,
                          const PolicyModel& pi2) {
  require(pi_t.is_tabular() && pi1.is_tabular() && pi2.is_tabular(), ErrorKind::Unsupported,
          "eard_exact_tabular needs tabular policies");
  const Table behavior = pi_t.table(mdp.n_states());
  const Table p1 = pi1.table(mdp.n_states());
  const Table p2 = pi2.table(mdp.n_states());
  const auto d = occupancy(mdp, behavior, StateWeighting::Undiscounted).normalized();
  double total = 0.0;
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    if (s == mdp.terminal() || d[s] == 0.0) continue;
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      if (behavior(s, a) == 0.0) continue;
      require(p2(s, a) > 0.0, ErrorKind::Domain, "eard: pi2 assigns zero probability where pi_t does not");
      total += d[s] * behavior(s, a) * std::abs(p1(s, a) / p2(s, a) - 1.0);
    }
  }
  return total;
}

std::vector<ProbePair> probe_from_dataset(const Dataset& data, std::size_t max_size, Rng& rng) {
  require(!data.samples.empty(), ErrorKind::EmptyInput, "probe_from_dataset: empty dataset");
  require(max_size > 0, ErrorKind::InvalidArgument, "probe size must be positive");
  std::vector<std::size_t> chosen(data.samples.size());
  std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  if (chosen.size() > max_size) {
    // Partial Fisher-Yates, then restore dataset order.
    for (std::size_t i = 0; i < max_size; ++i) std::swap(chosen[i], chosen[i + rng.index(chosen.size() - i)]);
    chosen.resize(max_size);
    std::sort(chosen.begin(), chosen.end());
  }
  std::vector<ProbePair> probe;
  probe.reserve(chosen.size());
  for (auto i : chosen) probe.push_back(ProbePair{data.samples[i].state, data.samples[i].action});
  return probe;
}

}  // namespace pgbias
