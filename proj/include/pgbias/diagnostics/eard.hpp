#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgbias/estimator/estimator.hpp"
#include "pgbias/mdp/tabular_mdp.hpp"
#include "pgbias/policy/policy_model.hpp"
#include "pgbias/rng.hpp"

namespace pgbias {

struct ProbePair {
  State state;
  Action action;
};

struct EardResult {
  double value = 0.0;
  std::size_t n_samples = 0;
  std::size_t clamped_ratios = 0;
  double std_error = 0.0;

  nlohmann::json to_json() const;
};

/// Expected absolute ratio deviation mean |pi1(a|s) / pi2(a|s) - 1| over
/// probe pairs drawn under the behavior policy. The log-ratio is clamped to
/// +-20 and clamped occurrences are counted.
EardResult eard(std::span<const ProbePair> probe, const PolicyModel& pi1, const PolicyModel& pi2);

/// Closed form for tabular policies: states weighted by the normalized
/// undiscounted occupancy of pi_t, actions by pi_t.
double eard_exact_tabular(const TabularMdp& mdp, const PolicyModel& pi_t, const PolicyModel& pi1,
                          const PolicyModel& pi2);

/// The whole dataset when it has at most `max_size` samples, otherwise a
/// uniform subsample without replacement (kept in dataset order).
std::vector<ProbePair> probe_from_dataset(const Dataset& data, std::size_t max_size, Rng& rng);

}  // namespace pgbias
