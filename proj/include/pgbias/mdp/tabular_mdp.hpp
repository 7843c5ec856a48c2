#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgbias/rng.hpp"

namespace pgbias {

/// Dense row-major matrix of doubles, used for policy tables [state][action],
/// reward tables and q-tables.
class Table {
 public:
  Table() = default;
  Table(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  const std::vector<double>& data() const { return data_; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  friend bool operator==(const Table&, const Table&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class StateWeighting { Discounted, Undiscounted };

/// Episodic MDP with explicit tensors. The terminal state is absorbing with
/// zero reward. Construction validates every invariant, including a
/// bounded-horizon episodicity test under the uniform policy.
class TabularMdp {
 public:
  /// `transition` is indexed [state][action][next_state], flattened row-major.
  TabularMdp(std::size_t n_states, std::size_t n_actions, std::size_t terminal,
             std::vector<double> transition, Table reward, double gamma,
             std::vector<double> initial_dist);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t terminal() const { return terminal_; }
  double gamma() const { return gamma_; }
  double transition(std::size_t s, std::size_t a, std::size_t next) const {
    return transition_[(s * n_actions_ + a) * n_states_ + next];
  }
  const double* transition_row(std::size_t s, std::size_t a) const {
    return transition_.data() + (s * n_actions_ + a) * n_states_;
  }
  double reward(std::size_t s, std::size_t a) const { return reward_(s, a); }
  const Table& reward_table() const { return reward_; }
  const std::vector<double>& initial_dist() const { return initial_; }

  TabularMdp with_gamma(double gamma) const;

  nlohmann::json to_json() const;
  static TabularMdp from_json(const nlohmann::json& doc);

 private:
  void validate() const;

  std::size_t n_states_;
  std::size_t n_actions_;
  std::size_t terminal_;
  std::vector<double> transition_;
  Table reward_;
  double gamma_;
  std::vector<double> initial_;
};

/// Unnormalized (possibly discounted) expected visit counts. Indexed by state
/// over the full state space; the terminal entry is always zero.
struct OccupancyWeights {
  std::vector<double> weights;
  StateWeighting mode = StateWeighting::Discounted;

  /// Same weights rescaled to sum to one.
  std::vector<double> normalized() const;
};

enum class OccupancyMethod { LinearSolve, Iteration };

/// Uniform policy table for `mdp`.
Table uniform_policy(const TabularMdp& mdp);

OccupancyWeights occupancy(const TabularMdp& mdp, const Table& policy, StateWeighting mode,
                           OccupancyMethod method = OccupancyMethod::LinearSolve,
                           std::size_t max_iterations = 1'000'000);

/// Action values q_pi(s, a); the terminal row is zero.
Table exact_q(const TabularMdp& mdp, const Table& policy);

/// State values v_pi(s) = sum_a pi(a|s) q(s, a).
std::vector<double> exact_v(const TabularMdp& mdp, const Table& policy);

/// Expected discounted return from the initial distribution.
double exact_return(const TabularMdp& mdp, const Table& policy);

// --- Two-state alias example -------------------------------------------------

/// Two non-terminal states sharing action semantics. Action `kGo` in s1 moves
/// to s2; in s2 it ends the episode with nothing, while the alternative action
/// earns reward 1. The discounted return is p (1 - q) gamma where
/// p = pi(go | s1) and q = pi(go | s2).
struct AliasMdp {
  static constexpr std::size_t kS1 = 0;
  static constexpr std::size_t kS2 = 1;
  static constexpr std::size_t kTerminal = 2;
  static constexpr std::size_t kGo = 0;
  static constexpr std::size_t kOther = 1;

  explicit AliasMdp(double gamma, double epsilon = 0.0);

  double gamma;
  /// Alias tolerance: admissible policies satisfy |p - q| <= epsilon.
  double epsilon;
  TabularMdp mdp;

  Table policy(double p, double q) const;
  bool admissible(double p, double q) const;
  static double closed_form_return(double p, double q, double gamma) { return p * (1.0 - q) * gamma; }
};

struct AliasFixedPoints {
  double unbiased;
  double biased;
  double decay_ratio;
};

/// Stationary points of the tied alias policy under discounted and
/// undiscounted state weighting, and the resulting return ratio.
AliasFixedPoints alias_fixed_points(double gamma);

// --- Other environments ------------------------------------------------------

/// Corridor of `length` states. Action 0 ("advance") moves right with
/// probability `1 - slip`; from the last state it always exits with reward 1.
/// Action 1 ("quit") ends the episode with reward `quit_reward`.
TabularMdp chain_mdp(std::size_t length, double gamma, double slip = 0.1, double quit_reward = 0.2);

/// Random episodic MDP: Dirichlet(1) rows over the non-terminal states with
/// 5% of each row's mass sent to the terminal, rewards uniform in [-1, 1].
TabularMdp random_episodic_mdp(std::size_t n_nonterminal, std::size_t n_actions, double gamma, Rng& rng);

}  // namespace pgbias
