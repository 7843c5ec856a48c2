#include "pgbias/mdp/tabular_mdp.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "pgbias/errors.hpp"

namespace pgbias {
namespace {

constexpr double kRowTolerance = 1e-12;
constexpr std::size_t kEpisodicHorizon = 10'000;
constexpr double kEpisodicMass = 1e-9;

std::string where(std::size_t s, std::size_t a) {
  std::ostringstream os;
  os << "(state " << s << ", action " << a << ")";
  return os.str();
}

void check_policy(const TabularMdp& mdp, const Table& policy) {
  require(policy.rows() == mdp.n_states() && policy.cols() == mdp.n_actions(),
          ErrorKind::InvalidArgument, "policy table shape does not match the MDP");
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    double sum = 0.0;
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      const double p = policy(s, a);
      require(std::isfinite(p) && p >= 0.0, ErrorKind::InvalidArgument,
              "policy probability is negative or non-finite at " + where(s, a));
      sum += p;
    }
    require(std::abs(sum - 1.0) < 1e-9, ErrorKind::InvalidArgument,
            "policy row " + std::to_string(s) + " does not sum to one");
  }
}

// Non-terminal states in index order.
std::vector<std::size_t> live_states(const TabularMdp& mdp) {
  std::vector<std::size_t> out;
  out.reserve(mdp.n_states() - 1);
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    if (s != mdp.terminal()) out.push_back(s);
  }
  return out;
}

// P_pi restricted to non-terminal rows/columns.
Eigen::MatrixXd policy_transition(const TabularMdp& mdp, const Table& policy,
                                  const std::vector<std::size_t>& live) {
  const auto n = static_cast<Eigen::Index>(live.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      const double pa = policy(live[i], a);
      if (pa == 0.0) continue;
      for (Eigen::Index j = 0; j < n; ++j) p(i, j) += pa * mdp.transition(live[i], a, live[j]);
    }
  }
  return p;
}

}  // namespace

TabularMdp::TabularMdp(std::size_t n_states, std::size_t n_actions, std::size_t terminal,
                       std::vector<double> transition, Table reward, double gamma,
                       std::vector<double> initial_dist)
    : n_states_(n_states),
      n_actions_(n_actions),
      terminal_(terminal),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      gamma_(gamma),
      initial_(std::move(initial_dist)) {
  validate();
}

void TabularMdp::validate() const {
  require(n_states_ >= 2 && n_actions_ >= 1, ErrorKind::InvalidArgument,
          "an MDP needs at least one live state, a terminal state and one action");
  require(terminal_ < n_states_, ErrorKind::InvalidArgument, "terminal index out of range");
  require(transition_.size() == n_states_ * n_actions_ * n_states_, ErrorKind::InvalidArgument,
          "transition tensor has the wrong size");
  require(reward_.rows() == n_states_ && reward_.cols() == n_actions_, ErrorKind::InvalidArgument,
          "reward table has the wrong shape");
  require(initial_.size() == n_states_, ErrorKind::InvalidArgument, "initial distribution has the wrong size");
  require(std::isfinite(gamma_) && gamma_ >= 0.0 && gamma_ < 1.0, ErrorKind::Domain, "gamma must lie in [0, 1)");

  for (std::size_t s = 0; s < n_states_; ++s) {
    for (std::size_t a = 0; a < n_actions_; ++a) {
      double sum = 0.0;
      for (std::size_t n = 0; n < n_states_; ++n) {
        const double p = transition(s, a, n);
        require(std::isfinite(p) && p >= 0.0, ErrorKind::InvalidArgument,
                "negative or non-finite transition probability at " + where(s, a));
        sum += p;
      }
      require(std::abs(sum - 1.0) <= kRowTolerance, ErrorKind::InvalidArgument,
              "transition row does not sum to one at " + where(s, a));
      require(std::isfinite(reward(s, a)), ErrorKind::InvalidArgument, "non-finite reward at " + where(s, a));
    }
  }
  for (std::size_t a = 0; a < n_actions_; ++a) {
    require(transition(terminal_, a, terminal_) == 1.0 && reward(terminal_, a) == 0.0,
            ErrorKind::InvalidArgument, "terminal state must self-loop with zero reward");
  }
  double init_sum = 0.0;
  for (double p : initial_) {
    require(std::isfinite(p) && p >= 0.0, ErrorKind::InvalidArgument, "invalid initial probability");
    init_sum += p;
  }
  require(std::abs(init_sum - 1.0) <= kRowTolerance, ErrorKind::InvalidArgument,
          "initial distribution does not sum to one");
  require(initial_[terminal_] == 0.0, ErrorKind::InvalidArgument, "initial distribution places mass on the terminal");

  // Bounded-horizon mass test under the uniform policy.
  const double u = 1.0 / static_cast<double>(n_actions_);
  std::vector<double> mass = initial_;
  std::vector<double> next(n_states_);
  double live = 1.0;
  for (std::size_t k = 0; k < kEpisodicHorizon && live >= kEpisodicMass; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < n_states_; ++s) {
      if (s == terminal_ || mass[s] == 0.0) continue;
      for (std::size_t a = 0; a < n_actions_; ++a) {
        const double* row = transition_row(s, a);
        for (std::size_t n = 0; n < n_states_; ++n) next[n] += mass[s] * u * row[n];
      }
    }
    next[terminal_] = 0.0;
    mass.swap(next);
    live = std::accumulate(mass.begin(), mass.end(), 0.0);
  }
  require(live < kEpisodicMass, ErrorKind::NonEpisodic,
          "MDP is not episodic: live mass after 10^4 steps under the uniform policy is " + std::to_string(live));
}

TabularMdp TabularMdp::with_gamma(double gamma) const {
  return TabularMdp(n_states_, n_actions_, terminal_, transition_, reward_, gamma, initial_);
}

nlohmann::json TabularMdp::to_json() const {
  nlohmann::json transition = nlohmann::json::array();
  nlohmann::json rewards = nlohmann::json::array();
  for (std::size_t s = 0; s < n_states_; ++s) {
    nlohmann::json per_action = nlohmann::json::array();
    nlohmann::json r = nlohmann::json::array();
    for (std::size_t a = 0; a < n_actions_; ++a) {
      const double* row = transition_row(s, a);
      per_action.push_back(std::vector<double>(row, row + n_states_));
      r.push_back(reward(s, a));
    }
    transition.push_back(std::move(per_action));
    rewards.push_back(std::move(r));
  }
  return {{"n_states", n_states_}, {"n_actions", n_actions_}, {"transition", transition},
          {"reward", rewards},      {"gamma", gamma_},         {"initial_dist", initial_},
          {"terminal_index", terminal_}};
}

TabularMdp TabularMdp::from_json(const nlohmann::json& doc) {
  try {
    const auto n_states = doc.at("n_states").get<std::size_t>();
    const auto n_actions = doc.at("n_actions").get<std::size_t>();
    std::vector<double> transition;
    transition.reserve(n_states * n_actions * n_states);
    Table reward(n_states, n_actions);
    const auto& t = doc.at("transition");
    const auto& r = doc.at("reward");
    require(t.size() == n_states && r.size() == n_states, ErrorKind::InvalidArgument,
            "transition/reward outer dimension must equal n_states");
    for (std::size_t s = 0; s < n_states; ++s) {
      require(t[s].size() == n_actions && r[s].size() == n_actions, ErrorKind::InvalidArgument,
              "transition/reward action dimension must equal n_actions");
      for (std::size_t a = 0; a < n_actions; ++a) {
        const auto row = t[s][a].get<std::vector<double>>();
        require(row.size() == n_states, ErrorKind::InvalidArgument, "transition row length must equal n_states");
        transition.insert(transition.end(), row.begin(), row.end());
        reward(s, a) = r[s][a].get<double>();
      }
    }
    return TabularMdp(n_states, n_actions, doc.at("terminal_index").get<std::size_t>(), std::move(transition),
                      std::move(reward), doc.at("gamma").get<double>(),
                      doc.at("initial_dist").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed MDP document: ") + e.what());
  }
}

std::vector<double> OccupancyWeights::normalized() const {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  require(total > 0.0, ErrorKind::Degenerate, "occupancy has zero total mass");
  std::vector<double> out(weights);
  for (double& w : out) w /= total;
  return out;
}

Table uniform_policy(const TabularMdp& mdp) {
  return Table(mdp.n_states(), mdp.n_actions(), 1.0 / static_cast<double>(mdp.n_actions()));
}

OccupancyWeights occupancy(const TabularMdp& mdp, const Table& policy, StateWeighting mode,
                           OccupancyMethod method, std::size_t max_iterations) {
  check_policy(mdp, policy);
  const double c = mode == StateWeighting::Discounted ? mdp.gamma() : 1.0;
  OccupancyWeights out{std::vector<double>(mdp.n_states(), 0.0), mode};

  if (method == OccupancyMethod::Iteration) {
    // d = sum_k c^k m_k with m_{k+1} = m_k P_pi on the live block.
    std::vector<double> mass = mdp.initial_dist();
    std::vector<double> next(mdp.n_states());
    double scale = 1.0;
    for (std::size_t k = 0;; ++k) {
      double added = 0.0;
      for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        out.weights[s] += scale * mass[s];
        added += scale * mass[s];
      }
      if (added < 1e-12 || scale == 0.0) break;
      require(k + 1 < max_iterations, ErrorKind::NonEpisodic,
              "occupancy iteration did not converge within the iteration cap");
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        if (s == mdp.terminal() || mass[s] == 0.0) continue;
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
          const double w = mass[s] * policy(s, a);
          if (w == 0.0) continue;
          const double* row = mdp.transition_row(s, a);
          for (std::size_t n = 0; n < mdp.n_states(); ++n) next[n] += w * row[n];
        }
      }
      next[mdp.terminal()] = 0.0;
      mass.swap(next);
      scale *= c;
    }
    out.weights[mdp.terminal()] = 0.0;
    return out;
  }

  const auto live = live_states(mdp);
  const auto n = static_cast<Eigen::Index>(live.size());
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - c * policy_transition(mdp, policy, live).transpose();
  Eigen::VectorXd p0(n);
  for (Eigen::Index i = 0; i < n; ++i) p0(i) = mdp.initial_dist()[live[i]];
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  require(lu.isInvertible(), ErrorKind::NonEpisodic,
          "occupancy linear system is singular: the policy does not terminate with probability one");
  const Eigen::VectorXd d = lu.solve(p0);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(std::isfinite(d(i)) && d(i) > -1e-9, ErrorKind::NonEpisodic,
            "occupancy solve produced an invalid weight (near-singular system)");
    out.weights[live[i]] = std::max(0.0, d(i));
  }
  return out;
}

Table exact_q(const TabularMdp& mdp, const Table& policy) {
  check_policy(mdp, policy);
  const auto live = live_states(mdp);
  const auto n = static_cast<Eigen::Index>(live.size());
  Eigen::VectorXd r_pi = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) r_pi(i) += policy(live[i], a) * mdp.reward(live[i], a);
  }
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(n, n) - mdp.gamma() * policy_transition(mdp, policy, live);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  require(lu.isInvertible(), ErrorKind::Singular, "value system is singular (non-episodic input)");
  const Eigen::VectorXd v_live = lu.solve(r_pi);

  std::vector<double> v(mdp.n_states(), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) v[live[i]] = v_live(i);

  Table q(mdp.n_states(), mdp.n_actions());
  for (std::size_t s : live) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      double next = 0.0;
      const double* row = mdp.transition_row(s, a);
      for (std::size_t s2 = 0; s2 < mdp.n_states(); ++s2) next += row[s2] * v[s2];
      q(s, a) = mdp.reward(s, a) + mdp.gamma() * next;
    }
  }
  return q;
}

std::vector<double> exact_v(const TabularMdp& mdp, const Table& policy) {
  const Table q = exact_q(mdp, policy);
  std::vector<double> v(mdp.n_states(), 0.0);
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) v[s] += policy(s, a) * q(s, a);
  }
  return v;
}

double exact_return(const TabularMdp& mdp, const Table& policy) {
  const auto v = exact_v(mdp, policy);
  double rho = 0.0;
  for (std::size_t s = 0; s < mdp.n_states(); ++s) rho += mdp.initial_dist()[s] * v[s];
  return rho;
}

// --- alias example -----------------------------------------------------------

namespace {

TabularMdp build_alias(double gamma) {
  constexpr std::size_t ns = 3;
  constexpr std::size_t na = 2;
  std::vector<double> t(ns * na * ns, 0.0);
  auto at = [&](std::size_t s, std::size_t a, std::size_t n) -> double& { return t[(s * na + a) * ns + n]; };
  at(AliasMdp::kS1, AliasMdp::kGo, AliasMdp::kS2) = 1.0;
  at(AliasMdp::kS1, AliasMdp::kOther, AliasMdp::kTerminal) = 1.0;
  at(AliasMdp::kS2, AliasMdp::kGo, AliasMdp::kTerminal) = 1.0;
  at(AliasMdp::kS2, AliasMdp::kOther, AliasMdp::kTerminal) = 1.0;
  at(AliasMdp::kTerminal, AliasMdp::kGo, AliasMdp::kTerminal) = 1.0;
  at(AliasMdp::kTerminal, AliasMdp::kOther, AliasMdp::kTerminal) = 1.0;
  Table r(ns, na);
  r(AliasMdp::kS2, AliasMdp::kOther) = 1.0;
  return TabularMdp(ns, na, AliasMdp::kTerminal, std::move(t), std::move(r), gamma, {1.0, 0.0, 0.0});
}

}  // namespace

AliasMdp::AliasMdp(double gamma_, double epsilon_) : gamma(gamma_), epsilon(epsilon_), mdp(build_alias(gamma_)) {
  require(epsilon >= 0.0, ErrorKind::Domain, "alias tolerance must be nonnegative");
}

Table AliasMdp::policy(double p, double q) const {
  require(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0, ErrorKind::Domain, "alias probabilities must lie in [0, 1]");
  Table pi(3, 2);
  pi(kS1, kGo) = p;
  pi(kS1, kOther) = 1.0 - p;
  pi(kS2, kGo) = q;
  pi(kS2, kOther) = 1.0 - q;
  pi(kTerminal, kGo) = 0.5;
  pi(kTerminal, kOther) = 0.5;
  return pi;
}

bool AliasMdp::admissible(double p, double q) const { return std::abs(p - q) <= epsilon; }

AliasFixedPoints alias_fixed_points(double gamma) {
  require(gamma > 0.0 && gamma < 1.0, ErrorKind::Domain, "alias_fixed_points requires 0 < gamma < 1");
  const double one_plus = 1.0 + gamma;
  return {0.5, gamma / one_plus, 4.0 * gamma / (one_plus * one_plus)};
}

// --- other environments --------------------------------------------------------

TabularMdp chain_mdp(std::size_t length, double gamma, double slip, double quit_reward) {
  require(length >= 1, ErrorKind::InvalidArgument, "chain needs at least one state");
  require(slip >= 0.0 && slip < 1.0, ErrorKind::Domain, "slip must lie in [0, 1)");
  const std::size_t ns = length + 1;
  const std::size_t terminal = length;
  constexpr std::size_t na = 2;
  std::vector<double> t(ns * na * ns, 0.0);
  auto at = [&](std::size_t s, std::size_t a, std::size_t n) -> double& { return t[(s * na + a) * ns + n]; };
  Table r(ns, na);
  for (std::size_t s = 0; s < length; ++s) {
    at(s, 1, terminal) = 1.0;
    r(s, 1) = quit_reward;
    if (s + 1 == length) {
      at(s, 0, terminal) = 1.0;
      r(s, 0) = 1.0;
    } else {
      at(s, 0, s + 1) = 1.0 - slip;
      at(s, 0, s) = slip;
    }
  }
  at(terminal, 0, terminal) = 1.0;
  at(terminal, 1, terminal) = 1.0;
  std::vector<double> init(ns, 0.0);
  init[0] = 1.0;
  return TabularMdp(ns, na, terminal, std::move(t), std::move(r), gamma, std::move(init));
}

TabularMdp random_episodic_mdp(std::size_t n_nonterminal, std::size_t n_actions, double gamma, Rng& rng) {
  require(n_nonterminal >= 1 && n_actions >= 1, ErrorKind::InvalidArgument, "random MDP needs states and actions");
  constexpr double kTerminalMass = 0.05;
  const std::size_t ns = n_nonterminal + 1;
  const std::size_t terminal = n_nonterminal;
  std::vector<double> t(ns * n_actions * ns, 0.0);
  Table r(ns, n_actions);

  auto dirichlet = [&](std::size_t k) {
    std::vector<double> w(k);
    double total = 0.0;
    for (double& x : w) {
      x = -std::log1p(-rng.uniform());
      total += x;
    }
    for (double& x : w) x /= total;
    return w;
  };

  for (std::size_t s = 0; s < n_nonterminal; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      const auto w = dirichlet(n_nonterminal);
      double* row = t.data() + (s * n_actions + a) * ns;
      for (std::size_t n = 0; n < n_nonterminal; ++n) row[n] = (1.0 - kTerminalMass) * w[n];
      // Close the row exactly so it sums to one within round-off.
      double partial = 0.0;
      for (std::size_t n = 0; n < n_nonterminal; ++n) partial += row[n];
      row[terminal] = 1.0 - partial;
      r(s, a) = rng.uniform(-1.0, 1.0);
    }
  }
  for (std::size_t a = 0; a < n_actions; ++a) t[(terminal * n_actions + a) * ns + terminal] = 1.0;

  auto init_live = dirichlet(n_nonterminal);
  std::vector<double> init(ns, 0.0);
  double partial = 0.0;
  for (std::size_t n = 0; n + 1 < n_nonterminal; ++n) {
    init[n] = init_live[n];
    partial += init_live[n];
  }
  init[n_nonterminal - 1] = 1.0 - partial;
  return TabularMdp(ns, n_actions, terminal, std::move(t), std::move(r), gamma, std::move(init));
}

}  // namespace pgbias
