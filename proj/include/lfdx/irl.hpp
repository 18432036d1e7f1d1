#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "lfdx/demonstration.hpp"
#include "lfdx/gridworld.hpp"

namespace lfdx {

/// One reward weight per free state (one-hot state features), indexed like
/// StateSpace::cells().
struct RewardParams {
  std::vector<double> theta;

  bool operator==(const RewardParams&) const = default;
};

enum class IrlMethod { Lbfgs, GradientAscent };

/// Both methods backtrack (halving) from their trial step until the mean
/// log-likelihood rises, so every accepted iterate improves the objective.
/// GradientAscent tries `learning_rate * gradient` each iteration; Lbfgs tries
/// the quasi-Newton step and uses `learning_rate` only for its first step.
struct IrlConfig {
  IrlMethod method = IrlMethod::GradientAscent;
  double learning_rate = 0.1;
  int memory = 10;
  int max_iters = 500;
  double grad_tol = 1e-4;
  /// Trajectory length in states. 0 selects 2 * |S|.
  int horizon = 0;
  /// Weight of the Gaussian prior -l2/2 * |theta|^2 added to the objective.
  /// 0 gives the unregularised maximum-likelihood fit.
  double l2 = 0.0;

  void validate() const;
};

/// Time-indexed stochastic policy. `step(t)` is a |S| x 4 row-major table of
/// action probabilities for the decision taken at time t; a policy covers
/// `horizon() - 1` decisions.
class SoftPolicy {
 public:
  SoftPolicy(std::size_t num_states, std::vector<std::vector<double>> steps, int horizon);

  /// A policy that uses the same table at every step.
  static SoftPolicy stationary(std::size_t num_states, std::vector<double> table, int horizon);

  int horizon() const { return horizon_; }
  std::size_t num_states() const { return num_states_; }
  /// Soft value of occupying s at time t, when the policy came from
  /// soft_policy (empty otherwise).
  bool has_values() const { return !values_.empty(); }
  double value(int t, std::size_t s) const {
    return values_.at(static_cast<std::size_t>(t))[s];
  }
  void set_values(std::vector<std::vector<double>> values) { values_ = std::move(values); }
  const std::vector<double>& step(int t) const;
  double prob(int t, std::size_t s, Action a) const {
    return step(t)[s * kNumActions + static_cast<std::size_t>(a)];
  }

 private:
  std::size_t num_states_;
  std::vector<std::vector<double>> steps_;
  std::vector<std::vector<double>> values_;
  int horizon_;
};

/// Average per-demonstration state-visit counts over the demonstrated states.
/// With a positive `horizon`, each demonstration is continued at its final
/// state until it spans `horizon` states (terminals are absorbing), which is
/// the quantity the learner's expected visitation is compared against.
std::vector<double> empirical_feature_counts(const StateSpace& space,
                                             const std::vector<Demonstration>& demos,
                                             int horizon = 0);

/// Soft (log-sum-exp) backward recursion over `horizon` states. States in
/// `terminals` absorb: every action stays put. Other cells follow
/// apply_action.
SoftPolicy soft_policy(const RewardParams& reward, const StateSpace& space,
                       const TerminalSet& terminals, int horizon);

/// Expected state-visitation counts over `horizon` time steps under `policy`
/// started from `p0`.
std::vector<double> expected_svf(const SoftPolicy& policy, const StateSpace& space,
                                 const std::vector<double>& p0, const TerminalSet& terminals,
                                 int horizon);

/// Mean log-probability per demonstration of its state sequence under the
/// soft policy, conditioned on the start state. Terminals are taken from
/// `demos` and the horizon is raised to the longest demonstration if needed.
double log_likelihood(const RewardParams& reward, const std::vector<Demonstration>& demos,
                      const StateSpace& space, int horizon);

/// Analytic gradient of log_likelihood: padded empirical counts minus the
/// expected visitation from the empirical start distribution.
std::vector<double> log_likelihood_gradient(const RewardParams& reward,
                                            const std::vector<Demonstration>& demos,
                                            const StateSpace& space, int horizon);

/// Horizon used for `demos`: the configured one (or 2|S|), raised to the
/// longest demonstration.
int effective_horizon(const IrlConfig& cfg, const StateSpace& space,
                      const std::vector<Demonstration>& demos);

struct FitResult {
  RewardParams reward;
  int iterations = 0;
  double residual = 0.0;  // infinity norm of the last gradient
  bool converged = false;
};

using FitObserver = std::function<void(int iteration, const RewardParams&, double residual)>;

/// Maximum-entropy IRL from theta = 0 with cfg.method. Only valid
/// demonstrations are used; throws std::invalid_argument if there are none.
FitResult fit(const std::vector<Demonstration>& demos, const StateSpace& space,
              const IrlConfig& cfg, const FitObserver& observer = {});

}  // namespace lfdx
