#pragma once

#include <stdexcept>
#include <vector>

#include "lfdx/gridworld.hpp"
#include "lfdx/irl.hpp"

namespace lfdx {

struct PlannerConfig {
  double gamma = 0.9;
  double tol = 1e-6;
  int max_sweeps = 10000;

  void validate() const;
};

/// Set of actions as a bitmask over kActions.
class ActionSet {
 public:
  constexpr ActionSet() = default;
  void insert(Action a) { bits_ |= bit(a); }
  bool contains(Action a) const { return (bits_ & bit(a)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::vector<Action> actions() const;
  unsigned bits() const { return bits_; }
  bool operator==(const ActionSet&) const = default;

 private:
  static unsigned bit(Action a) { return 1u << static_cast<unsigned>(a); }
  unsigned bits_ = 0;
};

struct PolicyArtifacts {
  std::vector<double> values;
  std::vector<Action> greedy;
  std::vector<ActionSet> optimal_sets;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Discounted value iteration over the noise-free model with goal cells
/// absorbing. Reward theta[s] is collected for every step spent in s.
/// Throws ConvergenceError (carrying the last residual) after max_sweeps.
std::vector<double> value_iteration(const RewardParams& reward, const StateSpace& space,
                                    const PlannerConfig& cfg = {});

/// Greedy actions with canonical-order tie-breaking, and the per-state sets of
/// actions whose successor value is within 1e-9 of the best.
PolicyArtifacts greedy_policy(const std::vector<double>& values, const StateSpace& space);

inline constexpr double kTieTolerance = 1e-9;

}  // namespace lfdx
