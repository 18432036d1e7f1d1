#include "lfdx/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lfdx {

void PlannerConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (max_sweeps <= 0) throw std::invalid_argument("max_sweeps must be positive");
}

std::vector<Action> ActionSet::actions() const {
  std::vector<Action> out;
  for (Action a : kActions) {
    if (contains(a)) out.push_back(a);
  }
  return out;
}

std::vector<double> value_iteration(const RewardParams& reward, const StateSpace& space,
                                    const PlannerConfig& cfg) {
  cfg.validate();
  if (reward.theta.size() != space.size())
    throw std::invalid_argument("value_iteration: reward size does not match state count");
  for (double r : reward.theta) {
    if (!std::isfinite(r)) throw std::invalid_argument("value_iteration: non-finite reward");
  }
  const std::size_t n = space.size();
  std::vector<double> values(n, 0.0), next(n);
  double residual = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    residual = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (Action a : kActions) best = std::max(best, values[space.model_next(s, a)]);
      next[s] = reward.theta[s] + cfg.gamma * best;
      residual = std::max(residual, std::abs(next[s] - values[s]));
    }
    values.swap(next);
    if (residual < cfg.tol) return values;
  }
  throw ConvergenceError("value_iteration did not converge in " + std::to_string(cfg.max_sweeps) +
                             " sweeps (residual " + std::to_string(residual) + ")",
                         residual);
}

PolicyArtifacts greedy_policy(const std::vector<double>& values, const StateSpace& space) {
  if (values.size() != space.size())
    throw std::invalid_argument("greedy_policy: value size does not match state count");
  PolicyArtifacts out;
  out.values = values;
  out.greedy.resize(space.size());
  out.optimal_sets.resize(space.size());
  for (std::size_t s = 0; s < space.size(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (Action a : kActions) best = std::max(best, values[space.model_next(s, a)]);
    bool chosen = false;
    for (Action a : kActions) {
      if (values[space.model_next(s, a)] >= best - kTieTolerance) {
        out.optimal_sets[s].insert(a);
        if (!chosen) {
          out.greedy[s] = a;
          chosen = true;
        }
      }
    }
  }
  return out;
}

}  // namespace lfdx
