#include "lfdx/irl.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <utility>
#include <iterator>
#include <limits>
#include <stdexcept>

namespace lfdx {

namespace {

std::vector<char> terminal_mask(const StateSpace& space, const TerminalSet& terminals) {
  std::vector<char> mask(space.size(), 0);
  for (const Cell& c : terminals.cells) mask[space.index(c)] = 1;
  return mask;
}

std::size_t learner_next(const StateSpace& space, const std::vector<char>& absorbing,
                         std::size_t s, Action a) {
  return absorbing[s] ? s : space.next(s, a);
}

std::vector<Demonstration> valid_only(const std::vector<Demonstration>& demos) {
  std::vector<Demonstration> out;
  std::copy_if(demos.begin(), demos.end(), std::back_inserter(out),
               [](const Demonstration& d) { return d.valid; });
  return out;
}

std::vector<double> start_distribution(const StateSpace& space,
                                       const std::vector<Demonstration>& demos) {
  std::vector<double> p0(space.size(), 0.0);
  for (const auto& d : demos) p0[space.index(d.start())] += 1.0;
  for (double& p : p0) p /= static_cast<double>(demos.size());
  return p0;
}

}  // namespace

void IrlConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (max_iters <= 0) throw std::invalid_argument("max_iters must be positive");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("grad_tol must be positive");
  if (horizon < 0) throw std::invalid_argument("horizon must be positive (or 0 for 2|S|)");
  if (memory < 1) throw std::invalid_argument("memory must be positive");
  if (!(l2 >= 0.0)) throw std::invalid_argument("l2 must be non-negative");
}

SoftPolicy::SoftPolicy(std::size_t num_states, std::vector<std::vector<double>> steps,
                       int horizon)
    : num_states_(num_states), steps_(std::move(steps)), horizon_(horizon) {
  if (horizon_ < 1) throw std::invalid_argument("SoftPolicy: horizon must be positive");
  for (const auto& table : steps_) {
    if (table.size() != num_states_ * kNumActions)
      throw std::invalid_argument("SoftPolicy: table size mismatch");
  }
}

SoftPolicy SoftPolicy::stationary(std::size_t num_states, std::vector<double> table,
                                  int horizon) {
  std::vector<std::vector<double>> steps;
  steps.push_back(std::move(table));
  return SoftPolicy(num_states, std::move(steps), horizon);
}

const std::vector<double>& SoftPolicy::step(int t) const {
  if (steps_.size() == 1) return steps_.front();
  return steps_.at(static_cast<std::size_t>(t));
}

std::vector<double> empirical_feature_counts(const StateSpace& space,
                                             const std::vector<Demonstration>& demos,
                                             int horizon) {
  if (demos.empty()) throw std::invalid_argument("empirical_feature_counts: no demonstrations");
  std::vector<double> counts(space.size(), 0.0);
  for (const auto& d : demos) {
    for (const Cell& c : d.states) counts[space.index(c)] += 1.0;
    const int pad = horizon - static_cast<int>(d.states.size());
    if (pad > 0) counts[space.index(d.final_state())] += pad;
  }
  for (double& c : counts) c /= static_cast<double>(demos.size());
  return counts;
}

SoftPolicy soft_policy(const RewardParams& reward, const StateSpace& space,
                       const TerminalSet& terminals, int horizon) {
  if (terminals.empty()) throw std::invalid_argument("soft_policy: empty terminal set");
  if (horizon < 1) throw std::invalid_argument("soft_policy: horizon must be positive");
  if (reward.theta.size() != space.size())
    throw std::invalid_argument("soft_policy: reward size does not match state count");
  const std::size_t n = space.size();
  const auto absorbing = terminal_mask(space, terminals);

  // values[t][s] is the soft value of occupying s at time t.
  std::vector<std::vector<double>> values(static_cast<std::size_t>(horizon));
  values.back() = reward.theta;
  std::vector<std::vector<double>> steps(static_cast<std::size_t>(horizon - 1));
  for (int t = horizon - 2; t >= 0; --t) {
    const auto& later = values[static_cast<std::size_t>(t) + 1];
    auto& now = values[static_cast<std::size_t>(t)];
    auto& table = steps[static_cast<std::size_t>(t)];
    now.resize(n);
    table.resize(n * kNumActions);
    for (std::size_t s = 0; s < n; ++s) {
      std::array<double, kNumActions> q{};
      double q_max = -std::numeric_limits<double>::infinity();
      for (Action a : kActions) {
        const auto i = static_cast<std::size_t>(a);
        q[i] = reward.theta[s] + later[learner_next(space, absorbing, s, a)];
        q_max = std::max(q_max, q[i]);
      }
      std::array<double, kNumActions> e{};
      double z = 0.0;
      for (std::size_t i = 0; i < kNumActions; ++i) z += e[i] = std::exp(q[i] - q_max);
      for (std::size_t i = 0; i < kNumActions; ++i) table[s * kNumActions + i] = e[i] / z;
      now[s] = q_max + std::log(z);
    }
  }
  SoftPolicy policy(n, std::move(steps), horizon);
  policy.set_values(std::move(values));
  return policy;
}

std::vector<double> expected_svf(const SoftPolicy& policy, const StateSpace& space,
                                 const std::vector<double>& p0, const TerminalSet& terminals,
                                 int horizon) {
  if (p0.size() != space.size()) throw std::invalid_argument("expected_svf: p0 size mismatch");
  double mass = 0.0;
  for (double p : p0) {
    if (p < 0.0) throw std::invalid_argument("expected_svf: negative start probability");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-9) throw std::invalid_argument("expected_svf: p0 not normalised");
  if (horizon < 1) throw std::invalid_argument("expected_svf: horizon must be positive");
  const std::size_t n = space.size();
  const auto absorbing = terminal_mask(space, terminals);

  std::vector<double> occupancy = p0;
  std::vector<double> total = p0;
  std::vector<double> next(n);
  for (int t = 0; t + 1 < horizon; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    const auto& table = policy.step(t);
    for (std::size_t s = 0; s < n; ++s) {
      if (occupancy[s] == 0.0) continue;
      for (Action a : kActions) {
        next[learner_next(space, absorbing, s, a)] +=
            occupancy[s] * table[s * kNumActions + static_cast<std::size_t>(a)];
      }
    }
    occupancy.swap(next);
    for (std::size_t s = 0; s < n; ++s) total[s] += occupancy[s];
  }
  return total;
}

int effective_horizon(const IrlConfig& cfg, const StateSpace& space,
                      const std::vector<Demonstration>& demos) {
  int h = cfg.horizon > 0 ? cfg.horizon : static_cast<int>(2 * space.size());
  for (const auto& d : demos) h = std::max(h, static_cast<int>(d.states.size()));
  return h;
}

namespace {

/// Objective shared by log_likelihood, its gradient and fit: the mean
/// per-demonstration log-likelihood over valid demonstrations.
class Objective {
 public:
  Objective(const StateSpace& space, const std::vector<Demonstration>& demos, int horizon)
      : space_(space), demos_(valid_only(demos)) {
    if (demos_.empty()) throw std::invalid_argument("no valid demonstrations");
    terminals_ = terminal_set(demos_);
    absorbing_ = terminal_mask(space, terminals_);
    horizon_ = horizon;
    for (const auto& d : demos_) horizon_ = std::max(horizon_, static_cast<int>(d.states.size()));
    empirical_ = empirical_feature_counts(space, demos_, horizon_);
    p0_ = start_distribution(space, demos_);
  }

  int horizon() const { return horizon_; }
  const TerminalSet& terminals() const { return terminals_; }

  /// Evaluated in log space: the probability of moving s -> s' at time t is
  /// n * exp(theta(s) + V[t+1](s') - V[t](s)), n being the number of actions
  /// the model maps onto that move.
  double value(const SoftPolicy& pi, const RewardParams& reward) const {
    double total = 0.0;
    for (const auto& d : demos_) {
      for (std::size_t t = 0; t + 1 < d.states.size(); ++t) {
        const std::size_t s = space_.index(d.states[t]);
        const std::size_t s_next = space_.index(d.states[t + 1]);
        int ways = 0;
        for (Action a : kActions) ways += learner_next(space_, absorbing_, s, a) == s_next ? 1 : 0;
        if (ways == 0)
          throw PreconditionError("transition " + to_string(d.states[t]) + " -> " +
                                  to_string(d.states[t + 1]) + " impossible under the model");
        const int ti = static_cast<int>(t);
        total += std::log(static_cast<double>(ways)) + reward.theta[s] + pi.value(ti + 1, s_next) -
                 pi.value(ti, s);
      }
    }
    return total / static_cast<double>(demos_.size());
  }

  double value(const RewardParams& reward) const {
    return value(soft_policy(reward, space_, terminals_, horizon_), reward);
  }

  std::vector<double> gradient(const SoftPolicy& pi) const {
    const auto svf = expected_svf(pi, space_, p0_, terminals_, horizon_);
    std::vector<double> grad(space_.size());
    for (std::size_t s = 0; s < grad.size(); ++s) grad[s] = empirical_[s] - svf[s];
    return grad;
  }

  std::pair<double, std::vector<double>> evaluate(const RewardParams& reward) const {
    const SoftPolicy pi = soft_policy(reward, space_, terminals_, horizon_);
    return {value(pi, reward), gradient(pi)};
  }

 private:
  const StateSpace& space_;
  std::vector<Demonstration> demos_;
  TerminalSet terminals_;
  std::vector<char> absorbing_;
  int horizon_ = 0;
  std::vector<double> empirical_;
  std::vector<double> p0_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Two-loop recursion: approximate inverse-Hessian times `grad` from the
/// stored (step, gradient-change) pairs, for an ascent problem.
std::vector<double> lbfgs_direction(const std::vector<double>& grad,
                                    const std::deque<std::vector<double>>& steps,
                                    const std::deque<std::vector<double>>& changes) {
  std::vector<double> q = grad;
  const std::size_t m = steps.size();
  std::vector<double> alpha(m), rho(m);
  for (std::size_t k = m; k-- > 0;) {
    rho[k] = 1.0 / dot(changes[k], steps[k]);
    alpha[k] = rho[k] * dot(steps[k], q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * changes[k][i];
  }
  if (m > 0) {
    const double gamma = dot(steps.back(), changes.back()) / dot(changes.back(), changes.back());
    for (double& x : q) x *= gamma;
  }
  for (std::size_t k = 0; k < m; ++k) {
    const double beta = rho[k] * dot(changes[k], q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += steps[k][i] * (alpha[k] - beta);
  }
  return q;
}

}  // namespace

double log_likelihood(const RewardParams& reward, const std::vector<Demonstration>& demos,
                      const StateSpace& space, int horizon) {
  return Objective(space, demos, horizon).value(reward);
}

std::vector<double> log_likelihood_gradient(const RewardParams& reward,
                                            const std::vector<Demonstration>& demos,
                                            const StateSpace& space, int horizon) {
  Objective obj(space, demos, horizon);
  return obj.gradient(soft_policy(reward, space, obj.terminals(), obj.horizon()));
}

FitResult fit(const std::vector<Demonstration>& demos, const StateSpace& space,
              const IrlConfig& cfg, const FitObserver& observer) {
  cfg.validate();
  const Objective likelihood(space, demos, effective_horizon(cfg, space, demos));
  const auto policy_for = [&](const RewardParams& r) {
    return soft_policy(r, space, likelihood.terminals(), likelihood.horizon());
  };
  const auto objective_value = [&](const SoftPolicy& pi, const RewardParams& r) {
    return likelihood.value(pi, r) - 0.5 * cfg.l2 * dot(r.theta, r.theta);
  };
  const auto objective_gradient = [&](const SoftPolicy& pi, const RewardParams& r) {
    auto g = likelihood.gradient(pi);
    for (std::size_t s = 0; s < g.size(); ++s) g[s] -= cfg.l2 * r.theta[s];
    return g;
  };
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 60;

  FitResult result;
  result.reward.theta.assign(space.size(), 0.0);
  SoftPolicy pi = policy_for(result.reward);
  double value = objective_value(pi, result.reward);
  std::vector<double> grad = objective_gradient(pi, result.reward);
  std::deque<std::vector<double>> steps, changes;

  for (int it = 0;; ++it) {
    result.iterations = it;
    result.residual = inf_norm(grad);
    if (observer) observer(it, result.reward, result.residual);
    if (result.residual <= cfg.grad_tol) {
      result.converged = true;
      break;
    }
    if (it == cfg.max_iters) break;

    std::vector<double> direction;
    double step = 1.0;
    if (cfg.method == IrlMethod::Lbfgs && !steps.empty()) {
      direction = lbfgs_direction(grad, steps, changes);
      if (dot(direction, grad) <= 0.0) {
        steps.clear();
        changes.clear();
        direction = grad;
        step = cfg.learning_rate;
      }
    } else {
      direction = grad;
      step = cfg.learning_rate;
    }

    // Backtrack until the step gives sufficient ascent.
    const double slope = dot(direction, grad);
    RewardParams candidate = result.reward;
    double candidate_value = value;
    bool accepted = false;
    for (int b = 0; b < kMaxBacktracks; ++b, step *= 0.5) {
      for (std::size_t s = 0; s < space.size(); ++s)
        candidate.theta[s] = result.reward.theta[s] + step * direction[s];
      pi = policy_for(candidate);
      candidate_value = objective_value(pi, candidate);
      if (candidate_value >= value + kArmijo * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    auto next_grad = objective_gradient(pi, candidate);
    std::vector<double> s_k(space.size()), y_k(space.size());
    for (std::size_t s = 0; s < space.size(); ++s) {
      s_k[s] = candidate.theta[s] - result.reward.theta[s];
      // Ascent problem: curvature pairs use the negated gradient change.
      y_k[s] = grad[s] - next_grad[s];
    }
    if (cfg.method == IrlMethod::Lbfgs && dot(s_k, y_k) > 1e-12) {
      steps.push_back(std::move(s_k));
      changes.push_back(std::move(y_k));
      if (steps.size() > static_cast<std::size_t>(cfg.memory)) {
        steps.pop_front();
        changes.pop_front();
      }
    }
    result.reward = std::move(candidate);
    value = candidate_value;
    grad = std::move(next_grad);
  }
  return result;
}

}  // namespace lfdx
