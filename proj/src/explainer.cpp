#include "lfdx/explainer.hpp"

#include <algorithm>
#include <stdexcept>

namespace lfdx {

std::string_view to_string(Outcome o) { return o == Outcome::Success ? "Success" : "Failure"; }

std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::Cycle: return "Cycle";
    case FailureReason::StepCap: return "StepCap";
    case FailureReason::TerminalNotInTu: return "TerminalNotInTu";
  }
  return "?";
}

ExplanatoryTrajectory rollout(const std::vector<Action>& greedy, const StateSpace& space,
                              Cell start, const TerminalSet& tu) {
  if (greedy.size() != space.size())
    throw std::invalid_argument("rollout: policy size does not match state count");
  std::size_t s = space.index(start);
  ExplanatoryTrajectory traj;
  traj.start = start;
  traj.states.push_back(start);
  std::vector<char> visited(space.size(), 0);
  visited[s] = 1;
  const std::size_t cap = space.size();

  while (true) {
    const Action a = greedy[s];
    const std::size_t n = space.model_next(s, a);
    if (n == s) {
      traj.terminal = space.cell(s);
      if (tu.contains(space.cell(s))) {
        traj.category = Outcome::Success;
      } else {
        traj.failure_reason = FailureReason::TerminalNotInTu;
      }
      return traj;
    }
    if (traj.actions.size() == cap) {
      traj.failure_reason = FailureReason::StepCap;
      return traj;
    }
    traj.actions.push_back(a);
    traj.states.push_back(space.cell(n));
    if (visited[n]) {
      traj.failure_reason = FailureReason::Cycle;
      return traj;
    }
    visited[n] = 1;
    s = n;
  }
}

std::vector<ExplanatoryTrajectory> generate_population(const std::vector<Action>& greedy,
                                                       const StateSpace& space,
                                                       const TerminalSet& tu) {
  std::vector<ExplanatoryTrajectory> population;
  population.reserve(space.size());
  for (const Cell& c : space.cells()) population.push_back(rollout(greedy, space, c, tu));
  return population;
}

double performance(const std::vector<ExplanatoryTrajectory>& population) {
  if (population.empty()) throw std::invalid_argument("performance: empty population");
  const auto hits = std::count_if(population.begin(), population.end(),
                                  [](const ExplanatoryTrajectory& t) { return t.success(); });
  return static_cast<double>(hits) / static_cast<double>(population.size());
}

SampleCounts sample_counts(int population_size, int available_failures, int k) {
  if (k < 1) throw std::invalid_argument("sample size must be at least 1");
  if (k > population_size) throw std::invalid_argument("sample size exceeds population");
  if (available_failures < 0 || available_failures > population_size)
    throw std::invalid_argument("failure count out of range");
  // ceil(k * F / N) in integers, so exact ratios are never rounded up.
  const long wanted = (static_cast<long>(k) * available_failures + population_size - 1) /
                      population_size;
  SampleCounts counts;
  counts.n_failure = static_cast<int>(std::min<long>({wanted, k, available_failures}));
  counts.n_success = k - counts.n_failure;
  const int available_success = population_size - available_failures;
  if (counts.n_success > available_success) {
    counts.n_success = available_success;
    counts.n_failure = k - available_success;
  }
  return counts;
}

namespace {

std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> pool, int count,
                                                  Rng& rng) {
  // Partial Fisher-Yates.
  for (int i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(pool.size() - static_cast<std::size_t>(i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

}  // namespace

ExplanationSample sample_explanations(const std::vector<ExplanatoryTrajectory>& population,
                                      int k, Rng& rng) {
  if (population.empty()) throw std::invalid_argument("sample_explanations: empty population");
  std::vector<std::size_t> successes, failures;
  for (std::size_t i = 0; i < population.size(); ++i) {
    (population[i].success() ? successes : failures).push_back(i);
  }
  const SampleCounts counts = sample_counts(static_cast<int>(population.size()),
                                            static_cast<int>(failures.size()), k);
  auto chosen = draw_without_replacement(std::move(failures), counts.n_failure, rng);
  const auto chosen_success = draw_without_replacement(std::move(successes), counts.n_success, rng);
  chosen.insert(chosen.end(), chosen_success.begin(), chosen_success.end());
  std::sort(chosen.begin(), chosen.end());

  ExplanationSample sample;
  sample.n_success = counts.n_success;
  sample.n_failure = counts.n_failure;
  for (std::size_t i : chosen) sample.trajectories.push_back(population[i]);
  return sample;
}

}  // namespace lfdx
