#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "lfdx/demonstration.hpp"
#include "lfdx/gridworld.hpp"
#include "lfdx/planner.hpp"
#include "lfdx/rng.hpp"

namespace lfdx {

enum class Outcome { Success, Failure };
enum class FailureReason { Cycle, StepCap, TerminalNotInTu };

std::string_view to_string(Outcome o);
std::string_view to_string(FailureReason r);

/// A noise-free rollout of the learnt policy. For cycles the repeated state is
/// appended last so the loop is visible to viewers.
struct ExplanatoryTrajectory {
  Cell start;
  std::vector<Cell> states;
  std::vector<Action> actions;
  std::optional<Cell> terminal;
  Outcome category = Outcome::Failure;
  std::optional<FailureReason> failure_reason;

  bool success() const { return category == Outcome::Success; }
  bool operator==(const ExplanatoryTrajectory&) const = default;
};

struct ExplanationSample {
  std::vector<ExplanatoryTrajectory> trajectories;
  int n_success = 0;
  int n_failure = 0;

  bool operator==(const ExplanationSample&) const = default;
};

/// Follows `greedy` from `start` on the planning model (goal cells absorb).
/// Stops at a fixed point, on revisiting a state, or after |S| steps.
ExplanatoryTrajectory rollout(const std::vector<Action>& greedy, const StateSpace& space,
                              Cell start, const TerminalSet& tu);

inline ExplanatoryTrajectory rollout(const PolicyArtifacts& policy, const StateSpace& space,
                                     Cell start, const TerminalSet& tu) {
  return rollout(policy.greedy, space, start, tu);
}

/// One rollout per free state, in enumerate_free_states order.
std::vector<ExplanatoryTrajectory> generate_population(const std::vector<Action>& greedy,
                                                       const StateSpace& space,
                                                       const TerminalSet& tu);

inline std::vector<ExplanatoryTrajectory> generate_population(const PolicyArtifacts& policy,
                                                              const StateSpace& space,
                                                              const TerminalSet& tu) {
  return generate_population(policy.greedy, space, tu);
}

/// Fraction of successful trajectories.
double performance(const std::vector<ExplanatoryTrajectory>& population);

/// Category counts for a k-sample: failures get ceil(k * failure fraction),
/// capped at k and at the available failures, the rest are successes.
struct SampleCounts {
  int n_success = 0;
  int n_failure = 0;
};
SampleCounts sample_counts(int population_size, int available_failures, int k);

/// Ratio-preserving sample of k trajectories, uniform without replacement
/// within each category. Returned in population order.
ExplanationSample sample_explanations(const std::vector<ExplanatoryTrajectory>& population,
                                      int k, Rng& rng);

}  // namespace lfdx
