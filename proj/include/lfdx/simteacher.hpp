#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "lfdx/explainer.hpp"
#include "lfdx/metrics.hpp"
#include "lfdx/protocol.hpp"

namespace lfdx {

enum class TeacherStrategy { RandomStart, CoverageStart, FeedbackResponsive };

std::string_view to_string(TeacherStrategy s);
/// Accepts the enumerator names and the CLI spellings random/coverage/responsive.
TeacherStrategy parse_strategy(std::string_view s);

struct TeacherHistory {
  int demos_started = 0;
};

/// Start cell for the next demonstration. FeedbackResponsive only looks at
/// the trajectories in `last_sample`.
Cell choose_start(TeacherStrategy strategy, const StateSpace& space, const TeacherHistory& history,
                  const ExplanationSample* last_sample, Rng& rng);

/// Goal the teacher aims for: preferred when its shortest path fits the
/// budget, otherwise the non-preferred goal.
Cell teacher_target(const StateSpace& space, Cell start, int budget);

/// Shortest-path action toward `target`, never routing through the other goal.
Action teacher_action(const StateSpace& space, Cell from, Cell target);

/// A noisy demonstration that replans after every realised move. Ends on any
/// goal, or is invalid after limit_factor * budget actions.
Demonstration demonstrate(const StateSpace& space, Cell start, int budget, Rng& rng,
                          int limit_factor = 4);

struct SessionRun {
  MetricsReport report;
  std::vector<Event> events;
  SessionState final_state;
};

/// Plays one full session headlessly. Events are routed through advance(), so
/// `events` replays to the same final state. `observer` sees every event after
/// it has been applied.
using RunObserver = std::function<void(const SessionState& before, const Event&, const SessionState& after)>;
SessionRun run_session(const SessionSetup& setup, TeacherStrategy strategy,
                       const RunObserver& observer = {});

/// One report per seed (cfg.seed, cfg.seed + 1, ...), ordered by seed.
std::vector<MetricsReport> run_experiment(Condition condition, TeacherStrategy strategy,
                                          const SessionSetup& base, int n_seeds, int threads = 0);

}  // namespace lfdx
