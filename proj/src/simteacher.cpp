#include "lfdx/simteacher.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace lfdx {

std::string_view to_string(TeacherStrategy s) {
  switch (s) {
    case TeacherStrategy::RandomStart: return "RandomStart";
    case TeacherStrategy::CoverageStart: return "CoverageStart";
    case TeacherStrategy::FeedbackResponsive: return "FeedbackResponsive";
  }
  return "?";
}

TeacherStrategy parse_strategy(std::string_view s) {
  if (s == "random" || s == "RandomStart") return TeacherStrategy::RandomStart;
  if (s == "coverage" || s == "CoverageStart") return TeacherStrategy::CoverageStart;
  if (s == "responsive" || s == "FeedbackResponsive") return TeacherStrategy::FeedbackResponsive;
  throw std::invalid_argument("unknown teacher strategy: " + std::string(s));
}

namespace {

Cell nearest_non_goal(const StateSpace& space, Cell goal) {
  const auto dist = space.distances_to(goal);
  std::optional<Cell> best;
  int best_d = 0;
  for (const Cell& c : probe_candidates(space)) {
    const int d = dist[space.index(c)];
    if (d > 0 && (!best || d < best_d)) {
      best = c;
      best_d = d;
    }
  }
  if (!best) throw PreconditionError("no start cell can reach " + to_string(goal));
  return *best;
}

std::set<Cell> other_goals(const GridSpec& grid, Cell target) {
  std::set<Cell> out;
  for (const Cell& g : grid.goals()) {
    if (g != target) out.insert(g);
  }
  return out;
}

}  // namespace

Cell choose_start(TeacherStrategy strategy, const StateSpace& space, const TeacherHistory& history,
                  const ExplanationSample* last_sample, Rng& rng) {
  const auto candidates = probe_candidates(space);
  if (candidates.empty()) throw PreconditionError("grid has no non-goal start cells");
  if (strategy == TeacherStrategy::CoverageStart) {
    return candidates[static_cast<std::size_t>(history.demos_started) % candidates.size()];
  }
  if (strategy == TeacherStrategy::FeedbackResponsive && last_sample) {
    std::vector<Cell> failures;
    for (const auto& t : last_sample->trajectories) {
      if (t.success()) continue;
      // A goal that is not yet demonstrated is fixed by demonstrating into it.
      failures.push_back(space.spec().is_goal(t.start) ? nearest_non_goal(space, t.start) : t.start);
    }
    if (!failures.empty()) return failures[rng.below(failures.size())];
  }
  return candidates[rng.below(candidates.size())];
}

Cell teacher_target(const StateSpace& space, Cell start, int budget) {
  const GridSpec& grid = space.spec();
  if (!grid.non_preferred_goal) return grid.preferred_goal;
  const int d = space.distances_to(grid.preferred_goal, other_goals(grid, grid.preferred_goal))
                    [space.index(start)];
  return (d >= 0 && d <= budget) ? grid.preferred_goal : *grid.non_preferred_goal;
}

Action teacher_action(const StateSpace& space, Cell from, Cell target) {
  const auto dist = space.distances_to(target, other_goals(space.spec(), target));
  const auto a = space.descend(space.index(from), dist);
  if (!a) throw PreconditionError("target " + to_string(target) + " unreachable from " + to_string(from));
  return *a;
}

Demonstration demonstrate(const StateSpace& space, Cell start, int budget, Rng& rng,
                          int limit_factor) {
  const GridSpec& grid = space.spec();
  const Cell target = teacher_target(space, start, budget);
  const auto dist = space.distances_to(target, other_goals(grid, target));
  if (dist[space.index(start)] < 0)
    throw PreconditionError("target " + to_string(target) + " unreachable from " + to_string(start));
  std::vector<Cell> states{start};
  std::vector<Action> actions;
  Cell at = start;
  const int limit = limit_factor * budget;
  while (!grid.is_goal(at) && static_cast<int>(actions.size()) < limit) {
    auto a = space.descend(space.index(at), dist);
    // Noise can push the robot onto the other goal's side; replan from there.
    if (!a) a = teacher_action(space, at, target);
    actions.push_back(*a);
    at = step_noisy(grid, at, *a, rng);
    states.push_back(at);
  }
  return make_demonstration(grid, std::move(states), std::move(actions));
}

namespace {

/// Prediction heuristic: the robot heads for the nearest goal the teacher has
/// demonstrated, along a shortest path. Independent of the learnt policy.
struct Intuition {
  PredictionValue answer;
  int distance = 0;
};

Intuition intuit(const StateSpace& space, const SessionState& st, Cell probe, PredictionKind kind) {
  std::set<Cell> taught;
  for (const auto& d : st.demos) taught.insert(d.final_state());
  if (taught.empty()) taught.insert(space.spec().preferred_goal);
  std::optional<Cell> goal;
  int best = -1;
  for (const Cell& g : taught) {
    const int d = space.distances_to(g)[space.index(probe)];
    if (d >= 0 && (best < 0 || d < best)) {
      best = d;
      goal = g;
    }
  }
  if (!goal) return {GoalLabel::NoGoal, 0};
  if (kind == PredictionKind::Action) return {teacher_action(space, probe, *goal), best};
  return {*goal == space.spec().preferred_goal ? GoalLabel::Preferred : GoalLabel::NonPreferred, best};
}

int clamp_likert(double x) { return std::clamp(static_cast<int>(std::lround(x)), 1, 7); }

}  // namespace

SessionRun run_session(const SessionSetup& setup, TeacherStrategy strategy, const RunObserver& observer) {
  SessionRun run;
  SessionState st = create_session(setup);
  Rng teacher_rng(derive_seed(setup.session.seed, 1));
  TeacherHistory history;
  std::optional<ExplanationSample> last_sample;
  const StateSpace& space = *st.space;

  auto apply = [&](const Event& e) {
    SessionState next = lfdx::advance(st, e);
    if (observer) observer(st, e, next);
    run.events.push_back(e);
    st = std::move(next);
  };

  // Upper bound on events; a correct engine never gets near it.
  const std::size_t event_cap = 1'000'000;
  while (st.phase != Phase::Done) {
    if (run.events.size() > event_cap) throw std::runtime_error("run_session: runaway session");
    switch (st.phase) {
      case Phase::Practice:
      case Phase::Explaining:
        if (st.phase == Phase::Explaining && st.explanation_context == ExplanationContext::AfterSet)
          last_sample = st.explanation;
        apply(ExplanationAck{});
        break;
      case Phase::Demonstrating:
        if (st.demos_in_set >= setup.session.demos_per_set) {
          apply(SetComplete{});
        } else if (!st.active_demo) {
          const Cell start = choose_start(strategy, space, history,
                                          last_sample ? &*last_sample : nullptr, teacher_rng);
          ++history.demos_started;
          apply(DemoReset{start});
        } else {
          const auto& demo = *st.active_demo;
          const Cell target = teacher_target(space, demo.start, demo.budget);
          apply(DemoStep{teacher_action(space, demo.position(), target)});
        }
        break;
      case Phase::ActionPredicting:
      case Phase::GoalPredicting: {
        const auto& probes = *st.probes;
        const auto idx = static_cast<std::size_t>(
            std::find(probes.answered.begin(), probes.answered.end(), 0) - probes.answered.begin());
        const Intuition guess = intuit(space, st, probes.probes[idx], probes.kind);
        PredictionSubmitted p;
        p.probe_index = static_cast<int>(idx);
        p.predicted = guess.answer;
        p.certainty = clamp_likert(7.0 - guess.distance / 2.0);
        p.elapsed = 1.5 + 0.4 * guess.distance;
        apply(p);
        break;
      }
      case Phase::Survey: {
        const auto& cfg = setup.session;
        int correct = 0;
        for (const auto& r : st.predictions) correct += r.correct ? 1 : 0;
        const double accuracy =
            st.predictions.empty() ? 0.0 : static_cast<double>(correct) / st.predictions.size();
        const double perf = st.performance_history.back();
        SurveyResponse s;
        s.answers = {clamp_likert(1.0 + 6.0 * perf), clamp_likert(1.0 + 6.0 * accuracy),
                     clamp_likert(1.0 + 6.0 * perf),
                     clamp_likert(1.0 + 6.0 * st.demo_sets_completed / cfg.max_demo_sets)};
        apply(SurveySubmitted{s});
        break;
      }
      case Phase::Done:
        break;
    }
  }
  run.report = compute_report(st);
  run.final_state = std::move(st);
  return run;
}

std::vector<MetricsReport> run_experiment(Condition condition, TeacherStrategy strategy,
                                          const SessionSetup& base, int n_seeds, int threads) {
  if (n_seeds < 1) throw std::invalid_argument("run_experiment: n_seeds must be at least 1");
  std::vector<MetricsReport> reports(static_cast<std::size_t>(n_seeds));
  std::vector<std::exception_ptr> errors(reports.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < reports.size(); i = next++) {
      try {
        SessionSetup setup = base;
        setup.session.condition = condition;
        setup.session.seed = base.session.seed + i;
        reports[i] = run_session(setup, strategy).report;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n_threads = threads > 0 ? static_cast<unsigned>(threads)
                                   : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(reports.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reports;
}

}  // namespace lfdx
