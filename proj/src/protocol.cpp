#include "lfdx/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace lfdx {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

template <class Enum, std::size_t N>
Enum parse_named(std::string_view s, const std::array<Enum, N>& values, const char* what) {
  for (Enum v : values) {
    if (to_string(v) == s) return v;
  }
  throw std::invalid_argument(std::string("unknown ") + what + ": " + std::string(s));
}

}  // namespace

std::string_view to_string(Condition c) { return c == Condition::EF ? "EF" : "NF"; }

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Practice: return "Practice";
    case Phase::Demonstrating: return "Demonstrating";
    case Phase::Explaining: return "Explaining";
    case Phase::ActionPredicting: return "ActionPredicting";
    case Phase::GoalPredicting: return "GoalPredicting";
    case Phase::Survey: return "Survey";
    case Phase::Done: return "Done";
  }
  return "?";
}

std::string_view to_string(Stage s) { return s == Stage::Initial ? "Initial" : "Final"; }
std::string_view to_string(PredictionKind k) { return k == PredictionKind::Action ? "Action" : "Goal"; }

std::string_view to_string(GoalLabel g) {
  switch (g) {
    case GoalLabel::Preferred: return "Preferred";
    case GoalLabel::NonPreferred: return "NonPreferred";
    case GoalLabel::NoGoal: return "NoGoal";
  }
  return "?";
}

std::string_view to_string(DemoStatus s) {
  switch (s) {
    case DemoStatus::InProgress: return "InProgress";
    case DemoStatus::Completed: return "Completed";
    case DemoStatus::Discarded: return "Discarded";
  }
  return "?";
}

Condition parse_condition(std::string_view s) {
  if (s == "EF" || s == "ef") return Condition::EF;
  if (s == "NF" || s == "nf") return Condition::NF;
  throw std::invalid_argument("unknown condition: " + std::string(s));
}

Phase parse_phase(std::string_view s) {
  return parse_named(s,
                     std::array{Phase::Practice, Phase::Demonstrating, Phase::Explaining,
                                Phase::ActionPredicting, Phase::GoalPredicting, Phase::Survey,
                                Phase::Done},
                     "phase");
}
Stage parse_stage(std::string_view s) {
  return parse_named(s, std::array{Stage::Initial, Stage::Final}, "stage");
}
PredictionKind parse_prediction_kind(std::string_view s) {
  return parse_named(s, std::array{PredictionKind::Action, PredictionKind::Goal}, "prediction kind");
}
GoalLabel parse_goal_label(std::string_view s) {
  return parse_named(s, std::array{GoalLabel::Preferred, GoalLabel::NonPreferred, GoalLabel::NoGoal},
                     "goal label");
}

std::string to_string(const PredictionValue& v) {
  return std::visit([](auto x) { return std::string(to_string(x)); }, v);
}

void SessionConfig::validate() const {
  if (demos_per_set < 1 || k_explanations < 1 || predictions_per_subtask < 1 || max_demo_sets < 1)
    throw std::invalid_argument("session counts must be at least 1");
  if (!(performance_threshold > 0.0 && performance_threshold <= 1.0))
    throw std::invalid_argument("performance_threshold must lie in (0,1]");
  if (budget_delta_min > budget_delta_max) throw std::invalid_argument("empty budget delta range");
  if (attempt_limit_factor < 1) throw std::invalid_argument("attempt_limit_factor must be at least 1");
}

void SurveyResponse::validate() const {
  for (int a : answers) {
    if (a < 1 || a > 7) throw InvalidEventError("survey answers must lie in 1..7");
  }
}

bool ProbeSet::complete() const {
  return std::all_of(answered.begin(), answered.end(), [](char c) { return c != 0; });
}

std::string_view event_name(const Event& e) {
  return std::visit(Overloaded{
                        [](const DemoReset&) { return std::string_view("demo_reset"); },
                        [](const DemoStep&) { return std::string_view("demo_step"); },
                        [](const SetComplete&) { return std::string_view("set_complete"); },
                        [](const ExplanationAck&) { return std::string_view("explanation_ack"); },
                        [](const PredictionSubmitted&) { return std::string_view("prediction_submitted"); },
                        [](const SurveySubmitted&) { return std::string_view("survey_submitted"); },
                    },
                    e);
}

// Learning pipeline -----------------------------------------------------------

LearnedArtifacts learn(const std::vector<Demonstration>& demos, const StateSpace& space,
                       const IrlConfig& irl, const PlannerConfig& planner) {
  LearnedArtifacts out;
  const FitResult fitted = fit(demos, space, irl);
  out.reward = fitted.reward;
  out.fit_iterations = fitted.iterations;
  out.fit_residual = fitted.residual;
  out.policy = greedy_policy(value_iteration(out.reward, space, planner), space);
  out.terminals = terminal_set(demos);
  out.population = generate_population(out.policy, space, out.terminals);
  out.performance = performance(out.population);
  return out;
}

std::string artifact_digest(const LearnedArtifacts& artifacts) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      h ^= (word >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (double t : artifacts.reward.theta) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &t, sizeof bits);
    mix(bits);
  }
  for (Action a : artifacts.policy.greedy) mix(static_cast<std::uint64_t>(a));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<Cell> probe_candidates(const StateSpace& space) {
  std::vector<Cell> out;
  for (const Cell& c : space.cells()) {
    if (!space.spec().is_goal(c)) out.push_back(c);
  }
  return out;
}

LearnedArtifacts practice_artifacts(const StateSpace& space, const IrlConfig& irl,
                                    const PlannerConfig& planner) {
  const GridSpec& grid = space.spec();
  std::set<Cell> blocked;
  if (grid.non_preferred_goal) blocked.insert(*grid.non_preferred_goal);
  const auto dist = space.distances_to(grid.preferred_goal, blocked);

  std::vector<Cell> starts;
  for (const Cell& c : probe_candidates(space)) {
    if (c.col < grid.width / 2 && dist[space.index(c)] > 0) starts.push_back(c);
  }
  if (starts.empty()) {
    for (const Cell& c : probe_candidates(space)) {
      if (dist[space.index(c)] > 0) starts.push_back(c);
    }
  }
  std::vector<Demonstration> demos;
  for (const Cell& start : starts) {
    std::vector<Cell> states{start};
    std::vector<Action> actions;
    std::size_t s = space.index(start);
    while (auto a = space.descend(s, dist)) {
      actions.push_back(*a);
      s = space.next(s, *a);
      states.push_back(space.cell(s));
    }
    demos.push_back(make_demonstration(grid, std::move(states), std::move(actions)));
  }
  return learn(demos, space, irl, planner);
}

int action_budget_for_delta(const StateSpace& space, Cell start, int delta) {
  const GridSpec& grid = space.spec();
  const std::size_t s = space.index(start);
  const int to_preferred = space.distances_to(grid.preferred_goal)[s];
  int nearest = to_preferred;
  if (grid.non_preferred_goal) {
    const int to_other = space.distances_to(*grid.non_preferred_goal)[s];
    if (to_other >= 0 && (nearest < 0 || to_other < nearest)) nearest = to_other;
  }
  if (nearest < 0) throw PreconditionError("no goal reachable from " + to_string(start));
  if (to_preferred < 0) return std::max(nearest, 1);
  return std::max({to_preferred + delta, nearest, 1});
}

int action_budget(const StateSpace& space, Cell start, Rng& rng, int delta_min, int delta_max) {
  return action_budget_for_delta(space, start, rng.uniform_int(delta_min, delta_max));
}

Grade grade_action_prediction(const PolicyArtifacts& policy, const StateSpace& space, Cell probe,
                              Action predicted) {
  if (space.spec().is_goal(probe))
    throw InvalidEventError("goal cells are not action-prediction probes: " + to_string(probe));
  const std::size_t s = space.index(probe);
  return Grade{policy.optimal_sets[s].contains(predicted), policy.greedy[s]};
}

GoalLabel rollout_goal_label(const PolicyArtifacts& policy, const StateSpace& space,
                             const TerminalSet& tu, Cell probe) {
  const auto traj = rollout(policy, space, probe, tu);
  const GridSpec& grid = space.spec();
  if (traj.terminal && *traj.terminal == grid.preferred_goal) return GoalLabel::Preferred;
  if (traj.terminal && grid.non_preferred_goal && *traj.terminal == *grid.non_preferred_goal)
    return GoalLabel::NonPreferred;
  return GoalLabel::NoGoal;
}

Grade grade_goal_prediction(const PolicyArtifacts& policy, const StateSpace& space,
                            const TerminalSet& tu, Cell probe, GoalLabel predicted) {
  const GoalLabel actual = rollout_goal_label(policy, space, tu, probe);
  return Grade{predicted == actual, actual};
}

// State machine -----------------------------------------------------------------

namespace {

class Machine {
 public:
  explicit Machine(SessionState& st) : st_(st) {}

  void operator()(const DemoReset& e) {
    require_demo_phase("demo_reset");
    if (st_.phase == Phase::Demonstrating && st_.demos_in_set >= st_.config().demos_per_set)
      throw ProtocolError(st_.phase, "demonstration set is full; complete the set first");
    const auto& space = *st_.space;
    if (!space.spec().is_free(e.start) || space.spec().is_goal(e.start))
      throw InvalidEventError("start must be a free non-goal cell: " + to_string(e.start));
    if (st_.active_demo && st_.phase == Phase::Demonstrating) ++st_.discarded_attempts;
    const auto& cfg = st_.config();
    ActiveDemo demo;
    demo.start = e.start;
    demo.budget = action_budget(space, e.start, st_.rng, cfg.budget_delta_min, cfg.budget_delta_max);
    demo.states.push_back(e.start);
    st_.active_demo = std::move(demo);
    st_.last_step.reset();
  }

  void operator()(const DemoStep& e) {
    require_demo_phase("demo_step");
    if (!st_.active_demo)
      throw ProtocolError(st_.phase, "no demonstration in progress; reset to a start cell first");
    auto& demo = *st_.active_demo;
    const GridSpec& grid = st_.space->spec();
    const Cell realized = step_noisy(grid, demo.position(), e.action, st_.rng);
    demo.actions.push_back(e.action);
    demo.states.push_back(realized);

    const auto& cfg = st_.config();
    DemoStatus status = DemoStatus::InProgress;
    const int used = static_cast<int>(demo.actions.size());
    if (grid.is_goal(realized)) {
      status = DemoStatus::Completed;
      if (st_.phase == Phase::Demonstrating) {
        st_.demos.push_back(make_demonstration(grid, demo.states, demo.actions));
        ++st_.demos_in_set;
      }
    } else if ((cfg.strict_budget && used >= demo.budget) ||
               used >= cfg.attempt_limit_factor * demo.budget) {
      status = DemoStatus::Discarded;
      if (st_.phase == Phase::Demonstrating) ++st_.discarded_attempts;
    }
    if (status != DemoStatus::InProgress) st_.active_demo.reset();
    st_.last_step = DemoStepOutcome{realized, status};
  }

  void operator()(const SetComplete&) {
    if (st_.phase != Phase::Demonstrating)
      throw ProtocolError(st_.phase, "set_complete is only legal while demonstrating");
    const auto& cfg = st_.config();
    if (st_.demos_in_set < cfg.demos_per_set)
      throw ProtocolError(st_.phase, "set needs " + std::to_string(cfg.demos_per_set) +
                                         " valid demonstrations, have " +
                                         std::to_string(st_.demos_in_set));
    const auto& setup = *st_.setup;
    st_.artifacts = std::make_shared<const LearnedArtifacts>(
        learn(st_.demos, *st_.space, setup.irl, setup.planner));
    st_.performance_history.push_back(st_.artifacts->performance);
    ++st_.demo_sets_completed;
    st_.demos_in_set = 0;
    st_.active_demo.reset();
    st_.last_step.reset();

    st_.task_complete = st_.artifacts->performance > cfg.performance_threshold;
    const bool terminal = st_.task_complete || st_.demo_sets_completed >= cfg.max_demo_sets;
    const bool first = st_.demo_sets_completed == 1;
    auto& agenda = st_.agenda;
    agenda.clear();
    if (cfg.condition == Condition::EF)
      agenda.push_back({Phase::Explaining, Stage::Initial, ExplanationContext::AfterSet});
    if (first) {
      agenda.push_back({Phase::ActionPredicting, Stage::Initial});
      agenda.push_back({Phase::GoalPredicting, Stage::Initial});
    }
    if (terminal) {
      agenda.push_back({Phase::ActionPredicting, Stage::Final});
      agenda.push_back({Phase::GoalPredicting, Stage::Final});
      agenda.push_back({Phase::Survey});
      if (cfg.condition == Condition::NF)
        agenda.push_back({Phase::Explaining, Stage::Final, ExplanationContext::Final});
      agenda.push_back({Phase::Done});
    } else {
      agenda.push_back({Phase::Demonstrating});
    }
    next_phase();
  }

  void operator()(const ExplanationAck&) {
    if (st_.phase != Phase::Explaining && st_.phase != Phase::Practice)
      throw ProtocolError(st_.phase, "explanation_ack is only legal while viewing explanations");
    st_.explanation.reset();
    st_.active_demo.reset();
    st_.last_step.reset();
    next_phase();
  }

  void operator()(const PredictionSubmitted& e) {
    if (st_.phase != Phase::ActionPredicting && st_.phase != Phase::GoalPredicting)
      throw ProtocolError(st_.phase, "prediction_submitted is only legal in prediction sub-tasks");
    auto& probes = *st_.probes;
    if (e.probe_index < 0 || e.probe_index >= static_cast<int>(probes.probes.size()))
      throw InvalidEventError("probe index out of range");
    const auto idx = static_cast<std::size_t>(e.probe_index);
    if (probes.answered[idx]) throw ProtocolError(st_.phase, "probe already answered");
    if (e.certainty < 1 || e.certainty > 7) throw InvalidEventError("certainty must lie in 1..7");
    if (!std::isfinite(e.elapsed) || e.elapsed < 0.0)
      throw InvalidEventError("elapsed must be a non-negative number of seconds");

    const Cell probe = probes.probes[idx];
    const auto& learned = *st_.artifacts;
    Grade grade;
    if (probes.kind == PredictionKind::Action) {
      const auto* a = std::get_if<Action>(&e.predicted);
      if (!a) throw InvalidEventError("action prediction needs an action");
      grade = grade_action_prediction(learned.policy, *st_.space, probe, *a);
    } else {
      const auto* g = std::get_if<GoalLabel>(&e.predicted);
      if (!g) throw InvalidEventError("goal prediction needs a goal label");
      grade = grade_goal_prediction(learned.policy, *st_.space, learned.terminals, probe, *g);
    }
    st_.predictions.push_back(PredictionRecord{probes.kind, probe, e.predicted, grade.actual,
                                               grade.correct, e.certainty, e.elapsed, probes.stage});
    probes.answered[idx] = 1;
    if (probes.complete()) next_phase();
  }

  void operator()(const SurveySubmitted& e) {
    if (st_.phase != Phase::Survey)
      throw ProtocolError(st_.phase, "survey_submitted is only legal in the survey");
    e.response.validate();
    st_.survey = e.response;
    next_phase();
  }

 private:
  void require_demo_phase(const char* what) const {
    if (st_.phase != Phase::Demonstrating && st_.phase != Phase::Practice)
      throw ProtocolError(st_.phase, std::string(what) + " is only legal while demonstrating");
  }

  void next_phase() {
    if (st_.agenda.empty()) {
      st_.phase = Phase::Done;
      return;
    }
    const AgendaItem item = st_.agenda.front();
    st_.agenda.pop_front();
    st_.phase = item.phase;
    st_.probes.reset();
    switch (item.phase) {
      case Phase::Explaining: {
        st_.explanation_context = item.context;
        const auto& population = st_.artifacts->population;
        const int k = std::min<int>(st_.config().k_explanations, static_cast<int>(population.size()));
        st_.explanation = sample_explanations(population, k, st_.rng);
        st_.explanations_shown.push_back(*st_.explanation);
        break;
      }
      case Phase::ActionPredicting:
      case Phase::GoalPredicting: {
        ProbeSet set;
        set.kind = item.phase == Phase::ActionPredicting ? PredictionKind::Action : PredictionKind::Goal;
        set.stage = item.stage;
        auto pool = probe_candidates(*st_.space);
        const auto count =
            std::min(pool.size(), static_cast<std::size_t>(st_.config().predictions_per_subtask));
        for (std::size_t i = 0; i < count; ++i) {
          const auto j = i + st_.rng.below(pool.size() - i);
          std::swap(pool[i], pool[j]);
          set.probes.push_back(pool[i]);
        }
        set.answered.assign(set.probes.size(), 0);
        st_.probes = std::move(set);
        break;
      }
      default:
        break;
    }
  }

  SessionState& st_;
};

}  // namespace

SessionState create_session(const SessionSetup& setup) {
  setup.grid.validate();
  setup.session.validate();
  setup.irl.validate();
  setup.planner.validate();
  SessionState st;
  st.setup = std::make_shared<const SessionSetup>(setup);
  st.space = std::make_shared<const StateSpace>(setup.grid);
  st.rng = Rng(setup.session.seed);
  st.phase = Phase::Practice;
  st.practice = std::make_shared<const LearnedArtifacts>(
      practice_artifacts(*st.space, setup.irl, setup.planner));
  st.explanation_context = ExplanationContext::Practice;
  const int k = std::min<int>(setup.session.k_explanations,
                              static_cast<int>(st.practice->population.size()));
  st.explanation = sample_explanations(st.practice->population, k, st.rng);
  st.agenda.push_back({Phase::Demonstrating});
  return st;
}

SessionState advance(const SessionState& state, const Event& event) {
  if (state.phase == Phase::Done) throw ProtocolError(state.phase, "session is finished");
  SessionState next = state;
  std::visit(Machine(next), event);
  return next;
}

}  // namespace lfdx
