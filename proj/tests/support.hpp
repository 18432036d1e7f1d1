#pragma once

#include <optional>
#include <vector>

#include "lfdx/demonstration.hpp"
#include "lfdx/gridworld.hpp"
#include "lfdx/irl.hpp"
#include "lfdx/rng.hpp"

namespace fixtures {

using namespace lfdx;

inline GridSpec grid(int width, int height, Cell preferred, std::optional<Cell> other = std::nullopt,
                     double noise = 0.0) {
  GridSpec g;
  g.width = width;
  g.height = height;
  g.preferred_goal = preferred;
  g.non_preferred_goal = other;
  g.noise_prob = noise;
  return g;
}

// 1x3 corridor with the goal at the right end.
inline GridSpec chain3() { return grid(3, 1, {0, 2}); }

inline Action move_between(Cell a, Cell b) {
  if (b.row < a.row) return Action::Up;
  if (b.row > a.row) return Action::Down;
  if (b.col < a.col) return Action::Left;
  return Action::Right;
}

// Noise-free demonstration along `cells`; the actions are read off the moves.
inline Demonstration path_demo(const GridSpec& g, std::vector<Cell> cells) {
  std::vector<Action> actions;
  for (std::size_t i = 1; i < cells.size(); ++i) actions.push_back(move_between(cells[i - 1], cells[i]));
  return make_demonstration(g, std::move(cells), std::move(actions));
}

// 4x4 world with goals at (0,3) and (3,0).
inline GridSpec four_by_four(double noise = 0.2) { return grid(4, 4, {0, 3}, Cell{3, 0}, noise); }

// Noisy shortest-path demonstrations; every third one heads for the
// non-preferred goal.
inline std::vector<Demonstration> synthetic_demos(const StateSpace& sp, int n, std::uint64_t seed) {
  const GridSpec& g = sp.spec();
  Rng rng(seed);
  std::vector<Demonstration> demos;
  for (int i = 0; i < n; ++i) {
    Cell s;
    do s = sp.cell(rng.below(sp.size()));
    while (g.is_goal(s));
    const Cell target = (i % 3 == 0 && g.non_preferred_goal) ? *g.non_preferred_goal : g.preferred_goal;
    const auto dist = sp.distances_to(target);
    std::vector<Cell> states{s};
    std::vector<Action> actions;
    while (!g.is_goal(s) && states.size() < 40) {
      const Action a = *sp.descend(sp.index(s), dist);
      s = step_noisy(g, s, a, rng);
      states.push_back(s);
      actions.push_back(a);
    }
    demos.push_back(make_demonstration(g, states, actions));
  }
  return demos;
}

inline RewardParams random_reward(const StateSpace& sp, Rng& rng, double scale = 1.0) {
  RewardParams r;
  for (std::size_t i = 0; i < sp.size(); ++i) r.theta.push_back(scale * (2.0 * rng.uniform01() - 1.0));
  return r;
}

}  // namespace fixtures

#include "lfdx/event_log.hpp"
#include "lfdx/simteacher.hpp"

namespace fixtures {

// Plays a simulated session and writes it to `log` the way the server does.
inline lfdx::SessionRun record_session(const lfdx::SessionSetup& setup, lfdx::TeacherStrategy strategy,
                                       lfdx::EventLog& log, const std::string& id = "s-test") {
  using namespace lfdx;
  std::uint64_t seq = 1;
  log.append(LogRecord{id, seq, 0.0, "session_created", creation_payload(setup, "tok", create_session(setup))});
  return run_session(setup, strategy, [&](const SessionState& before, const Event& e, const SessionState& after) {
    ++seq;
    json payload{{"event", event_json(e)}, {"observation", observe(before, e, after)}};
    log.append(LogRecord{id, seq, static_cast<double>(seq), std::string(event_name(e)), payload});
  });
}

inline std::string joined(const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  return text;
}

}  // namespace fixtures
