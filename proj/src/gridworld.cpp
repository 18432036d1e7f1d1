#include "lfdx/gridworld.hpp"

#include <deque>

namespace lfdx {

std::string to_string(Cell c) {
  return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::Up: return "Up";
    case Action::Down: return "Down";
    case Action::Left: return "Left";
    case Action::Right: return "Right";
  }
  return "?";
}

Action parse_action(std::string_view name) {
  for (Action a : kActions) {
    if (name == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown action: " + std::string(name));
}

Action turn_left(Action a) {
  switch (a) {
    case Action::Up: return Action::Left;
    case Action::Down: return Action::Right;
    case Action::Left: return Action::Down;
    case Action::Right: return Action::Up;
  }
  return a;
}

Action turn_right(Action a) {
  switch (a) {
    case Action::Up: return Action::Right;
    case Action::Down: return Action::Left;
    case Action::Left: return Action::Up;
    case Action::Right: return Action::Down;
  }
  return a;
}

void GridSpec::validate() const {
  if (width <= 0 || height <= 0) throw PreconditionError("grid dimensions must be positive");
  if (!(noise_prob >= 0.0 && noise_prob <= 1.0))
    throw PreconditionError("noise_prob must lie in [0,1]");
  for (const Cell& o : obstacles) {
    if (!in_bounds(o)) throw PreconditionError("obstacle out of bounds: " + to_string(o));
  }
  for (Cell g : goals()) {
    if (!in_bounds(g)) throw PreconditionError("goal out of bounds: " + to_string(g));
    if (obstacles.contains(g)) throw PreconditionError("goal on obstacle: " + to_string(g));
  }
  if (preferred_goal == non_preferred_goal) throw PreconditionError("goals must be distinct");
}

std::vector<Cell> GridSpec::goals() const {
  std::vector<Cell> out{preferred_goal};
  if (non_preferred_goal) out.push_back(*non_preferred_goal);
  return out;
}

GridSpec default_study_grid() { return GridSpec{}; }

Cell apply_action(const GridSpec& spec, Cell s, Action a) {
  if (!spec.is_free(s)) throw PreconditionError("apply_action: invalid state " + to_string(s));
  Cell n = s;
  switch (a) {
    case Action::Up: --n.row; break;
    case Action::Down: ++n.row; break;
    case Action::Left: --n.col; break;
    case Action::Right: ++n.col; break;
  }
  return spec.is_free(n) ? n : s;
}

Action resolve_noisy_action(Action intended, double noise_prob, double u) {
  if (u < 1.0 - noise_prob) return intended;
  if (u < 1.0 - noise_prob / 2.0) return turn_left(intended);
  return turn_right(intended);
}

Cell step_noisy(const GridSpec& spec, Cell s, Action a, Rng& rng) {
  if (!spec.is_free(s)) throw PreconditionError("step_noisy: invalid state " + to_string(s));
  return apply_action(spec, s, resolve_noisy_action(a, spec.noise_prob, rng.uniform01()));
}

std::vector<Cell> enumerate_free_states(const GridSpec& spec) {
  std::vector<Cell> out;
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      if (!spec.obstacles.contains(Cell{r, c})) out.push_back(Cell{r, c});
    }
  }
  return out;
}

StateSpace::StateSpace(const GridSpec& spec) : spec_(spec) {
  spec_.validate();
  cells_ = enumerate_free_states(spec_);
  lookup_.assign(static_cast<std::size_t>(spec_.width) * spec_.height, -1);
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    lookup_[static_cast<std::size_t>(cells_[i].row) * spec_.width + cells_[i].col] =
        static_cast<int>(i);
  }
  raw_next_.resize(cells_.size() * kNumActions);
  is_goal_.resize(cells_.size());
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    is_goal_[i] = spec_.is_goal(cells_[i]) ? 1 : 0;
    for (Action a : kActions) {
      raw_next_[i * kNumActions + static_cast<std::size_t>(a)] =
          index(apply_action(spec_, cells_[i], a));
    }
  }
}

std::optional<std::size_t> StateSpace::find(Cell c) const {
  if (!spec_.in_bounds(c)) return std::nullopt;
  const int i = lookup_[static_cast<std::size_t>(c.row) * spec_.width + c.col];
  if (i < 0) return std::nullopt;
  return static_cast<std::size_t>(i);
}

std::size_t StateSpace::index(Cell c) const {
  auto i = find(c);
  if (!i) throw PreconditionError("not a free state: " + to_string(c));
  return *i;
}

std::vector<int> StateSpace::distances_to(Cell target, const std::set<Cell>& blocked) const {
  std::vector<int> dist(size(), -1);
  const std::size_t t = index(target);
  dist[t] = 0;
  std::deque<std::size_t> queue{t};
  // Moves are reversible on a grid (bump-and-stay aside), so a breadth-first
  // search outward from the target over neighbours yields path lengths to it.
  while (!queue.empty()) {
    const std::size_t s = queue.front();
    queue.pop_front();
    for (Action a : kActions) {
      const std::size_t n = next(s, a);
      if (dist[n] < 0 && !blocked.contains(cells_[n])) {
        dist[n] = dist[s] + 1;
        queue.push_back(n);
      }
    }
  }
  return dist;
}

std::optional<Action> StateSpace::descend(std::size_t s, const std::vector<int>& dist) const {
  if (dist[s] <= 0) return std::nullopt;
  for (Action a : kActions) {
    const std::size_t n = next(s, a);
    if (dist[n] >= 0 && dist[n] == dist[s] - 1) return a;
  }
  return std::nullopt;
}

}  // namespace lfdx
