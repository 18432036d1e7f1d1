#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lfdx/rng.hpp"

namespace lfdx {

struct Cell {
  int row = 0;
  int col = 0;

  auto operator<=>(const Cell&) const = default;
};

std::string to_string(Cell c);

/// Grid actions. The enumerator order is the canonical tie-break order.
enum class Action : int { Up = 0, Down = 1, Left = 2, Right = 3 };

inline constexpr std::array<Action, 4> kActions = {Action::Up, Action::Down, Action::Left,
                                                   Action::Right};
inline constexpr std::size_t kNumActions = kActions.size();

std::string_view to_string(Action a);
Action parse_action(std::string_view name);

/// Perpendicular actions relative to the heading of `a`.
Action turn_left(Action a);
Action turn_right(Action a);

/// Raised when an operation is called with a cell or configuration that
/// violates its precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GridSpec {
  int width = 8;
  int height = 8;
  std::set<Cell> obstacles;
  Cell preferred_goal{3, 6};
  /// Absent only in single-goal fixtures; study layouts always carry both.
  std::optional<Cell> non_preferred_goal = Cell{4, 1};
  double noise_prob = 0.2;

  bool in_bounds(Cell c) const {
    return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width;
  }
  bool is_free(Cell c) const { return in_bounds(c) && !obstacles.contains(c); }
  bool is_goal(Cell c) const { return c == preferred_goal || c == non_preferred_goal; }
  std::vector<Cell> goals() const;

  /// Throws PreconditionError when any invariant is broken.
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

/// The 8x8 obstacle-free study layout used as the default fixture.
GridSpec default_study_grid();

/// Neighbouring cell in direction `a`; bump-and-stay at walls and obstacles.
Cell apply_action(const GridSpec& spec, Cell s, Action a);

/// Which of the three noisy outcomes a uniform draw `u` in [0,1) selects.
Action resolve_noisy_action(Action intended, double noise_prob, double u);

/// One noisy transition: the intended action with probability 1 - noise_prob,
/// otherwise one of the two perpendicular actions with equal probability.
Cell step_noisy(const GridSpec& spec, Cell s, Action a, Rng& rng);

/// Row-major list of in-bounds, non-obstacle cells.
std::vector<Cell> enumerate_free_states(const GridSpec& spec);

/// Dense indexing of the free states plus the noise-free transition table.
///
/// `model_next` is the planning model: identical to apply_action except that
/// goal cells are absorbing (every action stays put).
class StateSpace {
 public:
  explicit StateSpace(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  std::size_t size() const { return cells_.size(); }
  const std::vector<Cell>& cells() const { return cells_; }
  Cell cell(std::size_t i) const { return cells_.at(i); }

  std::optional<std::size_t> find(Cell c) const;
  /// Index of `c`; throws PreconditionError if `c` is not a free state.
  std::size_t index(Cell c) const;

  std::size_t next(std::size_t s, Action a) const {
    return raw_next_[s * kNumActions + static_cast<std::size_t>(a)];
  }
  std::size_t model_next(std::size_t s, Action a) const {
    return is_goal_[s] ? s : next(s, a);
  }
  bool is_goal(std::size_t s) const { return is_goal_[s] != 0; }

  /// Shortest noise-free path lengths to `target` (-1 when unreachable).
  /// Cells in `blocked` are never entered as intermediate steps.
  std::vector<int> distances_to(Cell target, const std::set<Cell>& blocked = {}) const;

  /// First action in canonical order that moves one step closer according to
  /// `dist` (as returned by distances_to). Empty at the target or when `s`
  /// cannot reach it.
  std::optional<Action> descend(std::size_t s, const std::vector<int>& dist) const;

 private:
  GridSpec spec_;
  std::vector<Cell> cells_;
  std::vector<int> lookup_;
  std::vector<std::size_t> raw_next_;
  std::vector<char> is_goal_;
};

}  // namespace lfdx
