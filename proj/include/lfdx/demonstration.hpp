#pragma once

#include <set>
#include <vector>

#include "lfdx/gridworld.hpp"

namespace lfdx {

/// A teacher demonstration. `actions[i]` is the action the teacher issued in
/// `states[i]`; under noise the realised `states[i + 1]` may be a
/// perpendicular neighbour.
struct Demonstration {
  std::vector<Cell> states;
  std::vector<Action> actions;
  bool valid = false;

  Cell start() const { return states.front(); }
  Cell final_state() const { return states.back(); }

  bool operator==(const Demonstration&) const = default;
};

/// Builds a demonstration and sets `valid` (final state is a goal cell).
/// Throws PreconditionError on malformed sequences: empty, mismatched action
/// count, cells that are not free, or consecutive cells more than one move
/// apart.
Demonstration make_demonstration(const GridSpec& spec, std::vector<Cell> states,
                                 std::vector<Action> actions);

/// The set of terminating states of valid user demonstrations.
struct TerminalSet {
  std::set<Cell> cells;

  bool contains(Cell c) const { return cells.contains(c); }
  bool empty() const { return cells.empty(); }
  bool operator==(const TerminalSet&) const = default;
};

/// Final states of all valid demonstrations. Throws std::invalid_argument when
/// none of `demos` is valid.
TerminalSet terminal_set(const std::vector<Demonstration>& demos);

}  // namespace lfdx
