#include "lfdx/demonstration.hpp"

#include <cstdlib>

namespace lfdx {

Demonstration make_demonstration(const GridSpec& spec, std::vector<Cell> states,
                                 std::vector<Action> actions) {
  if (states.empty()) throw PreconditionError("demonstration has no states");
  if (actions.size() + 1 != states.size())
    throw PreconditionError("demonstration needs exactly one action per transition");
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!spec.is_free(states[i]))
      throw PreconditionError("demonstration visits invalid cell " + to_string(states[i]));
    if (i > 0) {
      const int dr = std::abs(states[i].row - states[i - 1].row);
      const int dc = std::abs(states[i].col - states[i - 1].col);
      if (dr + dc > 1)
        throw PreconditionError("demonstration jumps from " + to_string(states[i - 1]) +
                                " to " + to_string(states[i]));
    }
  }
  Demonstration d{std::move(states), std::move(actions), false};
  d.valid = spec.is_goal(d.final_state());
  return d;
}

TerminalSet terminal_set(const std::vector<Demonstration>& demos) {
  TerminalSet tu;
  for (const auto& d : demos) {
    if (d.valid) tu.cells.insert(d.final_state());
  }
  if (tu.empty()) throw std::invalid_argument("terminal_set: no valid demonstrations");
  return tu;
}

}  // namespace lfdx
