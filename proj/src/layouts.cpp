#include "esp/layouts.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace esp {

ActionLayout ActionLayout::discrete_moves(std::vector<Vec2> displacements) {
  ActionLayout l;
  l.discrete = true;
  l.n_actions = static_cast<int>(displacements.size());
  l.displacements = std::move(displacements);
  return l;
}

ActionLayout ActionLayout::continuous2d() {
  ActionLayout l;
  l.discrete = false;
  return l;
}

ActionLayout attach_group(const ActionLayout& layout, const Group& group) {
  ActionLayout out = layout;
  if (!layout.discrete) return out;  // continuous actions rotate directly
  out.perms.assign(group.order(), {});
  for (const GroupElement& g : group.elements()) {
    std::vector<int> perm(layout.n_actions, -1);
    for (int a = 0; a < layout.n_actions; ++a) {
      Vec2 d = g.rep * layout.displacements[a];
      int match = -1;
      for (int b = 0; b < layout.n_actions; ++b) {
        if (std::fabs(d.x - layout.displacements[b].x) < 1e-9 &&
            std::fabs(d.y - layout.displacements[b].y) < 1e-9) {
          match = b;
          break;
        }
      }
      if (match < 0)
        throw std::invalid_argument(
            "attach_group: element " + g.name +
            " does not map action " + std::to_string(a) +
            " onto another action's displacement");
      perm[a] = match;
    }
    // The derived map must be a bijection.
    std::vector<bool> seen(layout.n_actions, false);
    for (int b : perm) {
      if (seen[b])
        throw std::invalid_argument("attach_group: element " + g.name +
                                    " induces a non-bijective action map");
      seen[b] = true;
    }
    out.perms[g.id] = std::move(perm);
  }
  return out;
}

void apply_state_transform_inplace(const GroupElement& g,
                                   std::span<const double> state,
                                   const ObservationLayout& layout,
                                   std::span<double> out) {
  if (static_cast<int>(state.size()) != layout.total_len())
    throw std::invalid_argument(
        "apply_state_transform: state length " + std::to_string(state.size()) +
        " does not match layout length " + std::to_string(layout.total_len()));
  if (out.size() != state.size())
    throw std::invalid_argument("apply_state_transform: bad output span");
  size_t k = 0;
  for (const ObservationLayout::Slice& s : layout.slices) {
    if (s.geometric) {
      double x = state[k], y = state[k + 1];
      out[k] = g.rep.a * x + g.rep.b * y;
      out[k + 1] = g.rep.c * x + g.rep.d * y;
      k += 2;
    } else {
      for (int i = 0; i < s.len; ++i, ++k) out[k] = state[k];
    }
  }
}

std::vector<double> apply_state_transform(const GroupElement& g,
                                          std::span<const double> state,
                                          const ObservationLayout& layout) {
  std::vector<double> out(state.size());
  apply_state_transform_inplace(g, state, layout, out);
  return out;
}

Action apply_action_transform(const GroupElement& g, const Action& action,
                              const ActionLayout& layout) {
  if (layout.discrete) {
    int a = std::get<int>(action);
    if (a < 0 || a >= layout.n_actions)
      throw std::invalid_argument("apply_action_transform: action index " +
                                  std::to_string(a) + " out of range");
    if (!layout.has_perms())
      throw std::invalid_argument(
          "apply_action_transform: layout has no attached group permutations");
    return Action{layout.perms.at(g.id)[a]};
  }
  Vec2 v = std::get<Vec2>(action);
  return Action{g.rep * v};
}

std::vector<double> permute_action_vector(const GroupElement& g,
                                          std::span<const double> values,
                                          const ActionLayout& layout) {
  if (!layout.discrete || !layout.has_perms())
    throw std::invalid_argument(
        "permute_action_vector: discrete layout with permutations required");
  if (static_cast<int>(values.size()) != layout.n_actions)
    throw std::invalid_argument("permute_action_vector: length mismatch");
  const std::vector<int>& perm = layout.perms.at(g.id);
  std::vector<double> out(values.size());
  for (int a = 0; a < layout.n_actions; ++a) out[perm[a]] = values[a];
  return out;
}

}  // namespace esp
