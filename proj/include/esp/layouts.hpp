#pragma once

#include <span>
#include <variant>
#include <vector>

#include "esp/geometry.hpp"
#include "esp/group.hpp"

namespace esp {

/// An action is either a discrete index or a continuous 2D vector; the
/// environment's ActionLayout decides which alternative is meaningful.
using Action = std::variant<int, Vec2>;

/// Declarative description of a state/observation vector: an ordered list of
/// slices, each either a geometric 2D vector (rotates with the group) or an
/// invariant block (copied unchanged).
struct ObservationLayout {
  struct Slice {
    bool geometric = true;
    int len = 2;  // 2 for geometric slices
  };
  std::vector<Slice> slices;

  static ObservationLayout geometric2d(int n_slices) {
    ObservationLayout l;
    l.slices.assign(n_slices, Slice{true, 2});
    return l;
  }

  ObservationLayout& add_geometric() {
    slices.push_back({true, 2});
    return *this;
  }
  ObservationLayout& add_invariant(int len) {
    slices.push_back({false, len});
    return *this;
  }

  int total_len() const {
    int n = 0;
    for (const Slice& s : slices) n += s.len;
    return n;
  }
};

/// Discrete action space with canonical unit displacements per action, or a
/// continuous 2D action space. For discrete spaces, per-group-element
/// permutations are derived from the displacements via attach_group.
struct ActionLayout {
  bool discrete = true;
  int n_actions = 0;                     // discrete only
  std::vector<Vec2> displacements;       // discrete only, one per action
  std::vector<std::vector<int>> perms;   // [element id][action] -> action

  static ActionLayout discrete_moves(std::vector<Vec2> displacements);
  static ActionLayout continuous2d();

  bool has_perms() const { return !perms.empty(); }
};

/// Derives the action permutation for every group element by rotating each
/// action's displacement and matching it exactly (1e-9) to another action's
/// displacement. Throws if some element does not permute the action set.
ActionLayout attach_group(const ActionLayout& layout, const Group& group);

/// L_g: multiply every geometric slice by g.rep, copy invariant slices.
std::vector<double> apply_state_transform(const GroupElement& g,
                                          std::span<const double> state,
                                          const ObservationLayout& layout);
void apply_state_transform_inplace(const GroupElement& g,
                                   std::span<const double> state,
                                   const ObservationLayout& layout,
                                   std::span<double> out);

/// K_g: permute a discrete action index, or rotate a continuous action.
/// For discrete layouts the permutations must have been attached.
Action apply_action_transform(const GroupElement& g, const Action& action,
                              const ActionLayout& layout);

/// Applies the same permutation to a logit/one-hot vector: the returned
/// vector assigns to action K_g[a] the input's value at a.
std::vector<double> permute_action_vector(const GroupElement& g,
                                          std::span<const double> values,
                                          const ActionLayout& layout);

/// The pair h = (L_g, K_g) bound to concrete layouts.
struct TransformPair {
  const GroupElement* element;
  const ObservationLayout* obs_layout;
  const ActionLayout* act_layout;

  std::vector<double> state(std::span<const double> s) const {
    return apply_state_transform(*element, s, *obs_layout);
  }
  Action action(const Action& a) const {
    return apply_action_transform(*element, a, *act_layout);
  }
};

}  // namespace esp
