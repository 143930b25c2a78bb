#pragma once

#include <string>
#include <vector>

#include "esp/geometry.hpp"

namespace esp {

/// One element of a finite planar symmetry group. `rep` is the 2x2 linear
/// representation acting on geometric quantities. Elements whose angle is a
/// multiple of 90 degrees carry exact {0, +-1} matrix entries, so C4/D4
/// transforms are free of rounding.
struct GroupElement {
  enum class Kind { identity, rotation, reflection };

  int id = 0;
  Kind kind = Kind::identity;
  /// Rotation angle, or the axis angle for a reflection (0 = x-axis).
  double angle = 0.0;
  Mat2 rep = Mat2::identity();
  std::string name = "e";

  bool is_identity() const { return kind == Kind::identity; }
};

/// Rotation matrix [[cos t, -sin t], [sin t, cos t]].
/// Throws std::invalid_argument for non-finite angles.
Mat2 rotation_matrix(double theta);

struct AxiomReport {
  bool closure = false;
  bool identity = false;
  bool inverse = false;
  bool associativity = false;
  std::string counterexample;  // empty when all pass

  bool pass() const { return closure && identity && inverse && associativity; }
  std::string to_text() const;
};

/// Finite group with an explicit composition table. The table is built by
/// matching matrix products against element representations, so it is
/// consistent with the linear representation by construction.
class Group {
 public:
  Group(std::string name, std::vector<GroupElement> elements);

  const std::string& name() const { return name_; }
  int order() const { return static_cast<int>(elements_.size()); }
  const GroupElement& element(int id) const;
  const std::vector<GroupElement>& elements() const { return elements_; }
  int identity_id() const { return identity_id_; }

  /// Element lookup by name ("e", "r90", "flipx", ...). "flipx" and "fx"
  /// are synonyms. Throws on unknown names.
  const GroupElement& element_by_name(const std::string& name) const;

  const GroupElement& compose(const GroupElement& g1,
                              const GroupElement& g2) const;
  const GroupElement& inverse(const GroupElement& g) const;
  int cayley(int i, int j) const;

  bool operator==(const Group& o) const { return this == &o; }

 private:
  std::string name_;
  std::vector<GroupElement> elements_;
  std::vector<std::vector<int>> cayley_;
  int identity_id_ = -1;
};

/// C_n: rotations by 2*pi*i/n, i = 0..n-1. Throws for n < 1.
Group cyclic_group(int n);

/// D_n: the cyclic group extended with the x-axis reflection composed with
/// each rotation (order 2n). The input must be a cyclic rotation group.
Group dihedral_extension(const Group& cyclic);

/// Parses "c4", "d4", "c8", ... into the corresponding group.
Group make_group(const std::string& spec);

/// Checks the four group axioms exhaustively on the composition table.
AxiomReport check_group_axioms(const Group& g);

/// Test hook: validates an arbitrary table against the axioms (used for
/// deliberately corrupted fixtures).
AxiomReport check_axioms_on_table(const std::vector<std::vector<int>>& cayley,
                                  int identity_id);

}  // namespace esp
