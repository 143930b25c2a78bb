#include "esp/group.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace esp {

namespace {

constexpr double kMatchTol = 1e-9;

/// Quarter-turn multiples get exact matrix entries; everything else uses
/// cos/sin directly.
Mat2 exact_rotation(int i, int n) {
  if ((4LL * i) % n == 0) {
    int q = static_cast<int>((4LL * i / n) % 4);
    switch (q) {
      case 0: return {1, 0, 0, 1};
      case 1: return {0, -1, 1, 0};
      case 2: return {-1, 0, 0, -1};
      default: return {0, 1, -1, 0};
    }
  }
  double theta = 2.0 * M_PI * i / n;
  return rotation_matrix(theta);
}

/// Reflection about the line through the origin at angle `axis`.
Mat2 reflection_matrix(double axis) {
  if (axis == 0.0) return {1, 0, 0, -1};  // flip-x exact
  double c = std::cos(2.0 * axis), s = std::sin(2.0 * axis);
  // Exact entries for axes at multiples of 45 degrees.
  auto snap = [](double v) {
    for (double t : {-1.0, 0.0, 1.0})
      if (std::fabs(v - t) < 1e-12) return t;
    return v;
  };
  return {snap(c), snap(s), snap(s), snap(-c)};
}

int angle_degrees(double angle) {
  return static_cast<int>(std::lround(angle * 180.0 / M_PI)) % 360;
}

std::string rotation_name(double angle) {
  int deg = angle_degrees(angle);
  return deg == 0 ? "e" : "r" + std::to_string(deg);
}

}  // namespace

Mat2 rotation_matrix(double theta) {
  if (!std::isfinite(theta))
    throw std::invalid_argument("rotation_matrix: non-finite angle");
  double c = std::cos(theta), s = std::sin(theta);
  return {c, -s, s, c};
}

Group::Group(std::string name, std::vector<GroupElement> elements)
    : name_(std::move(name)), elements_(std::move(elements)) {
  int n = static_cast<int>(elements_.size());
  if (n == 0) throw std::invalid_argument("Group: no elements");
  for (int i = 0; i < n; ++i) {
    elements_[i].id = i;
    if (elements_[i].is_identity()) identity_id_ = i;
  }
  if (identity_id_ < 0) throw std::invalid_argument("Group: missing identity");

  // Build the Cayley table by matching matrix products to elements.
  cayley_.assign(n, std::vector<int>(n, -1));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Mat2 prod = elements_[i].rep * elements_[j].rep;
      for (int k = 0; k < n; ++k) {
        if (prod.max_abs_diff(elements_[k].rep) < kMatchTol) {
          cayley_[i][j] = k;
          break;
        }
      }
      if (cayley_[i][j] < 0)
        throw std::invalid_argument(
            "Group: composition " + elements_[i].name + "*" +
            elements_[j].name + " has no matching element (not closed)");
    }
  }
}

const GroupElement& Group::element(int id) const {
  if (id < 0 || id >= order())
    throw std::invalid_argument("Group::element: bad id");
  return elements_[id];
}

const GroupElement& Group::element_by_name(const std::string& name) const {
  std::string key = (name == "flipx") ? "fx" : name;
  for (const GroupElement& e : elements_)
    if (e.name == key) return e;
  throw std::invalid_argument("Group '" + name_ + "' has no element '" + name +
                              "'");
}

const GroupElement& Group::compose(const GroupElement& g1,
                                   const GroupElement& g2) const {
  if (g1.id < 0 || g1.id >= order() || g2.id < 0 || g2.id >= order())
    throw std::invalid_argument("compose: element id out of range");
  // Guard against elements from a different group sneaking in by id.
  if (elements_[g1.id].rep.max_abs_diff(g1.rep) > kMatchTol ||
      elements_[g2.id].rep.max_abs_diff(g2.rep) > kMatchTol)
    throw std::invalid_argument("compose: element does not belong to group " +
                                name_);
  return elements_[cayley_[g1.id][g2.id]];
}

const GroupElement& Group::inverse(const GroupElement& g) const {
  if (g.id < 0 || g.id >= order())
    throw std::invalid_argument("inverse: element id out of range");
  if (elements_[g.id].rep.max_abs_diff(g.rep) > kMatchTol)
    throw std::invalid_argument("inverse: element does not belong to group " +
                                name_);
  for (int k = 0; k < order(); ++k)
    if (cayley_[g.id][k] == identity_id_) return elements_[k];
  throw std::logic_error("inverse: no inverse found (table corrupt)");
}

int Group::cayley(int i, int j) const { return cayley_[i][j]; }

Group cyclic_group(int n) {
  if (n < 1) throw std::invalid_argument("cyclic_group: n must be >= 1");
  std::vector<GroupElement> elems(n);
  for (int i = 0; i < n; ++i) {
    GroupElement& e = elems[i];
    e.angle = 2.0 * M_PI * i / n;
    e.rep = exact_rotation(i, n);
    e.kind = (i == 0) ? GroupElement::Kind::identity
                      : GroupElement::Kind::rotation;
    e.name = rotation_name(e.angle);
  }
  return Group("c" + std::to_string(n), std::move(elems));
}

Group dihedral_extension(const Group& cyclic) {
  for (const GroupElement& e : cyclic.elements())
    if (e.kind == GroupElement::Kind::reflection)
      throw std::invalid_argument(
          "dihedral_extension: input must be a cyclic rotation group");
  AxiomReport ax = check_group_axioms(cyclic);
  if (!ax.pass())
    throw std::invalid_argument("dihedral_extension: input fails group axioms: " +
                                ax.counterexample);

  int n = cyclic.order();
  std::vector<GroupElement> elems(cyclic.elements());
  Mat2 flip = reflection_matrix(0.0);
  for (int i = 0; i < n; ++i) {
    GroupElement e;
    e.kind = GroupElement::Kind::reflection;
    // r^i composed with flip-x reflects about the axis at angle theta_i / 2.
    e.angle = elems[i].angle / 2.0;
    e.rep = elems[i].rep * flip;
    int deg = angle_degrees(elems[i].angle);
    e.name = (deg == 0) ? "fx" : "r" + std::to_string(deg) + "fx";
    elems.push_back(e);
  }
  return Group("d" + std::to_string(n), std::move(elems));
}

Group make_group(const std::string& spec) {
  if (spec.size() < 2 || (spec[0] != 'c' && spec[0] != 'd'))
    throw std::invalid_argument("make_group: expected cN or dN, got '" + spec +
                                "'");
  int n = 0;
  try {
    n = std::stoi(spec.substr(1));
  } catch (const std::exception&) {
    throw std::invalid_argument("make_group: bad group spec '" + spec + "'");
  }
  Group c = cyclic_group(n);
  return spec[0] == 'c' ? c : dihedral_extension(c);
}

AxiomReport check_axioms_on_table(const std::vector<std::vector<int>>& cayley,
                                  int identity_id) {
  AxiomReport r;
  int n = static_cast<int>(cayley.size());
  std::ostringstream why;

  r.closure = true;
  for (int i = 0; i < n && r.closure; ++i)
    for (int j = 0; j < n; ++j)
      if (cayley[i][j] < 0 || cayley[i][j] >= n) {
        r.closure = false;
        why << "closure: (" << i << "," << j << ") -> " << cayley[i][j];
        break;
      }
  if (!r.closure) {
    r.counterexample = why.str();
    return r;
  }

  r.identity = true;
  for (int g = 0; g < n; ++g)
    if (cayley[identity_id][g] != g || cayley[g][identity_id] != g) {
      r.identity = false;
      why << "identity fails at g=" << g << "; ";
      break;
    }

  r.inverse = true;
  for (int g = 0; g < n; ++g) {
    int hits = 0;
    for (int h = 0; h < n; ++h)
      if (cayley[g][h] == identity_id) ++hits;
    if (hits != 1) {
      r.inverse = false;
      why << "inverse: row " << g << " reaches identity " << hits
          << " times; ";
      break;
    }
  }

  r.associativity = true;
  for (int a = 0; a < n && r.associativity; ++a)
    for (int b = 0; b < n && r.associativity; ++b)
      for (int c = 0; c < n; ++c)
        if (cayley[cayley[a][b]][c] != cayley[a][cayley[b][c]]) {
          r.associativity = false;
          why << "associativity fails at (" << a << "," << b << "," << c
              << ")";
          break;
        }

  r.counterexample = why.str();
  return r;
}

AxiomReport check_group_axioms(const Group& g) {
  std::vector<std::vector<int>> table(g.order(), std::vector<int>(g.order()));
  for (int i = 0; i < g.order(); ++i)
    for (int j = 0; j < g.order(); ++j) table[i][j] = g.cayley(i, j);
  return check_axioms_on_table(table, g.identity_id());
}

std::string AxiomReport::to_text() const {
  std::ostringstream os;
  os << "closure=" << (closure ? "pass" : "FAIL")
     << " identity=" << (identity ? "pass" : "FAIL")
     << " inverse=" << (inverse ? "pass" : "FAIL")
     << " associativity=" << (associativity ? "pass" : "FAIL");
  if (!counterexample.empty()) os << " [" << counterexample << "]";
  return os.str();
}

}  // namespace esp
