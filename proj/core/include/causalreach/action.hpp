#pragma once

#include <functional>
#include <string>
#include <vector>

#include "causalreach/curves.hpp"

namespace causalreach {

using PointMap = std::function<Vec(const Vec&)>;

/// Diffeomorphism of the ambient coordinates with its inverse.
struct Isometry {
  PointMap map;
  PointMap inverse;
  MatrixField jacobian;  // optional; central differences otherwise

  Vec operator()(const Vec& p) const { return map(p); }
  Mat jacobian_at(const Vec& p) const;
};

/// Closed curve a quotient is known to contain, given as controls from a
/// start point in the covering space.
struct DocumentedLoop {
  Vec start;
  ControlSignal controls;
  std::string description;
};

/// Cyclic group generated by one isometry, with a fundamental-domain
/// representative for every orbit.
struct GroupAction {
  std::string name;
  Isometry generator;
  Canonicalizer canonicalize;
  Box fundamental_box;
  /// Covering-space box holding the fundamental box and m copies on each side.
  std::function<Box(int copies)> cover_box;
  std::vector<DocumentedLoop> documented_loops;

  /// generator^n (inverse for n < 0).
  Vec power(const Vec& p, int n) const;
  /// Integer n with power(p, n) == canonicalize(p) to tolerance, searched in [-limit, limit].
  int orbit_offset(const Vec& p, int limit) const;
};

/// Identity action; the fundamental box is the domain itself.
GroupAction trivial_action(const Box& domain);

}  // namespace causalreach
