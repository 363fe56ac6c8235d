#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "causalreach/action.hpp"
#include "causalreach/geometry.hpp"

namespace causalreach {

using PairPredicate = std::function<bool(const Vec& p, const Vec& q)>;
using PairFunction = std::function<double(const Vec& p, const Vec& q)>;
/// Family of neighbourhoods of p indexed by a radius.
using NeighbourhoodFamily = std::function<PointPredicate(const Vec& p, double radius)>;

/// Per-entry scales used when building finite set families.
struct TopologyDefaults {
  /// Anchors of generated sets are drawn from this box.
  Box probe_box;
  /// Alexandrov intervals around x run from flow(x, -eps) to flow(x, +eps).
  double interval_eps = 0.5;
  /// Half-width of the coarse manifold-topology boxes.
  double tau_radius = 0.75;
  double horizon = 1.2;
  std::uint64_t samples = 4000;
  int resolution = 64;
  /// Relay sampling rounds for the family grids (see ReachConfig).
  int relay_rounds = 0;
  /// Alexandrov families use the closed-form relation by default.
  bool closed_form_families = false;
};

struct ExpectedVerdicts {
  std::string chronological;
  std::string strongly_causal;
  std::string chronologically_open;
  std::string topology;
};

struct RegistryEntry {
  std::string name;
  std::string description;
  std::string provenance;
  SubSpaceTime structure;
  std::optional<GroupAction> action;
  /// Closed-form relations, e.g. "chronological_future": q in I+(p).
  std::map<std::string, PairPredicate> predicates;
  /// Closed-form values, e.g. "time_separation" or "cone_function".
  std::map<std::string, PairFunction> functions;
  ExpectedVerdicts expected;
  TopologyDefaults topology;
  /// Causally convex neighbourhoods used by the strong-causality probe.
  NeighbourhoodFamily neighbourhood;
  /// Points named in the documented behaviours (added to probe sets).
  std::vector<Vec> documented_points;
  /// Curve families named in the documented behaviours, tested by the
  /// strong-causality probe.
  std::vector<DocumentedLoop> probe_curves;

  const GroupAction* action_ptr() const { return action ? &*action : nullptr; }
  bool has_predicate(const std::string& name) const { return predicates.count(name) > 0; }
};

std::vector<std::string> registry_names();

/// Throws ConfigError listing the known names when `name` is unknown.
/// `phi` parametrizes heisenberg_boost.
RegistryEntry get_structure(const std::string& name, double phi = 0.5);

/// Axis box of half-width r around p.
NeighbourhoodFamily box_neighbourhoods();

// Closed forms shared with tests.
namespace heisenberg {
/// Left translation taking p0 to the origin.
Vec translate_to_origin(const Vec& p0, const Vec& q);
/// -x^2 + y^2 + 4|z| of the translated point; negative with x > 0 inside I+(p).
double cone_function(const Vec& p, const Vec& q);
bool in_chronological_future(const Vec& p, const Vec& q);
}  // namespace heisenberg

namespace varmetric {
/// Smoothstep bump: 1 for y <= 1/3, 0 for y >= 2/3.
double psi(double y);
}  // namespace varmetric

}  // namespace causalreach
