#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "causalreach/registry.hpp"
#include "causalreach/quotient.hpp"
#include "causalreach/separation.hpp"

namespace causalreach {

enum class Membership { In, Out, Unknown };
enum class FamilyKind { Tau, Alex, AlexOpen, TSep };

std::string_view to_string(Membership m);
std::string_view to_string(FamilyKind k);
/// Accepts "tau", "alex", "alexopen"/"alex_open", "tsep" (any case).
FamilyKind family_kind_from_string(std::string_view s);

struct TopologyConfig {
  int resolution = 64;
  std::uint64_t samples = 4000;
  double horizon = 1.2;
  std::uint64_t seed = 1;
  int probes = 32;
  int threads = 1;
  int copies = 3;
  int relay_rounds = 0;
  /// Build Alex/AlexOpen sets from the entry's "chronological_future"
  /// predicate instead of sampled grids (when the entry has one).
  bool closed_form = false;

  static TopologyConfig from_entry(const RegistryEntry& e);
  nlohmann::ordered_json to_json() const;
};

/// One set of a family. Grid-backed sets hold grids at resolutions r and 2r;
/// box and predicate sets are closed-form; cell sets are the 3^n block of
/// cells around `centers[0]` at whatever resolution they are read.
struct FamilySet {
  enum class Shape { Grid, Box, Cells, Predicate };

  std::string label;
  Shape shape = Shape::Grid;
  std::vector<Vec> centers;
  std::vector<Vec> generators;
  double eps = 0.0;
  /// Characteristic size; coarse sets smaller than every fine set are skipped.
  double scale = 0.0;
  Box box;
  std::vector<ReachGrid> grids;
  PointPredicate predicate;
};

struct SetFamily {
  FamilyKind kind = FamilyKind::Tau;
  std::vector<FamilySet> sets;
  /// Layout shared by every set: grids at r and 2r over the family box.
  std::vector<ReachGrid> layout;
  Canonicalizer canonicalize;
  TopologyConfig config;
  std::string config_digest;

  double min_scale() const;
  /// Membership of x (canonicalized) in set i. Grid sets: In when x's cell is
  /// marked at r and a cell within one of x's at 2r is marked, Out when x's
  /// cell is unmarked at both; the other shapes are exact.
  Membership contains(std::size_t i, const Vec& x) const;
};

/// `cfg.probes` seeded points of the entry's probe box (canonicalized) followed
/// by the documented points.
std::vector<Vec> probe_points(const RegistryEntry& e, const TopologyConfig& cfg);

/// Box holding every family grid: the fundamental box for quotients, else the
/// probe box plus a 0.15 margin, clipped to the domain. Sets reaching past
/// it are clipped.
Box family_box(const RegistryEntry& e);

SetFamily build_family(const RegistryEntry& e, FamilyKind kind, const std::vector<Vec>& anchors,
                       const TopologyConfig& cfg);
/// Alex and AlexOpen from one set of sampling passes.
std::pair<SetFamily, SetFamily> build_alexandrov_families(const RegistryEntry& e,
                                                          const std::vector<Vec>& anchors,
                                                          const TopologyConfig& cfg);

enum class Tri { False, True, Unknown };
std::string_view to_string(Tri t);

struct SeparationMatrix {
  std::vector<Vec> points;
  /// entry[i][j]: some set contains point i but not point j.
  std::vector<std::vector<Tri>> entry;

  /// Points i and j cannot be told apart in either direction.
  bool inseparable(std::size_t i, std::size_t j) const;
  nlohmann::ordered_json to_json() const;
};

SeparationMatrix separation_matrix(const std::vector<Vec>& points, const SetFamily& family);

struct RefinementWitness {
  std::string set_label;
  Vec point;
};

struct RefinementResult {
  FamilyKind coarse = FamilyKind::Tau;
  FamilyKind fine = FamilyKind::Tau;
  /// Every (set, center) pair without a fine set inside, in set order.
  std::vector<RefinementWitness> witnesses;
  /// Tested (set, center) pairs and those whose two resolutions disagreed.
  int tested = 0;
  int inconclusive = 0;

  /// "witness-found", "consistent-with-inclusion" or "inconclusive".
  std::string verdict() const;
  nlohmann::ordered_json to_json() const;
};

/// Sets B of `coarse` with a center p in B such that no set of `fine`
/// contains p and lies inside B, at both resolutions. Containment
/// compares the outer cells of the fine set with the inner cells of B;
/// predicate sets are rasterized from each cell's center and corners.
RefinementResult refinement_witness(const SetFamily& coarse, const SetFamily& fine);

struct CausalityViolation {
  double radius = 0.0;
  std::string source;
  HorizontalCurve curve;
  TubeEvent event;
};

struct StrongCausalityReport {
  Vec point;
  std::vector<double> radii;
  std::vector<std::uint64_t> curves;
  std::vector<std::uint64_t> violation_counts;
  /// Up to a few witnesses per radius.
  std::vector<CausalityViolation> violations;

  bool violated() const { return !violations.empty(); }
  nlohmann::ordered_json to_json() const;
};

/// Samples cfg.samples nonspacelike future-directed curves from points of
/// each neighbourhood U = nbhd(p, r) and reports curves that leave U and come
/// back. `extra` curves (e.g. a documented family) are tested as well.
StrongCausalityReport strong_causality_probe(const SubSpaceTime& st, const GroupAction* action,
                                             const NeighbourhoodFamily& nbhd, const Vec& p,
                                             const std::vector<double>& radii,
                                             const ReachConfig& cfg,
                                             const std::vector<DocumentedLoop>& extra = {});

struct HierarchyReport {
  /// "violated" or "no violation found at sampling level".
  std::string chronological;
  std::string causal;
  std::string strongly_causal;
  nlohmann::ordered_json witnesses;

  nlohmann::ordered_json to_json() const;
};

inline constexpr std::string_view kViolated = "violated";
inline constexpr std::string_view kNoViolation = "no violation found at sampling level";

/// Chronology from find_closed_causal at the documented points and loop
/// starts, causality from two-point cycles of nonspacelike reach grids, strong
/// causality from strong_causality_probe at the documented points.
HierarchyReport hierarchy_report(const RegistryEntry& e, const ReachConfig& cfg);

struct PullbackPair {
  double s = 0.0;
  double t = 0.0;
  /// Maximal runs of curve parameters in the preimage.
  std::vector<std::pair<double, double>> intervals;
  bool open = false;
};

struct PullbackReport {
  int curve_samples = 0;
  std::vector<PullbackPair> pairs;

  nlohmann::ordered_json to_json() const;
};

/// Preimage along the curve (parameter rescaled to [0, 1]) of
/// I+(gamma(s)) ∩ I-(gamma(t)) for each pair; a sample is in when both grids
/// mark it at some resolution. A run counts as open when it has more than one
/// sample and all of its samples except the two ends are interior at both
/// resolutions, apart from those within two cell diagonals of gamma(s) or
/// gamma(t).
PullbackReport pullback_check(const SubSpaceTime& st, const GroupAction* action,
                              const HorizontalCurve& curve,
                              const std::vector<std::pair<double, double>>& pairs,
                              const ReachConfig& cfg, int curve_samples = 65);

/// Membership of gamma(u) in I+(gamma(s)) for u on a parameter grid.
std::vector<std::pair<double, ChronVerdict>> future_along_curve(const SubSpaceTime& st,
                                                                const GroupAction* action,
                                                                const HorizontalCurve& curve,
                                                                double s, const ReachConfig& cfg,
                                                                int curve_samples = 65);

struct TransitivityReport {
  int base_points = 0;
  int triples = 0;
  int counterexamples = 0;
  int skipped = 0;
  std::vector<std::array<Vec, 3>> examples;

  nlohmann::ordered_json to_json() const;
};

/// p << q <= r => p << r on grids: q is drawn from a timelike trajectory of p
/// (from the eroded cells of p's half-horizon timelike grid when `opened`), r from a
/// nonspacelike trajectory of q, and r's cell must lie within one cell of the
/// timelike grid of p (eroded when `opened`). Each base point contributes up
/// to `per_point` triples (20 * per_point draws at most) and base points are
/// taken until `triples` are tested; failed draws count as skipped.
TransitivityReport transitivity_check(const RegistryEntry& e, const ReachConfig& cfg,
                                      int triples, int per_point, bool opened);

}  // namespace causalreach
