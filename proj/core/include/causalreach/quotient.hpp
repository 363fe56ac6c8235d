#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "causalreach/action.hpp"
#include "causalreach/reachability.hpp"

namespace causalreach {

struct IsometryReport {
  /// Largest residual of a pushed frame vector after projection onto D.
  double distribution_defect = 0.0;
  /// Largest entry of |Phi^* g - g| in frame coefficients.
  double metric_defect = 0.0;
  /// Largest g(Phi_* T, T); negative means the time orientation is kept.
  double orientation_sign = 0.0;
  /// Largest |inverse(map(p)) - p|.
  double inverse_defect = 0.0;
  int samples = 0;

  bool preserves_distribution(double tol = 1e-6) const { return distribution_defect <= tol; }
  bool preserves_metric(double tol = 1e-6) const { return metric_defect <= tol; }
  bool preserves_orientation() const { return orientation_sign < 0; }
  bool passes(double tol = 1e-6) const {
    return preserves_distribution(tol) && preserves_metric(tol) && preserves_orientation() &&
           inverse_defect <= 1e-9;
  }
  nlohmann::ordered_json to_json() const;
};

/// Checks Phi_* D = D, Phi^* g = g and g(Phi_* T, T) < 0 at `samples` seeded
/// points of `box` (the domain when unset).
IsometryReport verify_isometry(const SubSpaceTime& st, const Isometry& iso, int samples,
                               std::uint64_t seed, std::optional<Box> box = std::nullopt);

Vec canonicalize(const GroupAction& action, const Vec& p);

/// Reachability of pi(p) in M/G on the fundamental box. Trajectories that
/// leave the covering box are counted in meta().truncated.
ReachGrid reach_quotient(const SubSpaceTime& st, const GroupAction& action, const Vec& p,
                         Direction dir, const ReachConfig& cfg);

struct ClosedCurveWitness {
  /// Covering-space curve from a lift of p to generator^copy of that lift.
  HorizontalCurve curve;
  int copy = 0;
  /// Distance between the endpoint and generator^copy(start).
  double gap = 0.0;
  /// "documented" or "sampled".
  std::string source;
  std::string description;

  nlohmann::ordered_json to_json() const;
};

/// Closed timelike future-directed curve through [p]: documented loops of the
/// action first, then sampled trajectories whose endpoint returns near an
/// orbit point of p (polished onto it by shooting). `action` may be null.
std::optional<ClosedCurveWitness> find_closed_causal(const SubSpaceTime& st,
                                                     const GroupAction* action, const Vec& p,
                                                     const ReachConfig& cfg);

}  // namespace causalreach
