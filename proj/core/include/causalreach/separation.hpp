#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "causalreach/reachability.hpp"

namespace causalreach {

struct SeparationConfig {
  /// Multistart sampling; reach.resolution also fixes the endpoint tolerance.
  ReachConfig reach;
  int starts = 4;
  int intervals = 8;
  int substeps = 16;
  int outer_iterations = 4;
  double penalty0 = 10.0;
  double penalty_growth = 10.0;
  int max_sweeps = 40;
  int newton_iterations = 40;
  /// Endpoint tolerance; <= 0 means 1.5 cell diagonals of the reach grid.
  double tol_end = 0.0;

  SeparationConfig();
  void validate() const;
  nlohmann::ordered_json to_json() const;
  std::string digest() const;
};

struct SeparationEstimate {
  /// Best curve length found; 0 when the target was not reached.
  double value = 0.0;
  bool reached = false;
  bool unbounded_suspected = false;
  double endpoint_error = 0.0;
  double tolerance = 0.0;
  std::optional<HorizontalCurve> curve;
  /// Optimizer iterations (coordinate sweeps and Gauss-Newton steps) over all starts.
  int iterations = 0;
  /// Sampled trajectory the winning start came from; -1 for supplied warm starts.
  long long start_index = -1;
  /// Quotient runs: the witness ends at generator^copy(q).
  int copy = 0;

  nlohmann::ordered_json to_json() const;
};

/// Lower estimate of T^S(from, to) for Future, or of T^S(to, from) for Past
/// (past-directed curves from `from`). With an action the curve may end at
/// any generator power of `to` inside the covering box.
SeparationEstimate time_separation(const SubSpaceTime& st, const Vec& from, const Vec& to,
                                   const SeparationConfig& cfg, Direction dir = Direction::Future,
                                   const GroupAction* action = nullptr,
                                   const std::vector<ControlSignal>& warm_starts = {});

double endpoint_tolerance(const SubSpaceTime& st, const SeparationConfig& cfg,
                          const GroupAction* action);

struct OuterBallOptions {
  /// Re-examine unmarked cells next to marked ones with the optimizer.
  bool refine_frontier = false;
  int max_refine = 256;
  /// Multistart samples per refined cell.
  std::uint64_t refine_samples = 256;
  /// Frontier cells closest to these points are refined first.
  std::vector<Vec> focus;
};

/// Cells whose representative point lies at time separation > eps from p
/// (Future: T^S(p, r) > eps; Past: T^S(r, p) > eps).
ReachGrid outer_ball(const SubSpaceTime& st, const Vec& p, double eps, Direction dir,
                     const SeparationConfig& cfg, const GroupAction* action = nullptr,
                     const OuterBallOptions& opts = {});

/// Sampled part of outer_ball at several resolutions from one pass.
std::vector<ReachGrid> outer_ball_multi(const SubSpaceTime& st, const Vec& p, double eps,
                                        Direction dir, const SeparationConfig& cfg,
                                        const GroupAction* action,
                                        const std::vector<int>& resolutions);

struct TriangleCheck {
  SeparationEstimate pr, rq, pq;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool holds = false;

  nlohmann::ordered_json to_json() const;
};

/// lhs joins the best p->r and r->q curves; rhs is the direct p->q estimate,
/// which is also started from the joined controls. holds iff rhs >= lhs - tolerance.
TriangleCheck reverse_triangle_check(const SubSpaceTime& st, const Vec& p, const Vec& r,
                                     const Vec& q, const SeparationConfig& cfg,
                                     double tolerance = 0.02);

}  // namespace causalreach
