#pragma once

#include <vector>

#include "causalreach/curves.hpp"

namespace causalreach {

/// Parametrized piecewise-constant controls: block j holds (tau_j, s_j) with
/// tau_j >= 0 the interval length and s_j in R^(k-1), |s_j| <= s_max, the
/// spatial part of the orthonormal control (u0 = 1).
class Shooter {
 public:
  using Params = Eigen::VectorXd;

  Shooter(const SubSpaceTime& st, Vec origin, Direction dir, int intervals, int substeps,
          double s_max = 1.0);

  int intervals() const { return m_; }
  int block() const { return k_; }
  int size() const { return m_ * k_; }
  Direction direction() const { return dir_; }

  Params from_controls(const ControlSignal& ctrl, double until) const;
  ControlSignal to_controls(const Params& theta) const;
  void project(Params& theta) const;

  /// Endpoint ignoring the domain box (fields are evaluated anywhere).
  Vec endpoint(const Params& theta) const;
  /// Row-boundary states; states[j] is the state where block j starts.
  std::vector<Vec> boundary_states(const Params& theta) const;
  Vec endpoint_from(const Params& theta, int row, const Vec& state) const;
  double length(const Params& theta) const;
  HorizontalCurve curve(const Params& theta) const;

  /// Damped min-norm Gauss-Newton on endpoint(theta) = target. Returns the
  /// final residual norm; `iterations` receives the accepted steps.
  double solve_endpoint(Params& theta, const Vec& target, int max_iter, double tol,
                        int* iterations = nullptr) const;

  /// Block-coordinate ascent of length - mu |endpoint - target|^2 with mu
  /// growing geometrically per outer iteration. Returns the sweep count.
  int penalty_ascent(Params& theta, const Vec& target, int outer, double mu0, double growth,
                      int max_sweeps) const;

 private:
  Vec integrate_rows(const Params& theta, int from_row, Vec state, std::vector<Vec>* states) const;

  const SubSpaceTime& st_;
  Vec origin_;
  Direction dir_;
  int m_, k_, substeps_;
  double s_max_;
};

}  // namespace causalreach
