#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "causalreach/geometry.hpp"

namespace causalreach {

enum class Strictness { Nonspacelike, Timelike };
enum class Direction { Future, Past };

std::string_view to_string(Strictness s);
std::string_view to_string(Direction d);

/// Piecewise-constant controls in orthonormal-frame coefficients. Row i is
/// held for durations[i]; u0 = 1 is the usual normalization.
class ControlSignal {
 public:
  ControlSignal() = default;
  ControlSignal(std::vector<double> durations, std::vector<Vec> rows,
                Strictness strictness = Strictness::Nonspacelike);

  static ControlSignal constant(const Vec& row, double duration,
                                Strictness strictness = Strictness::Nonspacelike);
  static ControlSignal uniform(double dt, std::vector<Vec> rows,
                               Strictness strictness = Strictness::Nonspacelike);

  int steps() const { return static_cast<int>(rows_.size()); }
  double duration(int i) const { return durations_[i]; }
  const Vec& row(int i) const { return rows_[i]; }
  const std::vector<double>& durations() const { return durations_; }
  const std::vector<Vec>& rows() const { return rows_; }
  double total_time() const;
  Strictness strictness() const { return strictness_; }

  /// Throws ConeViolation if a row leaves the cone.
  static void check_row(const Vec& row, Strictness strictness);

 private:
  std::vector<double> durations_;
  std::vector<Vec> rows_;
  Strictness strictness_ = Strictness::Nonspacelike;
};

/// Discretized horizontal curve. step_controls[i] holds the orthonormal
/// control active on [times[i], times[i+1]]; it is empty for curves built from
/// points only.
struct HorizontalCurve {
  std::vector<double> times;
  std::vector<Vec> points;
  std::vector<Vec> step_controls;
  ControlSignal controls;
  Direction direction = Direction::Future;
  bool exited = false;
  std::optional<double> length_cache;

  int steps() const { return static_cast<int>(points.size()) - 1; }
  const Vec& start() const { return points.front(); }
  const Vec& end() const { return points.back(); }
  double duration() const { return times.back() - times.front(); }
  /// Linear interpolation at parameter t (clamped).
  Vec at(double t) const;
};

struct IntegrateOptions {
  /// Maximum RK4 substep; <= 0 means total_time / 256.
  double max_dt = 0.0;
  /// Fixed substeps per control row; overrides max_dt when positive.
  int substeps_per_row = 0;
  Direction direction = Direction::Future;
};

/// RK4 of p' = F(p) A(p) u (or its negative for Past). Truncates at the first
/// step that leaves the admissible region and sets `exited`.
HorizontalCurve integrate(const SubSpaceTime& st, const Vec& p0, const ControlSignal& ctrl,
                          const IntegrateOptions& opts = {});

/// Curve through given points without control data (velocities from chords).
HorizontalCurve curve_from_points(std::vector<double> times, std::vector<Vec> points);

/// Joins b to the end of a; b.start() must coincide with a.end().
HorizontalCurve concatenate(const HorizontalCurve& a, const HorizontalCurve& b);

/// Same point set traversed backwards.
HorizontalCurve reversed(const HorizontalCurve& c);

/// Composite-trapezoid length. Throws ConeViolation on a spacelike step.
double length(const SubSpaceTime& st, const HorizontalCurve& c);

struct CausalReport {
  int steps = 0;
  /// Largest g(v, v) over chord velocities: negative means every step is timelike.
  double worst_norm = 0.0;
  int spacelike_steps = 0;
  /// Steps that are not future directed (past or spacelike).
  int orientation_violations = 0;
  double max_horizontal_residual = 0.0;
  std::vector<CausalCharacter> per_step;

  bool causal_future() const { return spacelike_steps == 0 && orientation_violations == 0; }
};

CausalReport verify_causal(const SubSpaceTime& st, const HorizontalCurve& c);

struct TubeEvent {
  double exit_time;
  std::optional<double> reentry_time;
};

using Canonicalizer = std::function<Vec(const Vec&)>;

/// Exits from and returns to a region after the curve's first entry.
std::vector<TubeEvent> tube_events(const HorizontalCurve& c, const PointPredicate& region,
                                   const Canonicalizer& canon = {});
std::vector<TubeEvent> tube_events(const HorizontalCurve& c, const Box& box,
                                   const Canonicalizer& canon = {});

/// CSV with columns t, x1..xn, u0..u(k-1).
void write_curve_csv(std::ostream& os, const HorizontalCurve& c);

}  // namespace causalreach
