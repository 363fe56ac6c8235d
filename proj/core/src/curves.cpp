#include "causalreach/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "causalreach/errors.hpp"

namespace causalreach {

std::string_view to_string(Strictness s) {
  return s == Strictness::Timelike ? "timelike" : "nonspacelike";
}

std::string_view to_string(Direction d) { return d == Direction::Future ? "future" : "past"; }

void ControlSignal::check_row(const Vec& row, Strictness strictness) {
  if (row.size() < 2) throw ConeViolation("control rows need at least two coefficients");
  const double u0 = row[0];
  const double s2 = row.tail(row.size() - 1).squaredNorm();
  if (!(u0 > 0)) throw ConeViolation("control row is not future directed (u0 <= 0)");
  const bool ok = strictness == Strictness::Timelike ? s2 < u0 * u0 : s2 <= u0 * u0 * (1 + 1e-9);
  if (!ok) throw ConeViolation("control row leaves the causal cone");
}

ControlSignal::ControlSignal(std::vector<double> durations, std::vector<Vec> rows,
                             Strictness strictness)
    : durations_(std::move(durations)), rows_(std::move(rows)), strictness_(strictness) {
  if (durations_.size() != rows_.size())
    throw ConfigError("control signal needs one duration per row");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (!(durations_[i] >= 0)) throw ConfigError("control durations must be nonnegative");
    if (rows_[i].size() != rows_.front().size()) throw ConfigError("control rows differ in size");
    check_row(rows_[i], strictness_);
  }
}

ControlSignal ControlSignal::constant(const Vec& row, double duration, Strictness strictness) {
  return ControlSignal({duration}, {row}, strictness);
}

ControlSignal ControlSignal::uniform(double dt, std::vector<Vec> rows, Strictness strictness) {
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  std::vector<double> d(rows.size(), dt);
  return ControlSignal(std::move(d), std::move(rows), strictness);
}

double ControlSignal::total_time() const {
  double t = 0;
  for (double d : durations_) t += d;
  return t;
}

Vec HorizontalCurve::at(double t) const {
  if (t <= times.front()) return points.front();
  if (t >= times.back()) return points.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  const double s = (t - times[i]) / (times[i + 1] - times[i]);
  return points[i] + s * (points[i + 1] - points[i]);
}

HorizontalCurve integrate(const SubSpaceTime& st, const Vec& p0, const ControlSignal& ctrl,
                          const IntegrateOptions& opts) {
  if (!st.admissible(p0)) throw DomainError("start point outside domain: " + format_point(p0));
  HorizontalCurve c;
  c.controls = ctrl;
  c.direction = opts.direction;
  c.times.push_back(0.0);
  c.points.push_back(p0);
  const double total = ctrl.total_time();
  const double max_dt = opts.max_dt > 0 ? opts.max_dt : total / 256.0;
  const double sign = opts.direction == Direction::Future ? 1.0 : -1.0;

  Vec p = p0;
  double t = 0.0, len = 0.0;
  for (int r = 0; r < ctrl.steps() && !c.exited; ++r) {
    const double dur = ctrl.duration(r);
    if (dur <= 0) continue;
    if (ctrl.row(r).size() != st.rank()) throw ConfigError("control rows must have k entries");
    const int nsub = opts.substeps_per_row > 0
                         ? opts.substeps_per_row
                         : std::max(1, static_cast<int>(std::ceil(dur / max_dt - 1e-9)));
    const double h = dur / nsub;
    const Vec& u = ctrl.row(r);
    const double speed = std::sqrt(std::max(0.0, u[0] * u[0] - u.tail(u.size() - 1).squaredNorm()));
    for (int s = 0; s < nsub; ++s) {
      const Vec k1 = sign * st.velocity(p, u);
      const Vec k2 = sign * st.velocity(p + 0.5 * h * k1, u);
      const Vec k3 = sign * st.velocity(p + 0.5 * h * k2, u);
      const Vec k4 = sign * st.velocity(p + h * k3, u);
      const Vec next = p + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
      if (!st.admissible(next)) {
        c.exited = true;
        break;
      }
      p = next;
      t += h;
      len += h * speed;
      c.times.push_back(t);
      c.points.push_back(p);
      c.step_controls.push_back(u);
    }
  }
  c.length_cache = len;
  return c;
}

HorizontalCurve curve_from_points(std::vector<double> times, std::vector<Vec> points) {
  if (times.size() != points.size() || points.empty())
    throw ConfigError("curve needs matching, nonempty times and points");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ConfigError("curve times must increase");
  HorizontalCurve c;
  c.times = std::move(times);
  c.points = std::move(points);
  return c;
}

HorizontalCurve concatenate(const HorizontalCurve& a, const HorizontalCurve& b) {
  if ((a.end() - b.start()).norm() > 1e-9 * (1.0 + a.end().norm()))
    throw ConfigError("curves do not meet: " + format_point(a.end()) + " vs " +
                      format_point(b.start()));
  HorizontalCurve c = a;
  const double shift = a.times.back() - b.times.front();
  for (std::size_t i = 1; i < b.points.size(); ++i) {
    c.times.push_back(b.times[i] + shift);
    c.points.push_back(b.points[i]);
  }
  const bool both_controlled = !a.step_controls.empty() && !b.step_controls.empty();
  if (both_controlled) {
    c.step_controls.insert(c.step_controls.end(), b.step_controls.begin(), b.step_controls.end());
    std::vector<double> d = a.controls.durations();
    std::vector<Vec> r = a.controls.rows();
    d.insert(d.end(), b.controls.durations().begin(), b.controls.durations().end());
    r.insert(r.end(), b.controls.rows().begin(), b.controls.rows().end());
    c.controls = ControlSignal(std::move(d), std::move(r), Strictness::Nonspacelike);
  } else {
    c.step_controls.clear();
    c.controls = ControlSignal();
  }
  c.exited = b.exited;
  if (a.length_cache && b.length_cache)
    c.length_cache = *a.length_cache + *b.length_cache;
  else
    c.length_cache.reset();
  return c;
}

HorizontalCurve reversed(const HorizontalCurve& c) {
  HorizontalCurve r;
  const double t_end = c.times.back();
  for (std::size_t i = c.points.size(); i-- > 0;) {
    r.times.push_back(t_end - c.times[i]);
    r.points.push_back(c.points[i]);
  }
  r.step_controls.assign(c.step_controls.rbegin(), c.step_controls.rend());
  r.direction = c.direction == Direction::Future ? Direction::Past : Direction::Future;
  r.length_cache = c.length_cache;
  return r;
}

namespace {

// sqrt(-g(w, w)) for raw coefficients w at p; throws on spacelike w.
double speed_raw(const SubSpaceTime& st, const Vec& p, const Vec& w) {
  const double q = w.dot(st.metric(p) * w);
  const double scale = (st.frame(p) * w).squaredNorm();
  if (q > kNullBand * std::max(scale, 1e-300) + 1e-14)
    throw ConeViolation("spacelike segment at " + format_point(p));
  return std::sqrt(std::max(0.0, -q));
}

Vec chord_coefficients(const SubSpaceTime& st, const Vec& mid, const Vec& v, double* residual) {
  const Mat F = st.frame(mid);
  const Vec w = F.colPivHouseholderQr().solve(v);
  if (residual) *residual = (F * w - v).norm();
  return w;
}

}  // namespace

double length(const SubSpaceTime& st, const HorizontalCurve& c) {
  double total = 0.0;
  const bool controlled = !c.step_controls.empty() && c.step_controls.size() == c.points.size() - 1;
  for (int i = 0; i < c.steps(); ++i) {
    const double dt = c.times[i + 1] - c.times[i];
    const Vec& a = c.points[i];
    const Vec& b = c.points[i + 1];
    Vec wa, wb;
    if (controlled) {
      const Vec& u = c.step_controls[i];
      wa = st.orthonormal_transform(a) * u;
      wb = st.orthonormal_transform(b) * u;
    } else {
      const Vec v = (b - a) / dt;
      wa = wb = chord_coefficients(st, 0.5 * (a + b), v, nullptr);
    }
    total += 0.5 * dt * (speed_raw(st, a, wa) + speed_raw(st, b, wb));
  }
  return total;
}

CausalReport verify_causal(const SubSpaceTime& st, const HorizontalCurve& c) {
  CausalReport r;
  r.steps = c.steps();
  r.worst_norm = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < c.steps(); ++i) {
    const double dt = c.times[i + 1] - c.times[i];
    const Vec v = (c.points[i + 1] - c.points[i]) / dt;
    const Vec mid = 0.5 * (c.points[i] + c.points[i + 1]);
    double residual = 0.0;
    const Vec w = chord_coefficients(st, mid, v, &residual);
    const Mat g = st.metric(mid);
    const CausalCharacter ch = classify_coefficients(g, st.time_orientation(mid), w, v.squaredNorm());
    r.per_step.push_back(ch);
    r.worst_norm = std::max(r.worst_norm, w.dot(g * w));
    r.max_horizontal_residual = std::max(r.max_horizontal_residual, residual / (1.0 + v.norm()));
    if (ch.character == Character::Spacelike) ++r.spacelike_steps;
    if (ch.orientation != Orientation::Future) ++r.orientation_violations;
  }
  if (r.steps == 0) r.worst_norm = 0.0;
  return r;
}

std::vector<TubeEvent> tube_events(const HorizontalCurve& c, const PointPredicate& region,
                                   const Canonicalizer& canon) {
  const auto inside = [&](const Vec& p) { return region(canon ? canon(p) : p); };
  // Parameter of the in/out switch on segment i, located by bisection in cover
  // coordinates so canonicalization jumps do not matter.
  const auto crossing = [&](int i, bool from_inside) {
    double lo = 0.0, hi = 1.0;
    const Vec& a = c.points[i];
    const Vec d = c.points[i + 1] - a;
    for (int it = 0; it < 48; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (inside(a + mid * d) == from_inside)
        lo = mid;
      else
        hi = mid;
    }
    return c.times[i] + hi * (c.times[i + 1] - c.times[i]);
  };

  std::vector<TubeEvent> events;
  std::size_t first = 0;
  while (first < c.points.size() && !inside(c.points[first])) ++first;
  if (first == c.points.size()) return events;
  bool in = true;
  for (std::size_t i = first; i + 1 < c.points.size(); ++i) {
    const bool next = inside(c.points[i + 1]);
    if (in && !next) events.push_back({crossing(static_cast<int>(i), true), std::nullopt});
    if (!in && next) events.back().reentry_time = crossing(static_cast<int>(i), false);
    in = next;
  }
  return events;
}

std::vector<TubeEvent> tube_events(const HorizontalCurve& c, const Box& box,
                                   const Canonicalizer& canon) {
  return tube_events(c, [&box](const Vec& p) { return box.contains(p); }, canon);
}

void write_curve_csv(std::ostream& os, const HorizontalCurve& c) {
  const int n = c.points.empty() ? 0 : static_cast<int>(c.points.front().size());
  const int k = c.step_controls.empty() ? 0 : static_cast<int>(c.step_controls.front().size());
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 0; i < k; ++i) os << ",u" << i;
  os << '\n';
  const auto old = os.precision(15);
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    os << c.times[i];
    for (int j = 0; j < n; ++j) os << ',' << c.points[i][j];
    if (k > 0) {
      const Vec& u = c.step_controls[std::min(i, c.step_controls.size() - 1)];
      for (int j = 0; j < k; ++j) os << ',' << u[j];
    }
    os << '\n';
  }
  os.precision(old);
}

}  // namespace causalreach
