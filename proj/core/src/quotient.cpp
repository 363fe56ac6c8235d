#include "causalreach/quotient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "causalreach/errors.hpp"
#include "causalreach/rng.hpp"
#include "causalreach/shooting.hpp"

namespace causalreach {

Mat Isometry::jacobian_at(const Vec& p) const {
  if (jacobian) return jacobian(p);
  const int n = static_cast<int>(p.size());
  Mat J(n, n);
  for (int i = 0; i < n; ++i) {
    const double h = 1e-6 * (1.0 + std::abs(p[i]));
    Vec a = p, b = p;
    a[i] += h;
    b[i] -= h;
    J.col(i) = (map(a) - map(b)) / (2 * h);
  }
  return J;
}

Vec GroupAction::power(const Vec& p, int n) const {
  Vec q = p;
  for (int i = 0; i < n; ++i) q = generator.map(q);
  for (int i = 0; i > n; --i) q = generator.inverse(q);
  return q;
}

int GroupAction::orbit_offset(const Vec& p, int limit) const {
  const Vec c = canonicalize(p);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int n = -limit; n <= limit; ++n) {
    const double d = (power(p, n) - c).norm();
    if (d < best_d) {
      best_d = d;
      best = n;
    }
  }
  if (best_d > 1e-9 * (1.0 + c.norm()))
    throw DomainError("no orbit point within the search limit reaches the representative");
  return best;
}

GroupAction trivial_action(const Box& domain) {
  GroupAction a;
  a.name = "trivial";
  a.generator.map = [](const Vec& p) { return p; };
  a.generator.inverse = [](const Vec& p) { return p; };
  a.generator.jacobian = [](const Vec& p) -> Mat { return Mat::Identity(p.size(), p.size()); };
  a.canonicalize = [](const Vec& p) { return p; };
  a.fundamental_box = domain;
  a.cover_box = [domain](int) { return domain; };
  return a;
}

nlohmann::ordered_json IsometryReport::to_json() const {
  nlohmann::ordered_json j;
  j["distribution_defect"] = distribution_defect;
  j["metric_defect"] = metric_defect;
  j["orientation_sign"] = orientation_sign;
  j["inverse_defect"] = inverse_defect;
  j["samples"] = samples;
  j["passes"] = passes();
  return j;
}

IsometryReport verify_isometry(const SubSpaceTime& st, const Isometry& iso, int samples,
                               std::uint64_t seed, std::optional<Box> box) {
  const Box b = box.value_or(st.domain());
  IsometryReport rep;
  rep.orientation_sign = -std::numeric_limits<double>::infinity();
  Philox rng(seed, 0x150);
  const int n = st.dim();
  for (int s = 0; s < samples; ++s) {
    Vec p(n);
    for (int i = 0; i < n; ++i) p[i] = rng.uniform(b.lo[i], b.hi[i]);
    const Vec q = iso.map(p);
    rep.inverse_defect = std::max(rep.inverse_defect, (iso.inverse(q) - p).norm());
    const Mat J = iso.jacobian_at(p);
    const Mat Fp = st.frame(p), Fq = st.frame(q);
    const Mat pushed = J * Fp;
    // Frame coefficients of the pushed vectors at q.
    const auto qr = Fq.colPivHouseholderQr();
    const Mat coeff = qr.solve(pushed);
    const Mat resid = Fq * coeff - pushed;
    for (int j = 0; j < resid.cols(); ++j)
      rep.distribution_defect = std::max(rep.distribution_defect,
                                         resid.col(j).norm() / (1.0 + pushed.col(j).norm()));
    const Mat pulled = coeff.transpose() * st.metric(q) * coeff;
    rep.metric_defect = std::max(rep.metric_defect, (pulled - st.metric(p)).cwiseAbs().maxCoeff());
    const Vec cp = st.time_orientation(p);
    const Vec t_pushed = coeff * cp;
    const double g = t_pushed.dot(st.metric(q) * st.time_orientation(q));
    rep.orientation_sign = std::max(rep.orientation_sign, g);
  }
  rep.samples = samples;
  return rep;
}

Vec canonicalize(const GroupAction& action, const Vec& p) { return action.canonicalize(p); }

ReachGrid reach_quotient(const SubSpaceTime& st, const GroupAction& action, const Vec& p,
                         Direction dir, const ReachConfig& cfg) {
  return std::move(sample_reach_multi(st, &action, p, dir, cfg, {cfg.resolution}).front());
}

nlohmann::ordered_json ClosedCurveWitness::to_json() const {
  nlohmann::ordered_json j;
  j["source"] = source;
  j["description"] = description;
  j["copy"] = copy;
  j["gap"] = gap;
  j["start"] = format_point(curve.start());
  j["end"] = format_point(curve.end());
  j["duration"] = curve.duration();
  return j;
}

namespace {

struct OrbitHit {
  double gap = std::numeric_limits<double>::infinity();
  int copy = 0;
};

OrbitHit nearest_orbit_point(const GroupAction* action, const Vec& start, const Vec& x,
                             int limit, bool allow_identity) {
  OrbitHit hit;
  const int lim = action ? limit : 0;
  for (int n = -lim; n <= lim; ++n) {
    if (n == 0 && !allow_identity) continue;
    const Vec target = action ? action->power(start, n) : start;
    const double d = (x - target).norm();
    if (d < hit.gap) hit = {d, n};
  }
  return hit;
}

}  // namespace

std::optional<ClosedCurveWitness> find_closed_causal(const SubSpaceTime& st,
                                                     const GroupAction* action, const Vec& p,
                                                     const ReachConfig& cfg) {
  cfg.validate();
  const Vec start = action ? action->canonicalize(p) : p;
  std::optional<SubSpaceTime> cover;
  if (action) cover.emplace(st.with_domain(action->cover_box(cfg.copies)));
  const SubSpaceTime& space = cover ? *cover : st;
  if (!space.admissible(start)) throw DomainError("start point outside domain: " + format_point(p));
  const int limit = cfg.copies + 2;
  const double close_tol = 1e-9 * (1.0 + start.norm());

  if (action) {
    for (const DocumentedLoop& loop : action->documented_loops) {
      if ((action->canonicalize(loop.start) - start).norm() > close_tol) continue;
      IntegrateOptions opts;
      opts.max_dt = loop.controls.total_time() / 1024.0;
      HorizontalCurve c = integrate(space, loop.start, loop.controls, opts);
      if (c.exited) continue;
      const OrbitHit hit = nearest_orbit_point(action, loop.start, c.end(), limit, false);
      if (hit.gap <= close_tol) {
        return ClosedCurveWitness{std::move(c), hit.copy, hit.gap, "documented", loop.description};
      }
    }
  }

  // Sampled t.f.d. trajectories; a node only counts once the curve has moved on.
  ReachConfig rc = cfg;
  rc.strictness = Strictness::Timelike;
  const double scale = 1.0 - rc.cone_margin;
  IntegrateOptions opts;
  opts.max_dt = rc.horizon / rc.integrator_steps;
  const double min_time = 0.1 * rc.horizon;
  const Box grid_box = default_grid_box(st, action, rc);
  const double tol = 1.5 * (grid_box.extent() / rc.resolution).norm();

  struct Candidate {
    double gap;
    std::uint64_t index;
    double until;
    int copy;
  };
  std::vector<Candidate> best;
  constexpr std::size_t kPolish = 4;
  for (std::uint64_t i = 0; i < rc.samples; ++i) {
    const ControlSignal ctrl = sample_controls(rc, st.rank(), i, scale);
    const HorizontalCurve c = integrate(space, start, ctrl, opts);
    Candidate cand{std::numeric_limits<double>::infinity(), i, 0.0, 0};
    for (std::size_t k = 0; k < c.points.size(); ++k) {
      if (c.times[k] < min_time) continue;
      const OrbitHit hit = nearest_orbit_point(action, start, c.points[k], limit, true);
      if (hit.gap >= cand.gap || hit.gap > tol) continue;
      // A return only counts after the curve has been well away from the
      // orbit point; otherwise the first few nodes would always qualify.
      const Vec target = action ? action->power(start, hit.copy) : start;
      bool away = false;
      for (std::size_t j = 0; j < k && !away; ++j) away = (c.points[j] - target).norm() > 2 * tol;
      if (away) cand = {hit.gap, i, c.times[k], hit.copy};
    }
    if (cand.gap > tol) continue;
    best.push_back(cand);
    std::stable_sort(best.begin(), best.end(),
                     [](const Candidate& a, const Candidate& b) { return a.gap < b.gap; });
    if (best.size() > kPolish) best.pop_back();
  }

  std::optional<ClosedCurveWitness> fallback;
  for (const Candidate& cand : best) {
    const ControlSignal ctrl = sample_controls(rc, st.rank(), cand.index, scale);
    const Shooter shooter(space, start, Direction::Future, std::max(8, rc.steps), 16, scale);
    Shooter::Params theta = shooter.from_controls(ctrl, cand.until);
    const Vec target = action ? action->power(start, cand.copy) : start;
    shooter.solve_endpoint(theta, target, 40, 1e-12);
    HorizontalCurve c = shooter.curve(theta);
    const double gap = (c.end() - target).norm();
    const bool moved = c.duration() >= min_time;
    if (!c.exited && moved && gap <= close_tol) {
      return ClosedCurveWitness{std::move(c), cand.copy, gap, "sampled",
                                "sampled trajectory " + std::to_string(cand.index)};
    }
    if (!fallback) {
      IntegrateOptions o;
      o.max_dt = opts.max_dt;
      const ControlSignal prefix = shooter.to_controls(shooter.from_controls(ctrl, cand.until));
      HorizontalCurve raw = integrate(space, start, prefix, o);
      if (!raw.exited)
        fallback = ClosedCurveWitness{std::move(raw), cand.copy, cand.gap, "sampled",
                                      "sampled trajectory " + std::to_string(cand.index) +
                                          " (returns within one grid tolerance)"};
    }
  }
  return fallback;
}

}  // namespace causalreach
