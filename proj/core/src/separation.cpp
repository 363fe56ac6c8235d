#include "causalreach/separation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "causalreach/digest.hpp"
#include "causalreach/errors.hpp"
#include "causalreach/shooting.hpp"

namespace causalreach {

SeparationConfig::SeparationConfig() {
  reach.samples = 2000;
  reach.strictness = Strictness::Nonspacelike;
  reach.resolution = 128;
}

void SeparationConfig::validate() const {
  reach.validate();
  if (starts < 1) throw ConfigError("starts must be at least 1");
  if (intervals < 1 || substeps < 1) throw ConfigError("intervals and substeps must be positive");
  if (outer_iterations < 1 || max_sweeps < 1) throw ConfigError("ascent iterations must be positive");
  if (!(penalty0 > 0) || !(penalty_growth >= 1)) throw ConfigError("bad penalty schedule");
  if (newton_iterations < 0) throw ConfigError("newton_iterations must be nonnegative");
}

nlohmann::ordered_json SeparationConfig::to_json() const {
  nlohmann::ordered_json j;
  j["reach"] = reach.to_json();
  j["starts"] = starts;
  j["intervals"] = intervals;
  j["substeps"] = substeps;
  j["outer_iterations"] = outer_iterations;
  j["penalty0"] = penalty0;
  j["penalty_growth"] = penalty_growth;
  j["max_sweeps"] = max_sweeps;
  j["newton_iterations"] = newton_iterations;
  j["tol_end"] = tol_end;
  return j;
}

std::string SeparationConfig::digest() const { return hex_digest(to_json().dump()); }

nlohmann::ordered_json SeparationEstimate::to_json() const {
  nlohmann::ordered_json j;
  j["value"] = value;
  j["reached"] = reached;
  j["unbounded_suspected"] = unbounded_suspected;
  j["endpoint_error"] = endpoint_error;
  j["tolerance"] = tolerance;
  j["iterations"] = iterations;
  j["start_index"] = start_index;
  j["copy"] = copy;
  return j;
}

double endpoint_tolerance(const SubSpaceTime& st, const SeparationConfig& cfg,
                          const GroupAction* action) {
  if (cfg.tol_end > 0) return cfg.tol_end;
  const Box box = default_grid_box(st, action, cfg.reach);
  return 1.5 * (box.extent() / cfg.reach.resolution).norm();
}

namespace {

struct Start {
  double dist = std::numeric_limits<double>::infinity();
  long long index = -1;
  ControlSignal controls;
  double until = 0.0;
  int copy = 0;
};

struct Target {
  Vec point;
  int copy;
};

std::vector<Target> targets_for(const Vec& to, const GroupAction* action, const Box& cover,
                                int copies) {
  if (!action) return {{to, 0}};
  std::vector<Target> out;
  const Vec base = action->canonicalize(to);
  for (int n = -copies; n <= copies; ++n) {
    const Vec t = action->power(base, n);
    if (cover.contains(t)) out.push_back({t, n});
  }
  return out;
}

// Best `count` sampled prefixes by distance of a node to the nearest target.
std::vector<Start> sampled_starts(const SubSpaceTime& st, const Vec& origin, Direction dir,
                                  const SeparationConfig& cfg, const std::vector<Target>& targets,
                                  int count) {
  const ReachConfig& rc = cfg.reach;
  const double scale = rc.strictness == Strictness::Timelike ? 1.0 - rc.cone_margin : 1.0;
  IntegrateOptions opts;
  opts.max_dt = rc.horizon / rc.integrator_steps;
  opts.direction = dir;
  std::vector<Start> best;
  for (std::uint64_t i = 0; i < rc.samples; ++i) {
    const ControlSignal ctrl = sample_controls(rc, st.rank(), i, scale);
    const HorizontalCurve c = integrate(st, origin, ctrl, opts);
    Start s;
    s.index = static_cast<long long>(i);
    for (std::size_t n = 0; n < c.points.size(); ++n)
      for (const Target& t : targets) {
        const double d = (c.points[n] - t.point).norm();
        if (d < s.dist) {
          s.dist = d;
          s.until = c.times[n];
          s.copy = t.copy;
        }
      }
    if (static_cast<int>(best.size()) < count || s.dist < best.back().dist) {
      s.controls = ctrl;
      best.push_back(std::move(s));
      std::stable_sort(best.begin(), best.end(),
                       [](const Start& a, const Start& b) { return a.dist < b.dist; });
      if (static_cast<int>(best.size()) > count) best.pop_back();
    }
  }
  return best;
}

struct Refined {
  bool valid = false;
  double value = 0.0;
  double error = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::optional<HorizontalCurve> curve;
};

Refined refine(const SubSpaceTime& st, const Vec& origin, Direction dir, const SeparationConfig& cfg,
               const Start& start, const Vec& target) {
  const int m = std::max(cfg.intervals, cfg.reach.steps);
  const Shooter shooter(st, origin, dir, m, cfg.substeps);
  Shooter::Params theta = shooter.from_controls(start.controls, start.until);
  Refined out;
  shooter.solve_endpoint(theta, target, cfg.newton_iterations, 1e-11, &out.iterations);
  out.iterations += shooter.penalty_ascent(theta, target, cfg.outer_iterations, cfg.penalty0,
                                           cfg.penalty_growth, cfg.max_sweeps);
  shooter.solve_endpoint(theta, target, cfg.newton_iterations, 1e-12, &out.iterations);
  HorizontalCurve c = shooter.curve(theta);
  if (c.exited) return out;
  out.valid = true;
  out.error = (c.end() - target).norm();
  out.value = c.length_cache.value_or(0.0);
  out.curve = std::move(c);
  return out;
}

}  // namespace

SeparationEstimate time_separation(const SubSpaceTime& st, const Vec& from, const Vec& to,
                                   const SeparationConfig& cfg, Direction dir,
                                   const GroupAction* action,
                                   const std::vector<ControlSignal>& warm_starts) {
  cfg.validate();
  if (from.size() != st.dim() || to.size() != st.dim())
    throw ConfigError("points must have the manifold dimension");
  std::optional<SubSpaceTime> cover;
  Box cover_box = st.domain();
  if (action) {
    cover_box = action->cover_box(cfg.reach.copies);
    cover.emplace(st.with_domain(cover_box));
  }
  const SubSpaceTime& space = cover ? *cover : st;
  const Vec origin = action ? action->canonicalize(from) : from;
  if (!space.admissible(origin)) throw DomainError("start point outside domain: " + format_point(from));
  const std::vector<Target> targets = targets_for(to, action, cover_box, cfg.reach.copies);

  SeparationEstimate est;
  est.tolerance = endpoint_tolerance(st, cfg, action);
  est.endpoint_error = std::numeric_limits<double>::infinity();
  if (targets.empty()) return est;

  std::vector<Start> starts;
  for (const ControlSignal& w : warm_starts) {
    Start s;
    s.controls = w;
    s.until = w.total_time();
    s.dist = 0.0;
    starts.push_back(std::move(s));
  }
  for (Start& s : sampled_starts(space, origin, dir, cfg, targets, cfg.starts))
    starts.push_back(std::move(s));

  const auto target_of = [&](int copy) -> const Vec& {
    for (const Target& t : targets)
      if (t.copy == copy) return t.point;
    return targets.front().point;
  };

  std::vector<Refined> results(starts.size());
  int workers = cfg.reach.threads == 0 ? static_cast<int>(std::thread::hardware_concurrency())
                                       : cfg.reach.threads;
  workers = std::clamp(workers, 1, static_cast<int>(starts.size()));
  const auto work = [&](int w) {
    for (std::size_t i = static_cast<std::size_t>(w); i < starts.size();
         i += static_cast<std::size_t>(workers))
      results[i] = refine(space, origin, dir, cfg, starts[i], target_of(starts[i].copy));
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  int best = -1;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const Refined& r = results[i];
    est.iterations += r.iterations;
    if (!r.valid) continue;
    est.endpoint_error = std::min(est.endpoint_error, r.error);
    if (r.error > est.tolerance) continue;
    if (best < 0 || r.value > results[best].value) best = static_cast<int>(i);
  }
  if (best >= 0) {
    Refined& r = results[best];
    est.reached = true;
    est.value = r.value;
    est.endpoint_error = r.error;
    est.curve = std::move(r.curve);
    est.start_index = starts[best].index;
    est.copy = starts[best].copy;
    est.unbounded_suspected = est.value > 10.0 * cfg.reach.horizon;
  }
  return est;
}

namespace {

class LengthSink : public TrajectorySink {
 public:
  LengthSink(std::vector<ReachGrid> grids, double eps, Canonicalizer canon)
      : grids_(std::move(grids)), eps_(eps), canon_(std::move(canon)) {}

  void segment(const Vec& a, const Vec& b, double la, double lb, double) override {
    if (lb <= eps_) return;
    // Only the part past eps is marked.
    const double f = la > eps_ ? 0.0 : std::min(1.0, (eps_ - la) / (lb - la) + 1e-12);
    const Vec start = a + f * (b - a);
    for (auto& g : grids_) mark_segment(g, start, b, canon_);
  }
  void end(bool truncated) override {
    if (truncated) ++grids_.front().meta().truncated;
  }

  std::vector<ReachGrid> grids_;
  double eps_;
  Canonicalizer canon_;
};

bool touches_marked(const ReachGrid& g, std::size_t index) {
  const auto c = g.unravel(index);
  const int n = g.dim();
  std::vector<int> off(static_cast<std::size_t>(n), -1), cur(static_cast<std::size_t>(n));
  while (true) {
    bool inside = true;
    for (int a = 0; a < n; ++a) {
      cur[a] = c[a] + off[a];
      inside = inside && cur[a] >= 0 && cur[a] < g.dims()[a];
    }
    if (inside && g.marked(g.ravel(cur))) return true;
    int a = 0;
    while (a < n && off[a] == 1) off[a++] = -1;
    if (a == n) return false;
    ++off[a];
  }
}

}  // namespace

std::vector<ReachGrid> outer_ball_multi(const SubSpaceTime& st, const Vec& p, double eps,
                                        Direction dir, const SeparationConfig& cfg,
                                        const GroupAction* action,
                                        const std::vector<int>& resolutions) {
  cfg.validate();
  if (!(eps > 0)) throw ConfigError("outer ball radius must be positive");
  const Box box = default_grid_box(st, action, cfg.reach);
  const Vec start = action ? action->canonicalize(p) : p;
  GridMeta meta;
  meta.source = start;
  meta.direction = dir;
  meta.config_digest = cfg.digest();
  meta.manifold = st.name();
  meta.samples = cfg.reach.samples;
  std::vector<ReachGrid> proto;
  for (int r : resolutions)
    proto.push_back(ReachGrid::cubic(box, r, GridSemantics::UnderOuterBall, meta));

  Canonicalizer canon;
  std::optional<SubSpaceTime> cover;
  if (action) {
    canon = action->canonicalize;
    cover.emplace(st.with_domain(action->cover_box(cfg.reach.copies)));
  }
  const SubSpaceTime& sampler = cover ? *cover : st;
  auto sinks = run_trajectories(sampler, start, dir, cfg.reach,
                                [&] { return std::make_unique<LengthSink>(proto, eps, canon); });
  std::vector<ReachGrid> out = std::move(static_cast<LengthSink&>(*sinks.front()).grids_);
  for (std::size_t w = 1; w < sinks.size(); ++w) {
    auto& other = static_cast<LengthSink&>(*sinks[w]).grids_;
    for (std::size_t i = 0; i < out.size(); ++i) out[i].merge(other[i]);
  }
  for (std::size_t i = 1; i < out.size(); ++i) out[i].meta().truncated = out[0].meta().truncated;
  return out;
}

ReachGrid outer_ball(const SubSpaceTime& st, const Vec& p, double eps, Direction dir,
                     const SeparationConfig& cfg, const GroupAction* action,
                     const OuterBallOptions& opts) {
  ReachGrid out =
      std::move(outer_ball_multi(st, p, eps, dir, cfg, action, {cfg.reach.resolution}).front());
  const Vec start = action ? action->canonicalize(p) : p;
  std::optional<SubSpaceTime> cover;
  if (action) cover.emplace(st.with_domain(action->cover_box(cfg.reach.copies)));
  const SubSpaceTime& sampler = cover ? *cover : st;

  if (opts.refine_frontier && opts.max_refine > 0) {
    std::vector<std::pair<double, std::size_t>> frontier;
    for (std::size_t i = 0; i < out.cell_count(); ++i) {
      if (out.marked(i) || !touches_marked(out, i)) continue;
      double d = 0.0;
      if (!opts.focus.empty()) {
        d = std::numeric_limits<double>::infinity();
        for (const Vec& f : opts.focus) d = std::min(d, (out.cell_center(i) - f).norm());
      }
      frontier.emplace_back(d, i);
    }
    std::stable_sort(frontier.begin(), frontier.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    if (static_cast<int>(frontier.size()) > opts.max_refine) frontier.resize(opts.max_refine);
    SeparationConfig small = cfg;
    small.reach.samples = std::min<std::uint64_t>(cfg.reach.samples, opts.refine_samples);
    for (const auto& [d, i] : frontier) {
      const Vec r = out.cell_center(i);
      if (!sampler.admissible(r)) continue;
      const SeparationEstimate e = time_separation(st, start, r, small, dir, action);
      if (e.reached && e.value > eps) out.mark(i);
    }
  }
  return out;
}

nlohmann::ordered_json TriangleCheck::to_json() const {
  nlohmann::ordered_json j;
  j["lhs"] = lhs;
  j["rhs"] = rhs;
  j["slack"] = slack;
  j["holds"] = holds;
  j["pr"] = pr.to_json();
  j["rq"] = rq.to_json();
  j["pq"] = pq.to_json();
  return j;
}

TriangleCheck reverse_triangle_check(const SubSpaceTime& st, const Vec& p, const Vec& r,
                                     const Vec& q, const SeparationConfig& cfg, double tolerance) {
  TriangleCheck t;
  t.pr = time_separation(st, p, r, cfg);
  t.rq = time_separation(st, r, q, cfg);
  std::vector<ControlSignal> warm;
  if (t.pr.reached && t.rq.reached) {
    t.lhs = t.pr.value + t.rq.value;
    const ControlSignal& a = t.pr.curve->controls;
    const ControlSignal& b = t.rq.curve->controls;
    std::vector<double> d = a.durations();
    std::vector<Vec> rows = a.rows();
    d.insert(d.end(), b.durations().begin(), b.durations().end());
    rows.insert(rows.end(), b.rows().begin(), b.rows().end());
    warm.emplace_back(std::move(d), std::move(rows), Strictness::Nonspacelike);
  }
  SeparationConfig direct = cfg;
  direct.intervals = std::max(cfg.intervals, warm.empty() ? 0 : warm.front().steps());
  t.pq = time_separation(st, p, q, direct, Direction::Future, nullptr, warm);
  t.rhs = t.pq.value;
  t.slack = t.rhs - t.lhs;
  t.holds = t.slack >= -tolerance;
  return t;
}

}  // namespace causalreach
