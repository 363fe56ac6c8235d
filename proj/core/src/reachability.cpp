#include "causalreach/reachability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "causalreach/digest.hpp"
#include "causalreach/errors.hpp"
#include "causalreach/rng.hpp"

namespace causalreach {

void ReachConfig::validate() const {
  if (!(horizon > 0)) throw ConfigError("horizon must be positive");
  if (samples < 1) throw ConfigError("samples must be at least 1");
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (integrator_steps < 1) throw ConfigError("integrator_steps must be at least 1");
  if (resolution < 8) throw ConfigError("resolution must be at least 8");
  if (!(cone_margin >= 0 && cone_margin < 1)) throw ConfigError("cone_margin must lie in [0, 1)");
  if (threads < 0) throw ConfigError("threads must be nonnegative");
  if (copies < 0) throw ConfigError("copies must be nonnegative");
  if (relay_rounds < 0) throw ConfigError("relay_rounds must be nonnegative");
  if (relay_points < 1) throw ConfigError("relay_points must be at least 1");
  if (!(switch_span >= 0)) throw ConfigError("switch_span must be nonnegative");
}

nlohmann::ordered_json ReachConfig::to_json() const {
  nlohmann::ordered_json j;
  j["horizon"] = horizon;
  j["samples"] = samples;
  j["steps"] = steps;
  j["integrator_steps"] = integrator_steps;
  j["seed"] = seed;
  j["strictness"] = std::string(to_string(strictness));
  j["cone_margin"] = cone_margin;
  j["resolution"] = resolution;
  if (box) {
    j["box"] = {{"lo", std::vector<double>(box->lo.data(), box->lo.data() + box->lo.size())},
                {"hi", std::vector<double>(box->hi.data(), box->hi.data() + box->hi.size())}};
  }
  j["copies"] = copies;
  j["relay_rounds"] = relay_rounds;
  j["relay_points"] = relay_points;
  if (switch_span > 0) j["switch_span"] = switch_span;
  return j;
}

std::string ReachConfig::digest() const { return hex_digest(to_json().dump()); }

ControlSignal sample_controls(const ReachConfig& cfg, int rank, std::uint64_t index, double scale) {
  const Strictness strict =
      (scale < 1.0 || cfg.strictness == Strictness::Timelike) ? Strictness::Timelike
                                                               : Strictness::Nonspacelike;
  Vec e0 = Vec::Zero(rank);
  e0[0] = 1.0;
  if (index == 0) return ControlSignal::constant(e0, cfg.horizon, strict);

  Philox rng(cfg.seed, index);
  const int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.steps)));
  std::vector<double> cuts(static_cast<std::size_t>(m - 1));
  for (auto& c : cuts) c = rng.uniform() * cfg.time_span();
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> durations;
  double prev = 0.0;
  for (double c : cuts) {
    if (c >= cfg.horizon) break;
    durations.push_back(c - prev);
    prev = c;
  }
  durations.push_back(cfg.horizon - prev);

  const int d = rank - 1;
  std::vector<Vec> rows;
  rows.reserve(static_cast<std::size_t>(m));
  for (int r = 0; r < m; ++r) {
    Vec u(rank);
    u[0] = 1.0;
    if (d == 1) {
      u[1] = rng.uniform(-1.0, 1.0);
    } else {
      Vec g(d);
      for (int i = 0; i < d; ++i) g[i] = rng.normal();
      const double radius = std::pow(rng.uniform(), 1.0 / d);
      u.tail(d) = g.normalized() * radius;
    }
    u.tail(d) *= scale;
    rows.push_back(u);
  }
  rows.resize(durations.size());
  return ControlSignal(std::move(durations), std::move(rows), strict);
}

namespace {

std::vector<double> pass_scales(const ReachConfig& cfg) {
  const double scaled = 1.0 - cfg.cone_margin;
  if (cfg.strictness == Strictness::Timelike) return {scaled};
  if (cfg.cone_margin > 0) return {scaled, 1.0};
  return {1.0};
}

void run_one(const SubSpaceTime& st, const Vec& p, double sign, const ReachConfig& cfg,
             std::uint64_t index, int pass, double scale, TrajectorySink& sink) {
  const ControlSignal ctrl = sample_controls(cfg, st.rank(), index, scale);
  const double max_dt = cfg.time_span() / cfg.integrator_steps;
  sink.begin(index, pass);
  Vec x = p;
  double len = 0.0, t = 0.0;
  bool truncated = false;
  for (int r = 0; r < ctrl.steps() && !truncated; ++r) {
    const double dur = ctrl.duration(r);
    if (dur <= 0) continue;
    const Vec& u = ctrl.row(r);
    const double speed = std::sqrt(std::max(0.0, 1.0 - u.tail(u.size() - 1).squaredNorm()));
    // With a fixed switch span the substeps sit on multiples of max_dt, so a
    // run at a shorter horizon takes exactly the same steps up to its end.
    const double t1 = t + dur;
    const bool aligned = cfg.switch_span > 0;
    const int nsub =
        aligned ? std::numeric_limits<int>::max()
                : std::max(1, static_cast<int>(std::ceil(dur / max_dt - 1e-9)));
    for (int s = 0; s < nsub && t < t1; ++s) {
      double h = dur / nsub;
      if (aligned) {
        const double next = (std::floor(t / max_dt + 1e-9) + 1.0) * max_dt;
        h = std::min(next, t1) - t;
        if (h <= 1e-14) {
          t = std::min(next, t1);
          continue;
        }
      }
      const Vec k1 = sign * st.velocity(x, u);
      const Vec k2 = sign * st.velocity(x + 0.5 * h * k1, u);
      const Vec k3 = sign * st.velocity(x + 0.5 * h * k2, u);
      const Vec k4 = sign * st.velocity(x + h * k3, u);
      const Vec next = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
      if (!st.admissible(next)) {
        truncated = true;
        break;
      }
      t += h;
      sink.segment(x, next, len, len + h * speed, t);
      x = next;
      len += h * speed;
    }
  }
  sink.end(truncated);
}

}  // namespace

std::vector<std::unique_ptr<TrajectorySink>> run_trajectories(const SubSpaceTime& st, const Vec& p,
                                                              Direction dir, const ReachConfig& cfg,
                                                              const SinkFactory& make_sink) {
  cfg.validate();
  if (!st.admissible(p)) throw DomainError("start point outside domain: " + format_point(p));
  const double sign = dir == Direction::Future ? 1.0 : -1.0;
  const std::vector<double> scales = pass_scales(cfg);
  int workers = cfg.threads == 0 ? static_cast<int>(std::thread::hardware_concurrency()) : cfg.threads;
  workers = static_cast<int>(std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::max(workers, 1)),
                                                       1, cfg.samples));

  std::vector<std::unique_ptr<TrajectorySink>> sinks;
  for (int w = 0; w < workers; ++w) sinks.push_back(make_sink());

  const auto work = [&](int w) {
    for (std::uint64_t i = static_cast<std::uint64_t>(w); i < cfg.samples;
         i += static_cast<std::uint64_t>(workers))
      for (std::size_t pass = 0; pass < scales.size(); ++pass)
        run_one(st, p, sign, cfg, i, static_cast<int>(pass), scales[pass], *sinks[w]);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  return sinks;
}

void mark_segment(ReachGrid& g, const Vec& a, const Vec& b, const Canonicalizer& canon) {
  const Vec d = b - a;
  const Vec& h = g.cell_size();
  double pieces = 1.0;
  for (int i = 0; i < d.size(); ++i) pieces = std::max(pieces, std::abs(d[i]) / (0.5 * h[i]));
  const int n = static_cast<int>(std::ceil(pieces));
  for (int j = 0; j <= n; ++j) {
    const Vec q = a + (static_cast<double>(j) / n) * d;
    g.mark_point(canon ? canon(q) : q);
  }
}

namespace {

class GridSink : public TrajectorySink {
 public:
  GridSink(std::vector<ReachGrid> grids, Canonicalizer canon)
      : grids_(std::move(grids)), canon_(std::move(canon)) {}

  void begin(std::uint64_t index, int pass) override {
    index_ = index;
    pass_ = pass;
    moved_ = false;
  }
  void segment(const Vec& a, const Vec& b, double, double, double) override {
    for (auto& g : grids_) mark_segment(g, a, b, canon_);
    last_ = b;
    moved_ = true;
  }
  void end(bool truncated) override {
    if (truncated) ++grids_.front().meta().truncated;
    if (moved_ && pass_ == 0) ends_.emplace_back(index_, last_);
  }

  std::vector<ReachGrid> grids_;
  Canonicalizer canon_;
  /// Final point of every pass-0 trajectory, keyed by index.
  std::vector<std::pair<std::uint64_t, Vec>> ends_;

 private:
  std::uint64_t index_ = 0;
  int pass_ = 0;
  bool moved_ = false;
  Vec last_;
};

// Evenly spaced picks (by trajectory index) among the collected endpoints.
std::vector<Vec> relay_starts(std::vector<std::pair<std::uint64_t, Vec>> ends, int count,
                              const Canonicalizer& canon, const SubSpaceTime& st) {
  std::sort(ends.begin(), ends.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Vec> out;
  if (ends.empty()) return out;
  const std::size_t n = ends.size();
  const std::size_t k = std::min<std::size_t>(n, static_cast<std::size_t>(count));
  for (std::size_t j = 0; j < k; ++j) {
    const Vec& e = ends[(j * n) / k].second;
    const Vec c = canon ? canon(e) : e;
    if (st.admissible(c)) out.push_back(c);
  }
  return out;
}

}  // namespace

Box default_grid_box(const SubSpaceTime& st, const GroupAction* action, const ReachConfig& cfg) {
  if (cfg.box) return *cfg.box;
  if (action) return action->fundamental_box;
  return st.domain();
}

std::vector<ReachGrid> sample_reach_multi(const SubSpaceTime& st, const GroupAction* action,
                                          const Vec& p, Direction dir, const ReachConfig& cfg,
                                          const std::vector<int>& resolutions) {
  cfg.validate();
  const Box box = default_grid_box(st, action, cfg);
  if (box.dim() != st.dim()) throw ConfigError("grid box dimension mismatch");
  const Vec start = action ? action->canonicalize(p) : p;
  // The source may lie outside the grid box; only the cells it reaches are kept.
  if (!(action ? st.with_domain(action->cover_box(cfg.copies)) : st).admissible(start))
    throw DomainError("point outside domain: " + format_point(p));

  GridMeta meta;
  meta.source = start;
  meta.direction = dir;
  meta.config_digest = cfg.digest();
  meta.manifold = st.name();
  meta.samples = cfg.samples;
  const GridSemantics sem =
      cfg.strictness == Strictness::Timelike ? GridSemantics::UnderI : GridSemantics::UnderJ;
  std::vector<ReachGrid> proto;
  for (int r : resolutions) {
    if (r < 8) throw ConfigError("resolution must be at least 8");
    proto.push_back(ReachGrid::cubic(box, r, sem, meta));
  }

  Canonicalizer canon;
  std::optional<SubSpaceTime> cover;
  if (action) {
    canon = action->canonicalize;
    cover.emplace(st.with_domain(action->cover_box(cfg.copies)));
  }
  const SubSpaceTime& sampler = cover ? *cover : st;
  std::vector<ReachGrid> out = proto;
  std::vector<std::pair<std::uint64_t, Vec>> ends;
  const auto run = [&](const Vec& from, const ReachConfig& c) {
    auto sinks = run_trajectories(sampler, from, dir, c,
                                  [&] { return std::make_unique<GridSink>(proto, canon); });
    for (auto& s : sinks) {
      auto& sink = static_cast<GridSink&>(*s);
      for (std::size_t i = 0; i < out.size(); ++i) out[i].merge(sink.grids_[i]);
      ends.insert(ends.end(), sink.ends_.begin(), sink.ends_.end());
    }
  };
  run(start, cfg);
  // Points reached by a trajectory are in the reachable set, and so is
  // everything reachable from them.
  for (int round = 0; round < cfg.relay_rounds; ++round) {
    const std::vector<Vec> starts = relay_starts(std::move(ends), cfg.relay_points, canon, sampler);
    ends.clear();
    ReachConfig rc = cfg;
    rc.samples = std::max<std::uint64_t>(1, cfg.samples / std::max<std::size_t>(1, starts.size()));
    for (std::size_t j = 0; j < starts.size(); ++j) {
      rc.seed = cfg.seed ^ (0x9E3779B97F4A7C15ull * (1 + round * 1024 + j));
      run(starts[j], rc);
    }
  }
  for (std::size_t i = 1; i < out.size(); ++i) out[i].meta().truncated = out[0].meta().truncated;
  return out;
}

ReachGrid sample_reach(const SubSpaceTime& st, const Vec& p, Direction dir, const ReachConfig& cfg) {
  return std::move(sample_reach_multi(st, nullptr, p, dir, cfg, {cfg.resolution}).front());
}

std::string_view to_string(ChronVerdict v) {
  switch (v) {
    case ChronVerdict::Interior: return "interior";
    case ChronVerdict::Boundary: return "boundary";
    case ChronVerdict::Outside: return "outside";
    case ChronVerdict::Unknown: return "unknown";
  }
  return "?";
}

namespace {

// Whether the cell and its full 3^n neighbourhood are marked and inside.
bool survives_erosion(const ReachGrid& g, std::size_t index) {
  const auto idx = g.unravel(index);
  const int n = g.dim();
  std::vector<int> off(static_cast<std::size_t>(n), -1);
  std::vector<int> cur(static_cast<std::size_t>(n));
  while (true) {
    for (int a = 0; a < n; ++a) {
      cur[a] = idx[a] + off[a];
      if (cur[a] < 0 || cur[a] >= g.dims()[a]) return false;
    }
    if (!g.marked(g.ravel(cur))) return false;
    int a = 0;
    while (a < n && off[a] == 1) off[a++] = -1;
    if (a == n) return true;
    ++off[a];
  }
}

ChronVerdict verdict_at(const ReachGrid& g, const Vec& q) {
  const auto idx = g.locate(q);
  if (!idx || !g.marked(*idx)) return ChronVerdict::Outside;
  return survives_erosion(g, *idx) ? ChronVerdict::Interior : ChronVerdict::Boundary;
}

ReachConfig timelike(ReachConfig cfg) {
  cfg.strictness = Strictness::Timelike;
  return cfg;
}

// Clears the 3^n block around p's cell; p may sit just outside the box.
void clear_neighbourhood(ReachGrid& g, const Vec& p) {
  const int n = g.dim();
  std::vector<int> c(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    const double f = std::floor((p[a] - g.box().lo[a]) / g.cell_size()[a]);
    if (f < -2.0 || f > g.dims()[a] + 1.0) return;
    c[a] = std::min(static_cast<int>(f), g.dims()[a] - (p[a] <= g.box().hi[a] ? 1 : 0));
  }
  std::vector<int> off(static_cast<std::size_t>(n), -1), cur(static_cast<std::size_t>(n));
  while (true) {
    bool inside = true;
    for (int a = 0; a < n; ++a) {
      cur[a] = c[a] + off[a];
      inside = inside && cur[a] >= 0 && cur[a] < g.dims()[a];
    }
    if (inside) g.cells().reset(g.ravel(cur));
    int a = 0;
    while (a < n && off[a] == 1) off[a++] = -1;
    if (a == n) return;
    ++off[a];
  }
}

}  // namespace

ChronVerdict classify_in_grids(const std::vector<ReachGrid>& grids, const Vec& q) {
  if (grids.empty()) return ChronVerdict::Unknown;
  const ChronVerdict first = verdict_at(grids.front(), q);
  for (std::size_t i = 1; i < grids.size(); ++i)
    if (verdict_at(grids[i], q) != first) return ChronVerdict::Unknown;
  return first;
}

ChronVerdict chron_open_at(const SubSpaceTime& st, const Vec& p, const Vec& q,
                           const ReachConfig& cfg, const GroupAction* action) {
  const auto grids = sample_reach_multi(st, action, p, Direction::Future, timelike(cfg),
                                        {cfg.resolution, 2 * cfg.resolution});
  return classify_in_grids(grids, action ? action->canonicalize(q) : q);
}

bool open_chron(const SubSpaceTime& st, const Vec& p, const Vec& q, const ReachConfig& cfg,
                const GroupAction* action) {
  return chron_open_at(st, p, q, cfg, action) == ChronVerdict::Interior;
}

bool open_chron_past(const SubSpaceTime& st, const Vec& q, const Vec& p, const ReachConfig& cfg,
                     const GroupAction* action) {
  const auto grids = sample_reach_multi(st, action, q, Direction::Past, timelike(cfg),
                                        {cfg.resolution, 2 * cfg.resolution});
  return classify_in_grids(grids, action ? action->canonicalize(p) : p) == ChronVerdict::Interior;
}

ReachGrid interval_from_grids(const ReachGrid& fut, const ReachGrid& past, const Vec& p,
                              const Vec& q, bool opened) {
  ReachGrid g = opened ? grid_intersection(grid_interior(fut), grid_interior(past))
                       : grid_intersection(fut, past);
  clear_neighbourhood(g, p);
  clear_neighbourhood(g, q);
  g.meta().source = p;
  return g;
}

std::vector<ReachGrid> alexandrov_interval_multi(const SubSpaceTime& st, const Vec& p,
                                                 const Vec& q, const ReachConfig& cfg, bool opened,
                                                 const GroupAction* action,
                                                 const std::vector<int>& resolutions) {
  auto fut = sample_reach_multi(st, action, p, Direction::Future, timelike(cfg), resolutions);
  auto past = sample_reach_multi(st, action, q, Direction::Past, timelike(cfg), resolutions);
  const Vec pc = action ? action->canonicalize(p) : p;
  const Vec qc = action ? action->canonicalize(q) : q;
  std::vector<ReachGrid> out;
  for (std::size_t i = 0; i < resolutions.size(); ++i)
    out.push_back(interval_from_grids(fut[i], past[i], pc, qc, opened));
  return out;
}

ReachGrid alexandrov_interval(const SubSpaceTime& st, const Vec& p, const Vec& q,
                              const ReachConfig& cfg, bool opened, const GroupAction* action) {
  return std::move(
      alexandrov_interval_multi(st, p, q, cfg, opened, action, {cfg.resolution}).front());
}

Vec time_flow(const SubSpaceTime& st, const Vec& p, double t, const GroupAction* action) {
  if (t == 0) return action ? action->canonicalize(p) : p;
  Vec e0 = Vec::Zero(st.rank());
  e0[0] = 1.0;
  const double T = std::abs(t);
  const int steps = std::max(16, static_cast<int>(std::ceil(T / 0.005)));
  IntegrateOptions opts;
  opts.max_dt = T / steps;
  opts.direction = t > 0 ? Direction::Future : Direction::Past;
  const SubSpaceTime sampler = action ? st.with_domain(action->cover_box(3)) : st;
  const HorizontalCurve c = integrate(sampler, p, ControlSignal::constant(e0, T), opts);
  if (c.exited) throw DomainError("time-orientation flow leaves the domain from " + format_point(p));
  return action ? action->canonicalize(c.end()) : c.end();
}

}  // namespace causalreach
