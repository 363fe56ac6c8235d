#include "causalreach/topology.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>

#include "causalreach/digest.hpp"
#include "causalreach/errors.hpp"
#include "causalreach/rng.hpp"

namespace causalreach {

std::string_view to_string(Membership m) {
  switch (m) {
    case Membership::In: return "in";
    case Membership::Out: return "out";
    case Membership::Unknown: return "unknown";
  }
  return "?";
}

std::string_view to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::Tau: return "tau";
    case FamilyKind::Alex: return "alex";
    case FamilyKind::AlexOpen: return "alexopen";
    case FamilyKind::TSep: return "tsep";
  }
  return "?";
}

FamilyKind family_kind_from_string(std::string_view s) {
  std::string t;
  for (char c : s)
    if (c != '_' && c != '-') t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "tau") return FamilyKind::Tau;
  if (t == "alex") return FamilyKind::Alex;
  if (t == "alexopen") return FamilyKind::AlexOpen;
  if (t == "tsep" || t == "ts") return FamilyKind::TSep;
  throw ConfigError("unknown family '" + std::string(s) + "'; expected tau, alex, alexopen, tsep");
}

std::string_view to_string(Tri t) {
  switch (t) {
    case Tri::False: return "false";
    case Tri::True: return "true";
    case Tri::Unknown: return "unknown";
  }
  return "?";
}

TopologyConfig TopologyConfig::from_entry(const RegistryEntry& e) {
  TopologyConfig c;
  c.resolution = e.topology.resolution;
  c.samples = e.topology.samples;
  c.horizon = e.topology.horizon;
  c.relay_rounds = e.topology.relay_rounds;
  c.closed_form = e.topology.closed_form_families;
  return c;
}

nlohmann::ordered_json TopologyConfig::to_json() const {
  nlohmann::ordered_json j;
  j["resolution"] = resolution;
  j["samples"] = samples;
  j["horizon"] = horizon;
  j["seed"] = seed;
  j["probes"] = probes;
  j["copies"] = copies;
  j["relay_rounds"] = relay_rounds;
  j["closed_form"] = closed_form;
  return j;
}

std::vector<Vec> probe_points(const RegistryEntry& e, const TopologyConfig& cfg) {
  const Box& b = e.topology.probe_box;
  const GroupAction* act = e.action_ptr();
  Philox rng(cfg.seed, 0x70b0);
  std::vector<Vec> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < cfg.probes && attempts++ < 100 * cfg.probes) {
    Vec p(b.dim());
    for (int i = 0; i < b.dim(); ++i) p[i] = rng.uniform(b.lo[i], b.hi[i]);
    if (act) p = act->canonicalize(p);
    if (!e.structure.admissible(p)) continue;
    out.push_back(p);
  }
  for (const Vec& d : e.documented_points) out.push_back(act ? act->canonicalize(d) : d);
  return out;
}

Box family_box(const RegistryEntry& e) {
  if (e.action) return e.action->fundamental_box;
  const Box wide = e.topology.probe_box.expanded(0.15);
  const Box& d = e.structure.domain();
  return Box(wide.lo.cwiseMax(d.lo), wide.hi.cwiseMin(d.hi));
}

namespace {

ReachConfig reach_config(const RegistryEntry& e, const TopologyConfig& cfg, Strictness s) {
  ReachConfig rc;
  rc.horizon = cfg.horizon;
  rc.samples = cfg.samples;
  rc.seed = cfg.seed;
  rc.resolution = cfg.resolution;
  rc.strictness = s;
  rc.box = family_box(e);
  rc.threads = cfg.threads;
  rc.copies = cfg.copies;
  rc.relay_rounds = cfg.relay_rounds;
  return rc;
}

SetFamily empty_family(const RegistryEntry& e, FamilyKind kind, const TopologyConfig& cfg) {
  SetFamily f;
  f.kind = kind;
  f.config = cfg;
  f.config_digest = hex_digest(cfg.to_json().dump() + e.name);
  if (e.action) f.canonicalize = e.action->canonicalize;
  const Box box = family_box(e);
  for (int r : {cfg.resolution, 2 * cfg.resolution})
    f.layout.push_back(ReachGrid::cubic(box, r, GridSemantics::UnderI, GridMeta{}));
  return f;
}

std::string point_label(const Vec& p) { return "(" + format_point(p) + ")"; }

// Generators x- and x+ of the interval around x along the time orientation.
std::optional<std::pair<Vec, Vec>> flow_pair(const RegistryEntry& e, const Vec& x, double t) {
  try {
    const Vec lo = time_flow(e.structure, x, -t, e.action_ptr());
    const Vec hi = time_flow(e.structure, x, t, e.action_ptr());
    return std::make_pair(lo, hi);
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

}  // namespace

double SetFamily::min_scale() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : sets) m = std::min(m, s.scale);
  return sets.empty() ? 0.0 : m;
}

namespace {

// Cell index of x in grid g, clamped to the box; nullopt outside.
std::optional<std::vector<int>> cell_of(const ReachGrid& g, const Vec& x) {
  const auto idx = g.locate(x);
  if (!idx) return std::nullopt;
  return g.unravel(*idx);
}

bool in_block(const ReachGrid& g, const Vec& center, std::size_t index) {
  const auto c = cell_of(g, center);
  if (!c) return false;
  const auto i = g.unravel(index);
  for (std::size_t a = 0; a < i.size(); ++a)
    if (std::abs(i[a] - (*c)[a]) > 1) return false;
  return true;
}

// Some cell of the 3^n block around x's cell is marked.
bool marked_near(const ReachGrid& g, const Vec& x) {
  const auto c = cell_of(g, x);
  if (!c) return false;
  const int n = g.dim();
  std::vector<int> off(static_cast<std::size_t>(n), -1), cur(static_cast<std::size_t>(n));
  while (true) {
    bool inside = true;
    for (int a = 0; a < n; ++a) {
      cur[a] = (*c)[a] + off[a];
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

Membership SetFamily::contains(std::size_t i, const Vec& x) const {
  const FamilySet& s = sets.at(i);
  const Vec xc = canonicalize ? canonicalize(x) : x;
  bool m[2] = {false, false};
  switch (s.shape) {
    case FamilySet::Shape::Box:
      return s.box.contains_open(xc) ? Membership::In : Membership::Out;
    case FamilySet::Shape::Predicate:
      return s.predicate(xc) ? Membership::In : Membership::Out;
    case FamilySet::Shape::Cells:
      for (int l = 0; l < 2; ++l) {
        const auto idx = layout[l].locate(xc);
        m[l] = idx && in_block(layout[l], s.centers.front(), *idx);
      }
      break;
    case FamilySet::Shape::Grid: {
      // Marks are evidence and gaps are not: the fine level only has to
      // confirm a coarse mark within one of its cells.
      const bool coarse = s.grids[0].contains_point(xc);
      const bool fine = s.grids[1].contains_point(xc);
      if (coarse && (fine || marked_near(s.grids[1], xc))) return Membership::In;
      if (!coarse && !fine) return Membership::Out;
      return Membership::Unknown;
    }
  }
  if (m[0] && m[1]) return Membership::In;
  if (!m[0] && !m[1]) return Membership::Out;
  return Membership::Unknown;
}

SetFamily build_family(const RegistryEntry& e, FamilyKind kind, const std::vector<Vec>& anchors,
                       const TopologyConfig& cfg) {
  if (kind == FamilyKind::Alex) return build_alexandrov_families(e, anchors, cfg).first;
  if (kind == FamilyKind::AlexOpen) return build_alexandrov_families(e, anchors, cfg).second;

  SetFamily f = empty_family(e, kind, cfg);
  const double eps = e.topology.interval_eps;
  if (kind == FamilyKind::Tau) {
    const double r = e.topology.tau_radius;
    for (const Vec& a : anchors) {
      FamilySet b;
      b.label = "box" + point_label(a);
      b.shape = FamilySet::Shape::Box;
      b.centers = {a};
      b.generators = {a};
      b.eps = r;
      b.scale = r;
      b.box = Box::centered(a, r);
      f.sets.push_back(std::move(b));
      FamilySet c;
      c.label = "cells" + point_label(a);
      c.shape = FamilySet::Shape::Cells;
      c.centers = {a};
      c.generators = {a};
      c.scale = 0.0;
      f.sets.push_back(std::move(c));
    }
    return f;
  }

  // TSep: O+(x-, eps/10) ∩ O-(x+, eps/10) with x± = flow(x, ±0.15 eps), well
  // inside the anchor's own interval, which may be only a few cells thick.
  SeparationConfig sc;
  sc.reach = reach_config(e, cfg, Strictness::Nonspacelike);
  const std::vector<int> res = {cfg.resolution, 2 * cfg.resolution};
  for (const Vec& x : anchors) {
    const auto gen = flow_pair(e, x, 0.15 * eps);
    if (!gen) continue;
    const auto fut = outer_ball_multi(e.structure, gen->first, 0.1 * eps, Direction::Future, sc,
                                      e.action_ptr(), res);
    const auto past = outer_ball_multi(e.structure, gen->second, 0.1 * eps, Direction::Past, sc,
                                       e.action_ptr(), res);
    FamilySet s;
    s.label = "tsep" + point_label(x);
    s.centers = {x};
    s.generators = {gen->first, gen->second};
    s.eps = eps;
    s.scale = 0.3 * eps;
    for (int l = 0; l < 2; ++l) {
      ReachGrid g = grid_intersection(fut[l], past[l]);
      g.set_semantics(GridSemantics::UnderOuterBall);
      s.grids.push_back(std::move(g));
    }
    f.sets.push_back(std::move(s));
  }
  return f;
}

std::pair<SetFamily, SetFamily> build_alexandrov_families(const RegistryEntry& e,
                                                          const std::vector<Vec>& anchors,
                                                          const TopologyConfig& cfg) {
  SetFamily alex = empty_family(e, FamilyKind::Alex, cfg);
  SetFamily open = empty_family(e, FamilyKind::AlexOpen, cfg);
  const double eps = e.topology.interval_eps;
  if (cfg.closed_form && e.has_predicate("chronological_future")) {
    // The relation is a strict inequality, so each interval is already open.
    const PairPredicate chron = e.predicates.at("chronological_future");
    for (const Vec& x : anchors) {
      const auto gen = flow_pair(e, x, eps);
      if (!gen) continue;
      FamilySet a;
      a.label = "interval" + point_label(x);
      a.shape = FamilySet::Shape::Predicate;
      a.centers = {x};
      a.generators = {gen->first, gen->second};
      a.eps = eps;
      a.scale = eps;
      a.predicate = [chron, lo = gen->first, hi = gen->second](const Vec& y) {
        return chron(lo, y) && chron(y, hi);
      };
      FamilySet o = a;
      o.label = "open_interval" + point_label(x);
      alex.sets.push_back(std::move(a));
      open.sets.push_back(std::move(o));
    }
    return {std::move(alex), std::move(open)};
  }
  const ReachConfig rc = reach_config(e, cfg, Strictness::Timelike);
  const std::vector<int> res = {cfg.resolution, 2 * cfg.resolution};
  for (const Vec& x : anchors) {
    const auto gen = flow_pair(e, x, eps);
    if (!gen) continue;
    const auto fut =
        sample_reach_multi(e.structure, e.action_ptr(), gen->first, Direction::Future, rc, res);
    const auto past =
        sample_reach_multi(e.structure, e.action_ptr(), gen->second, Direction::Past, rc, res);
    FamilySet a;
    a.label = "interval" + point_label(x);
    a.centers = {x};
    a.generators = {gen->first, gen->second};
    a.eps = eps;
    a.scale = eps;
    FamilySet o = a;
    o.label = "open_interval" + point_label(x);
    for (int l = 0; l < 2; ++l) {
      a.grids.push_back(interval_from_grids(fut[l], past[l], gen->first, gen->second, false));
      // A closing fills single-cell sampling holes before the erosion.
      o.grids.push_back(interval_from_grids(grid_interior(grid_closure(fut[l])),
                                            grid_interior(grid_closure(past[l])), gen->first,
                                            gen->second, true));
      a.grids.back().set_semantics(GridSemantics::DerivedIntersection);
      o.grids.back().set_semantics(GridSemantics::DerivedInterior);
    }
    alex.sets.push_back(std::move(a));
    open.sets.push_back(std::move(o));
  }
  return {std::move(alex), std::move(open)};
}

bool SeparationMatrix::inseparable(std::size_t i, std::size_t j) const {
  return entry[i][j] == Tri::False && entry[j][i] == Tri::False;
}

nlohmann::ordered_json SeparationMatrix::to_json() const {
  nlohmann::ordered_json j;
  auto& pts = j["points"] = nlohmann::ordered_json::array();
  for (const Vec& p : points) pts.push_back(format_point(p));
  auto& m = j["matrix"] = nlohmann::ordered_json::array();
  for (const auto& row : entry) {
    auto r = nlohmann::ordered_json::array();
    for (Tri t : row) r.push_back(std::string(to_string(t)));
    m.push_back(std::move(r));
  }
  return j;
}

SeparationMatrix separation_matrix(const std::vector<Vec>& points, const SetFamily& family) {
  const std::size_t n = points.size();
  std::vector<std::vector<Membership>> mem(family.sets.size(), std::vector<Membership>(n));
  for (std::size_t s = 0; s < family.sets.size(); ++s)
    for (std::size_t i = 0; i < n; ++i) mem[s][i] = family.contains(s, points[i]);
  SeparationMatrix out;
  out.points = points;
  out.entry.assign(n, std::vector<Tri>(n, Tri::False));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      Tri t = Tri::False;
      for (std::size_t s = 0; s < mem.size() && t != Tri::True; ++s) {
        const Membership a = mem[s][i], b = mem[s][j];
        if (a == Membership::In && b == Membership::Out)
          t = Tri::True;
        else if (a != Membership::Out && b != Membership::In)
          t = Tri::Unknown;
      }
      out.entry[i][j] = t;
    }
  return out;
}

std::string RefinementResult::verdict() const {
  if (!witnesses.empty()) return "witness-found";
  if (inconclusive > 0) return "inconclusive";
  return "consistent-with-inclusion";
}

nlohmann::ordered_json RefinementResult::to_json() const {
  nlohmann::ordered_json j;
  j["coarse"] = std::string(to_string(coarse));
  j["fine"] = std::string(to_string(fine));
  j["verdict"] = verdict();
  auto& w = j["witnesses"] = nlohmann::ordered_json::array();
  for (const auto& x : witnesses) w.push_back({{"set", x.set_label}, {"point", format_point(x.point)}});
  j["tested"] = tested;
  j["inconclusive"] = inconclusive;
  return j;
}

namespace {

void set_block(BitSet& bits, const ReachGrid& g, const Vec& center) {
  const auto c = cell_of(g, center);
  if (!c) return;
  const int n = g.dim();
  std::vector<int> off(static_cast<std::size_t>(n), -1), cur(static_cast<std::size_t>(n));
  while (true) {
    bool inside = true;
    for (int a = 0; a < n; ++a) {
      cur[a] = (*c)[a] + off[a];
      inside = inside && cur[a] >= 0 && cur[a] < g.dims()[a];
    }
    if (inside) bits.set(g.ravel(cur));
    int a = 0;
    while (a < n && off[a] == 1) off[a++] = -1;
    if (a == n) return;
    ++off[a];
  }
}

// Cells of g meeting the box (outer) or lying inside it (inner).
BitSet raster_box(const ReachGrid& g, const Box& b, bool inner) {
  BitSet bits(g.cell_count());
  const int n = g.dim();
  const Vec h = g.cell_size();
  std::vector<int> lo(n), hi(n);
  for (int a = 0; a < n; ++a) {
    const double fl = (b.lo[a] - g.box().lo[a]) / h[a];
    const double fh = (b.hi[a] - g.box().lo[a]) / h[a];
    lo[a] = inner ? static_cast<int>(std::ceil(fl - 1e-9)) : static_cast<int>(std::floor(fl));
    hi[a] = inner ? static_cast<int>(std::floor(fh + 1e-9)) - 1 : static_cast<int>(std::ceil(fh)) - 1;
    lo[a] = std::max(lo[a], 0);
    hi[a] = std::min(hi[a], g.dims()[a] - 1);
    if (lo[a] > hi[a]) return bits;
  }
  std::vector<int> cur = lo;
  while (true) {
    bits.set(g.ravel(cur));
    int a = 0;
    while (a < n && cur[a] == hi[a]) cur[a] = lo[a], ++a;
    if (a == n) return bits;
    ++cur[a];
  }
}

// Whether the predicate holds at every (inner) or some (outer) of the
// center and corners of cell i.
bool predicate_cell(const ReachGrid& g, std::size_t i, const PointPredicate& pred, bool inner,
                    const Canonicalizer& canon) {
  const int n = g.dim();
  const Box c = g.cell_box(i);
  const auto test = [&](const Vec& y) { return pred(canon ? canon(y) : y); };
  bool any = test(c.center()), all = any;
  for (int m = 0; m < (1 << n) && (inner ? all : !any); ++m) {
    Vec y = c.lo;
    for (int a = 0; a < n; ++a)
      if (m & (1 << a)) y[a] = c.hi[a];
    const bool v = test(y);
    any = any || v;
    all = all && v;
  }
  return inner ? all : any;
}

class RasterCache {
 public:
  explicit RasterCache(const SetFamily& f) : f_(f) {}

  const BitSet& get(std::size_t set, int level, bool inner) {
    const auto key = std::make_tuple(set, level, inner);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const FamilySet& s = f_.sets[set];
    const ReachGrid& g = f_.layout[level];
    BitSet bits;
    switch (s.shape) {
      case FamilySet::Shape::Grid: bits = s.grids[level].cells(); break;
      case FamilySet::Shape::Box: bits = raster_box(g, s.box, inner); break;
      case FamilySet::Shape::Predicate:
        throw ConfigError("predicate sets are not rasterized");
      case FamilySet::Shape::Cells:
        bits = BitSet(g.cell_count());
        set_block(bits, g, s.centers.front());
        break;
    }
    return cache_.emplace(key, std::move(bits)).first->second;
  }

 private:
  const SetFamily& f_;
  std::map<std::tuple<std::size_t, int, bool>, BitSet> cache_;
};

// Outer cells of fine set f lie in the inner cells of coarse set b. Predicate
// sets are evaluated cell by cell and the scan stops at the first miss.
bool inside(const SetFamily& fine, std::size_t f, RasterCache& fc, const SetFamily& coarse,
            std::size_t b, RasterCache& cc, int level) {
  const FamilySet& F = fine.sets[f];
  const FamilySet& B = coarse.sets[b];
  const ReachGrid& g = fine.layout[level];
  const bool fp = F.shape == FamilySet::Shape::Predicate;
  const bool bp = B.shape == FamilySet::Shape::Predicate;
  if (!fp && !bp) return fc.get(f, level, false).subset_of(cc.get(b, level, true));
  if (!fp) {
    const BitSet& bits = fc.get(f, level, false);
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits.test(i) && !predicate_cell(g, i, B.predicate, true, coarse.canonicalize))
        return false;
    return true;
  }
  // Visit cells in a scattered order so a miss anywhere turns up early.
  const std::size_t n = g.cell_count();
  std::size_t stride = 2654435761u % n;
  while (std::gcd(stride, n) != 1) ++stride;
  for (std::size_t k = 0, i = 0; k < n; ++k, i = (i + stride) % n) {
    const bool in_b = bp ? predicate_cell(g, i, B.predicate, true, coarse.canonicalize)
                         : cc.get(b, level, true).test(i);
    if (!in_b && predicate_cell(g, i, F.predicate, false, fine.canonicalize)) return false;
  }
  return true;
}

}  // namespace

RefinementResult refinement_witness(const SetFamily& coarse, const SetFamily& fine) {
  RefinementResult out;
  out.coarse = coarse.kind;
  out.fine = fine.kind;
  for (int l = 0; l < 2; ++l)
    if (!coarse.layout[l].same_layout(fine.layout[l]))
      throw ConfigError("families must share the grid layout");
  RasterCache cc(coarse), fc(fine);
  const double min_fine = fine.min_scale();
  // Small fine sets first: they are the likeliest to fit.
  std::vector<std::size_t> order(fine.sets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fine.sets[a].scale < fine.sets[b].scale;
  });
  for (std::size_t b = 0; b < coarse.sets.size(); ++b) {
    const FamilySet& B = coarse.sets[b];
    if (B.scale < min_fine) continue;
    for (const Vec& p : B.centers) {
      if (coarse.contains(b, p) != Membership::In) continue;
      ++out.tested;
      bool found[2] = {false, false};
      for (std::size_t f : order) {
        if (fine.contains(f, p) != Membership::In) continue;
        for (int l = 0; l < 2; ++l)
          if (!found[l] && inside(fine, f, fc, coarse, b, cc, l)) found[l] = true;
        if (found[0] && found[1]) break;
      }
      if (found[0] != found[1]) {
        ++out.inconclusive;
      } else if (!found[0]) {
        out.witnesses.push_back({B.label, p});
      }
    }
  }
  return out;
}

nlohmann::ordered_json StrongCausalityReport::to_json() const {
  nlohmann::ordered_json j;
  j["point"] = format_point(point);
  j["radii"] = radii;
  j["curves"] = curves;
  j["violation_counts"] = violation_counts;
  auto& v = j["violations"] = nlohmann::ordered_json::array();
  for (const auto& w : violations) {
    nlohmann::ordered_json e;
    e["radius"] = w.radius;
    e["source"] = w.source;
    e["start"] = format_point(w.curve.start());
    e["exit_time"] = w.event.exit_time;
    e["reentry_time"] = w.event.reentry_time.value_or(-1.0);
    v.push_back(std::move(e));
  }
  j["verdict"] = violated() ? std::string(kViolated) : std::string(kNoViolation);
  return j;
}

StrongCausalityReport strong_causality_probe(const SubSpaceTime& st, const GroupAction* action,
                                             const NeighbourhoodFamily& nbhd, const Vec& p,
                                             const std::vector<double>& radii,
                                             const ReachConfig& cfg,
                                             const std::vector<DocumentedLoop>& extra) {
  cfg.validate();
  constexpr std::size_t kWitnessesPerRadius = 3;
  const Vec pc = action ? action->canonicalize(p) : p;
  std::optional<SubSpaceTime> cover;
  if (action) cover.emplace(st.with_domain(action->cover_box(cfg.copies)));
  const SubSpaceTime& space = cover ? *cover : st;
  const Canonicalizer canon = action ? action->canonicalize : Canonicalizer{};
  ReachConfig rc = cfg;
  rc.strictness = Strictness::Nonspacelike;
  IntegrateOptions opts;
  opts.max_dt = rc.horizon / rc.integrator_steps;

  StrongCausalityReport rep;
  rep.point = pc;
  rep.radii = radii;
  for (double r : radii) {
    const PointPredicate U = nbhd(pc, r);
    std::uint64_t tested = 0, count = 0;
    std::size_t kept = 0;
    const auto test = [&](const HorizontalCurve& c, const std::string& source) {
      ++tested;
      for (const TubeEvent& ev : tube_events(c, U, canon)) {
        if (!ev.reentry_time) continue;
        ++count;
        if (kept < kWitnessesPerRadius) {
          rep.violations.push_back({r, source, c, ev});
          ++kept;
        }
        break;
      }
    };
    for (const DocumentedLoop& d : extra) {
      const Vec s = action ? action->canonicalize(d.start) : d.start;
      if (!U(s) || !space.admissible(d.start)) continue;
      IntegrateOptions o;
      o.max_dt = d.controls.total_time() / 1024.0;
      test(integrate(space, d.start, d.controls, o), d.description);
    }
    Philox rng(cfg.seed, 0x5c00 + static_cast<std::uint64_t>(std::llround(r * 1e6)));
    for (std::uint64_t i = 0; i < rc.samples; ++i) {
      // Start points are drawn from a box around p and kept when inside U.
      Vec start = pc;
      for (int attempt = 0; attempt < 64; ++attempt) {
        Vec q(pc.size());
        for (int a = 0; a < q.size(); ++a) q[a] = pc[a] + rng.uniform(-4.0 * r, 4.0 * r);
        if (U(q) && space.admissible(q)) {
          start = q;
          break;
        }
      }
      const ControlSignal ctrl = sample_controls(rc, st.rank(), i, 1.0);
      test(integrate(space, start, ctrl, opts), "sampled trajectory " + std::to_string(i));
    }
    rep.curves.push_back(tested);
    rep.violation_counts.push_back(count);
  }
  return rep;
}

nlohmann::ordered_json HierarchyReport::to_json() const {
  nlohmann::ordered_json j;
  j["chronological"] = chronological;
  j["causal"] = causal;
  j["strongly_causal"] = strongly_causal;
  j["witnesses"] = witnesses;
  return j;
}

HierarchyReport hierarchy_report(const RegistryEntry& e, const ReachConfig& cfg) {
  HierarchyReport rep;
  rep.witnesses = nlohmann::ordered_json::object();
  const GroupAction* act = e.action_ptr();
  std::vector<Vec> points;
  if (act)
    for (const auto& loop : act->documented_loops) points.push_back(loop.start);
  for (const Vec& d : e.documented_points) points.push_back(d);

  std::optional<ClosedCurveWitness> ctc;
  for (const Vec& p : points) {
    if (!e.structure.admissible(p)) continue;
    ctc = find_closed_causal(e.structure, act, p, cfg);
    if (ctc) break;
  }
  rep.chronological = ctc ? std::string(kViolated) : std::string(kNoViolation);
  if (ctc) rep.witnesses["chronological"] = ctc->to_json();

  // A closed timelike curve is a closed causal curve; otherwise look for
  // two-point cycles p <= q <= p between documented points and far cells.
  if (ctc) {
    rep.causal = std::string(kViolated);
    rep.witnesses["causal"] = "closed timelike curve";
  } else {
    ReachConfig rc = cfg;
    rc.strictness = Strictness::Nonspacelike;
    std::optional<nlohmann::ordered_json> cycle;
    for (const Vec& p : points) {
      if (cycle || !e.structure.admissible(p)) continue;
      const ReachGrid fut = act ? reach_quotient(e.structure, *act, p, Direction::Future, rc)
                                : sample_reach(e.structure, p, Direction::Future, rc);
      const ReachGrid past = act ? reach_quotient(e.structure, *act, p, Direction::Past, rc)
                                 : sample_reach(e.structure, p, Direction::Past, rc);
      const auto home = fut.locate(act ? act->canonicalize(p) : p);
      for (std::size_t i = 0; i < fut.cell_count() && !cycle; ++i) {
        if (!fut.marked(i) || !past.marked(i)) continue;
        if (home && in_block(fut, fut.cell_center(*home), i)) continue;
        cycle = nlohmann::ordered_json{{"p", format_point(p)},
                                       {"q", format_point(fut.cell_center(i))}};
      }
    }
    rep.causal = cycle ? std::string(kViolated) : std::string(kNoViolation);
    if (cycle) rep.witnesses["causal"] = *cycle;
  }

  bool strong_violation = false;
  ReachConfig pc = cfg;
  for (const Vec& p : e.documented_points) {
    if (!e.structure.admissible(p)) continue;
    const auto r = strong_causality_probe(e.structure, act, e.neighbourhood, p, {0.1, 0.05}, pc,
                                          e.probe_curves);
    if (r.violated()) {
      strong_violation = true;
      rep.witnesses["strongly_causal"] = r.to_json();
      break;
    }
  }
  rep.strongly_causal = strong_violation ? std::string(kViolated) : std::string(kNoViolation);
  return rep;
}

nlohmann::ordered_json PullbackReport::to_json() const {
  nlohmann::ordered_json j;
  j["curve_samples"] = curve_samples;
  auto& arr = j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& p : pairs) {
    nlohmann::ordered_json e;
    e["s"] = p.s;
    e["t"] = p.t;
    auto iv = nlohmann::ordered_json::array();
    for (const auto& [a, b] : p.intervals) iv.push_back({a, b});
    e["intervals"] = iv;
    e["open"] = p.open;
    arr.push_back(std::move(e));
  }
  return j;
}

namespace {

Vec curve_at(const HorizontalCurve& c, double u) {
  return c.at(c.times.front() + u * c.duration());
}

std::vector<ReachGrid> timelike_grids(const SubSpaceTime& st, const GroupAction* action,
                                      const Vec& p, Direction dir, const ReachConfig& cfg) {
  ReachConfig rc = cfg;
  rc.strictness = Strictness::Timelike;
  return sample_reach_multi(st, action, p, dir, rc, {cfg.resolution, 2 * cfg.resolution});
}

}  // namespace

std::vector<std::pair<double, ChronVerdict>> future_along_curve(const SubSpaceTime& st,
                                                                const GroupAction* action,
                                                                const HorizontalCurve& curve,
                                                                double s, const ReachConfig& cfg,
                                                                int curve_samples) {
  const auto grids = timelike_grids(st, action, curve_at(curve, s), Direction::Future, cfg);
  std::vector<std::pair<double, ChronVerdict>> out;
  for (int k = 0; k < curve_samples; ++k) {
    const double u = static_cast<double>(k) / (curve_samples - 1);
    Vec x = curve_at(curve, u);
    if (action) x = action->canonicalize(x);
    out.emplace_back(u, classify_in_grids(grids, x));
  }
  return out;
}

PullbackReport pullback_check(const SubSpaceTime& st, const GroupAction* action,
                              const HorizontalCurve& curve,
                              const std::vector<std::pair<double, double>>& pairs,
                              const ReachConfig& cfg, int curve_samples) {
  if (curve_samples < 3) throw ConfigError("pullback_check needs at least 3 curve samples");
  PullbackReport rep;
  rep.curve_samples = curve_samples;
  for (const auto& [s, t] : pairs) {
    const auto fut = timelike_grids(st, action, curve_at(curve, s), Direction::Future, cfg);
    const auto past = timelike_grids(st, action, curve_at(curve, t), Direction::Past, cfg);
    PullbackPair pp{s, t, {}, true};
    std::vector<bool> in(curve_samples), interior(curve_samples);
    // Next to the two apexes the cones are thinner than a cell, so samples
    // there are not held to the interior test.
    Vec apex[2] = {curve_at(curve, s), curve_at(curve, t)};
    if (action)
      for (Vec& a : apex) a = action->canonicalize(a);
    const double near = 2.0 * fut.front().cell_diagonal();
    for (int k = 0; k < curve_samples; ++k) {
      Vec x = curve_at(curve, static_cast<double>(k) / (curve_samples - 1));
      if (action) x = action->canonicalize(x);
      const ChronVerdict a = classify_in_grids(fut, x), b = classify_in_grids(past, x);
      // A mark at either resolution is evidence of membership.
      in[k] = a != ChronVerdict::Outside && b != ChronVerdict::Outside;
      interior[k] = (a == ChronVerdict::Interior && b == ChronVerdict::Interior) ||
                    (x - apex[0]).norm() < near || (x - apex[1]).norm() < near;
    }
    for (int k = 0; k < curve_samples;) {
      if (!in[k]) {
        ++k;
        continue;
      }
      int e = k;
      while (e + 1 < curve_samples && in[e + 1]) ++e;
      const double h = 1.0 / (curve_samples - 1);
      pp.intervals.emplace_back(k * h, e * h);
      if (e == k) pp.open = false;
      for (int m = k + 1; m < e; ++m)
        if (!interior[m]) pp.open = false;
      k = e + 1;
    }
    rep.pairs.push_back(std::move(pp));
  }
  return rep;
}

nlohmann::ordered_json TransitivityReport::to_json() const {
  nlohmann::ordered_json j;
  j["base_points"] = base_points;
  j["triples"] = triples;
  j["counterexamples"] = counterexamples;
  j["skipped"] = skipped;
  auto& ex = j["examples"] = nlohmann::ordered_json::array();
  for (const auto& t : examples)
    ex.push_back({format_point(t[0]), format_point(t[1]), format_point(t[2])});
  return j;
}

namespace {

class HorizonSink : public TrajectorySink {
 public:
  HorizonSink(const ReachGrid& proto, double split, Canonicalizer canon)
      : full(proto), early(proto), split_(split), canon_(std::move(canon)) {}

  void segment(const Vec& a, const Vec& b, double, double, double t_b) override {
    mark_segment(full, a, b, canon_);
    if (t_b <= split_) mark_segment(early, a, b, canon_);
  }

  ReachGrid full, early;

 private:
  double split_;
  Canonicalizer canon_;
};

}  // namespace

TransitivityReport transitivity_check(const RegistryEntry& e, const ReachConfig& cfg,
                                      int triples, int per_point, bool opened) {
  TransitivityReport rep;
  const GroupAction* act = e.action_ptr();
  std::optional<SubSpaceTime> cover;
  if (act) cover.emplace(e.structure.with_domain(act->cover_box(cfg.copies)));
  const SubSpaceTime& space = cover ? *cover : e.structure;
  TopologyConfig tc;
  tc.seed = cfg.seed;
  // Base points whose grids are too thin to test are replaced by later ones.
  tc.probes = 4 * ((triples + per_point - 1) / per_point);
  std::vector<Vec> bases = probe_points(e, tc);
  bases.resize(std::min<std::size_t>(bases.size(), static_cast<std::size_t>(tc.probes)));

  ReachConfig tl = cfg;
  tl.strictness = Strictness::Timelike;
  tl.box = family_box(e);
  ReachConfig ns = tl;
  ns.strictness = Strictness::Nonspacelike;
  IntegrateOptions opts;
  opts.max_dt = cfg.horizon / cfg.integrator_steps;
  Philox rng(cfg.seed, 0x7a75);
  const ReachGrid proto = ReachGrid::cubic(*tl.box, cfg.resolution, GridSemantics::UnderI);
  const Canonicalizer canon = act ? act->canonicalize : Canonicalizer{};

  for (std::size_t b = 0; b < bases.size() && rep.triples < triples; ++b) {
    const Vec& p = bases[b];
    rep.base_points++;
    // One pass fills the full grid and the part reached within half the
    // horizon; q is drawn from the latter so that r stays within reach.
    auto sinks = run_trajectories(space, act ? act->canonicalize(p) : p, Direction::Future, tl,
                                  [&] { return std::make_unique<HorizonSink>(proto, 0.5 * tl.horizon, canon); });
    ReachGrid grid = proto, early = proto;
    for (auto& sk : sinks) {
      grid.merge(static_cast<HorizonSink&>(*sk).full);
      early.merge(static_cast<HorizonSink&>(*sk).early);
    }
    if (opened) grid = grid_interior(grid);
    const ReachGrid near = grid_closure(grid);  // one-cell tolerance
    std::vector<std::size_t> interior;
    if (opened) {
      early = grid_interior(early);
      for (std::size_t i = 0; i < early.cell_count(); ++i)
        if (early.marked(i)) interior.push_back(i);
    }
    int tested = 0;
    const int quota = std::min(per_point, triples - rep.triples);
    for (int k = 0; k < 20 * quota && tested < quota; ++k) {
      Vec q;
      if (opened) {
        // p <<_o q on the grid: q anywhere in an eroded cell of the
        // half-horizon grid.
        if (interior.empty()) {
          ++rep.skipped;
          continue;
        }
        const Box cell = grid.cell_box(interior[rng.below(interior.size())]);
        q = Vec(cell.dim());
        for (int a = 0; a < cell.dim(); ++a) q[a] = rng.uniform(cell.lo[a], cell.hi[a]);
      } else {
        // q on a timelike trajectory of p within the first half of the horizon.
        const std::uint64_t qi = 1 + rng.below(tl.samples);
        const HorizontalCurve cq = integrate(
            space, p, sample_controls(tl, e.structure.rank(), qi, 1.0 - tl.cone_margin), opts);
        if (cq.steps() < 2) {
          ++rep.skipped;
          continue;
        }
        q = cq.at(rng.uniform(0.05, 0.5) * cq.duration());
      }
      const Vec qc = act ? act->canonicalize(q) : q;
      if (!grid.contains_point(qc) || !space.admissible(q)) {
        ++rep.skipped;
        continue;
      }
      // r on a nonspacelike trajectory of q within a quarter of the horizon.
      const std::uint64_t ri = rng.below(ns.samples);
      const HorizontalCurve cr =
          integrate(space, q, sample_controls(ns, e.structure.rank(), ri, 1.0), opts);
      const double tr = rng.uniform(0.0, 0.25) * cr.duration();
      const Vec r = cr.at(tr);
      const Vec rc = act ? act->canonicalize(r) : r;
      // Erosion treats the outside as unmarked, so cells near the box faces
      // cannot be interior; r there says nothing.
      const Box inner(grid.box().lo + 2.0 * grid.cell_size(), grid.box().hi - 2.0 * grid.cell_size());
      if (!(opened ? inner : grid.box()).contains(rc)) {
        ++rep.skipped;
        continue;
      }
      ++rep.triples;
      ++tested;
      if (!near.contains_point(rc)) {
        ++rep.counterexamples;
        if (rep.examples.size() < 5) rep.examples.push_back({p, qc, rc});
      }
    }
  }
  return rep;
}

}  // namespace causalreach
