#include "causalreach/registry.hpp"

#include <cmath>

#include "causalreach/errors.hpp"

namespace causalreach {

namespace {

Mat diag_metric(int k) {
  Mat g = Mat::Identity(k, k);
  g(0, 0) = -1.0;
  return g;
}

Vec unit0(int k) {
  Vec c = Vec::Zero(k);
  c[0] = 1.0;
  return c;
}

RegistryEntry entry(std::string name, std::string description, std::string provenance,
                    SubSpaceTime structure) {
  RegistryEntry e{std::move(name), std::move(description), std::move(provenance),
                  std::move(structure), {}, {}, {}, {}, {}, {}, {}, {}};
  return e;
}

Box domain_cube(int n) { return Box::cube(n, 2.0); }

TopologyDefaults defaults(Box probe_box, double eps, double tau, double horizon,
                          std::uint64_t samples) {
  TopologyDefaults t;
  t.probe_box = std::move(probe_box);
  t.interval_eps = eps;
  t.tau_radius = tau;
  t.horizon = horizon;
  t.samples = samples;
  return t;
}

// ---------------------------------------------------------------------------

RegistryEntry minkowski(int n) {
  SubSpaceTimeFields f;
  f.name = n == 2 ? "minkowski2" : "minkowski3";
  f.dim = n;
  f.rank = n;
  f.frame = [n](const Vec&) -> Mat { return Mat::Identity(n, n); };
  f.metric = [n](const Vec&) -> Mat { return diag_metric(n); };
  f.time_orientation = [n](const Vec&) -> Vec { return unit0(n); };
  f.domain = domain_cube(n);
  f.analytic_bracket = [n](int, int, const Vec&) -> std::optional<Vec> { return Vec::Zero(n); };
  f.constant_metric = true;

  const auto spatial = [](const Vec& p, const Vec& q) {
    return (q.tail(q.size() - 1) - p.tail(p.size() - 1)).norm();
  };
  RegistryEntry e = entry(f.name,
                  "flat space-time, coordinates (t, x" + std::string(n == 3 ? ", y)" : ")"),
                  "flat Minkowski space; cone and time separation in closed form",
                  SubSpaceTime(f));
  e.predicates["chronological_future"] = [spatial](const Vec& p, const Vec& q) {
    return q[0] - p[0] > spatial(p, q);
  };
  e.predicates["causal_future"] = [spatial](const Vec& p, const Vec& q) {
    return q[0] - p[0] >= spatial(p, q);
  };
  e.functions["time_separation"] = [spatial](const Vec& p, const Vec& q) {
    const double dt = q[0] - p[0], dx = spatial(p, q);
    return dt >= dx ? std::sqrt(std::max(0.0, dt * dt - dx * dx)) : 0.0;
  };
  e.expected = {"yes", "yes", "yes", "tau = A = A_o = tau_TS"};
  e.topology = defaults(Box::cube(n, 1.0), 0.4, 0.6, 1.0, 3000);
  // Causal diamonds |t - t0| + |x - x0| < r are causally convex.
  e.neighbourhood = [](const Vec& p, double r) -> PointPredicate {
    return [p, r](const Vec& q) {
      return std::abs(q[0] - p[0]) + (q.tail(q.size() - 1) - p.tail(p.size() - 1)).norm() < r;
    };
  };
  e.documented_points = {Vec::Zero(n)};
  return e;
}

// ---------------------------------------------------------------------------

SubSpaceTimeFields heisenberg_fields() {
  SubSpaceTimeFields f;
  f.name = "heisenberg";
  f.dim = 3;
  f.rank = 2;
  f.frame = [](const Vec& p) -> Mat {
    Mat F(3, 2);
    F << 1.0, 0.0,  //
        0.0, 1.0,   //
        0.5 * p[1], -0.5 * p[0];
    return F;
  };
  f.metric = [](const Vec&) -> Mat { return diag_metric(2); };
  f.time_orientation = [](const Vec&) -> Vec { return unit0(2); };
  f.domain = domain_cube(3);
  f.analytic_bracket = [](int i, int j, const Vec&) -> std::optional<Vec> {
    if (i == j) return Vec::Zero(3);
    return make_vec({0.0, 0.0, i == 0 ? -1.0 : 1.0});
  };
  f.constant_metric = true;
  return f;
}

// Causally convex neighbourhood B(p0, eps) of the Heisenberg group.
NeighbourhoodFamily heisenberg_neighbourhoods() {
  return [](const Vec& p0, double eps) -> PointPredicate {
    return [p0, eps](const Vec& q) {
      const double dx = q[0] - p0[0];
      if (!(std::abs(dx) < eps)) return false;
      if (!(std::abs(q[1] - p0[1]) < dx + eps)) return false;
      const double c = 0.5 * (std::abs(p0[0]) + std::abs(p0[1]) + 7 * eps);
      return std::abs(q[2] - p0[2]) < c * (dx + eps);
    };
  };
}

RegistryEntry heisenberg_entry() {
  SubSpaceTimeFields f = heisenberg_fields();
  RegistryEntry e = entry("heisenberg",
                  "Lorentzian Heisenberg group: X = dx + y/2 dz (timelike), Y = dy - x/2 dz",
                  "Heisenberg example with closed-form chronological future of the origin",
                  SubSpaceTime(f));
  e.predicates["chronological_future"] = heisenberg::in_chronological_future;
  e.predicates["causal_future"] = [](const Vec& p, const Vec& q) {
    const Vec t = heisenberg::translate_to_origin(p, q);
    return t[0] >= 0 && -t[0] * t[0] + t[1] * t[1] + 4 * std::abs(t[2]) <= 0;
  };
  e.functions["cone_function"] = heisenberg::cone_function;
  e.expected = {"yes", "yes", "yes", "tau = A"};
  e.topology = defaults(Box(make_vec({-1, -1, -0.4}), make_vec({1, 1, 0.4})), 0.5, 0.8, 1.2, 4000);
  e.neighbourhood = heisenberg_neighbourhoods();
  e.documented_points = {Vec::Zero(3), make_vec({1.0, 0.5, 0.0})};
  return e;
}

// ---------------------------------------------------------------------------

GroupAction boost_action(double phi) {
  const double c = std::cosh(phi), s = std::sinh(phi);
  GroupAction a;
  a.name = "boost";
  a.generator.map = [c, s](const Vec& p) -> Vec {
    return make_vec({p[0] - c, p[1] - s, p[2] + 0.5 * (p[1] * c - p[0] * s)});
  };
  a.generator.inverse = [c, s](const Vec& p) -> Vec {
    return make_vec({p[0] + c, p[1] + s, p[2] - 0.5 * (p[1] * c - p[0] * s)});
  };
  a.generator.jacobian = [c, s](const Vec&) -> Mat {
    Mat J = Mat::Identity(3, 3);
    J(2, 0) = -0.5 * s;
    J(2, 1) = 0.5 * c;
    return J;
  };
  const double x_lo = -0.5 * c;
  a.canonicalize = [a_gen = a.generator, c, x_lo](const Vec& p) -> Vec {
    Vec q = p;
    const double n = std::floor((p[0] - x_lo) / c);
    const int steps = static_cast<int>(std::abs(n));
    for (int i = 0; i < steps; ++i) q = n > 0 ? a_gen.map(q) : a_gen.inverse(q);
    while (q[0] < x_lo) q = a_gen.inverse(q);
    while (q[0] >= x_lo + c) q = a_gen.map(q);
    return q;
  };
  a.fundamental_box = Box(make_vec({x_lo, -2.0, -2.0}), make_vec({x_lo + c, 2.0, 2.0}));
  a.cover_box = [c, x_lo](int m) {
    const double ry = 2.0 + m * c;
    const double rz = 2.0 + m * c * (2.0 + m * c);
    return Box(make_vec({x_lo - m * c, -ry, -rz}), make_vec({x_lo + (m + 1) * c, ry, rz}));
  };
  // t (cosh phi, sinh phi, 0), t in [0, 1]: x advances at unit rate.
  a.documented_loops.push_back(
      {Vec::Zero(3), ControlSignal::constant(make_vec({1.0, std::tanh(phi)}), c, Strictness::Timelike),
       "straight timelike line t (cosh phi, sinh phi, 0), closing after t = 1"});
  return a;
}

RegistryEntry heisenberg_boost_entry(double phi) {
  RegistryEntry e = entry("heisenberg_boost",
                  "Heisenberg group modulo the boost translation with phi = " + std::to_string(phi),
                  "Heisenberg quotient containing a closed timelike line",
                  SubSpaceTime(heisenberg_fields()));
  e.action = boost_action(phi);
  const GroupAction act = *e.action;
  e.predicates["chronological_future"] = [act](const Vec& p, const Vec& q) {
    for (int n = -12; n <= 12; ++n)
      if (heisenberg::in_chronological_future(p, act.power(q, n))) return true;
    return false;
  };
  e.expected = {"no (closed timelike line)", "no", "yes", "A strictly coarser than tau"};
  const double c = std::cosh(phi), s = std::sinh(phi);
  e.topology = defaults(Box(make_vec({-0.5 * c, -1.0, -0.4}), make_vec({0.5 * c, 1.0, 0.4})), 0.5,
                        0.8, 2.5, 4000);
  // Cones fold onto themselves in the quotient: sampled intervals at any
  // practical horizon miss most of the true ones.
  e.topology.closed_form_families = true;
  e.neighbourhood = box_neighbourhoods();
  e.documented_points = {act.canonicalize(make_vec({0.25 * c, 0.25 * s, 0.0})),
                         act.canonicalize(make_vec({0.6 * c, 0.6 * s, 0.0}))};
  return e;
}

// ---------------------------------------------------------------------------

SubSpaceTimeFields martinet_fields() {
  SubSpaceTimeFields f;
  f.name = "martinet";
  f.dim = 3;
  f.rank = 2;
  // Column 0 is T = dy + x^2 dz, column 1 is X = dx.
  f.frame = [](const Vec& p) -> Mat {
    Mat F(3, 2);
    F << 0.0, 1.0,  //
        1.0, 0.0,   //
        p[0] * p[0], 0.0;
    return F;
  };
  f.metric = [](const Vec&) -> Mat { return diag_metric(2); };
  f.time_orientation = [](const Vec&) -> Vec { return unit0(2); };
  f.domain = domain_cube(3);
  f.analytic_bracket = [](int i, int j, const Vec& p) -> std::optional<Vec> {
    if (i == j) return Vec::Zero(3);
    // [T, X] = -2x dz
    return make_vec({0.0, 0.0, (i == 0 ? -2.0 : 2.0) * p[0]});
  };
  f.constant_metric = true;
  return f;
}

void martinet_oracles(RegistryEntry& e) {
  // Necessary condition for q in J+(p): y and z never decrease along
  // future-directed curves.
  e.predicates["z_monotone"] = [](const Vec& p, const Vec& q) {
    return q[1] >= p[1] && q[2] >= p[2];
  };
}

RegistryEntry martinet_entry() {
  RegistryEntry e = entry("martinet", "Martinet-type distribution T = dy + x^2 dz, X = dx",
                  "rigid timelike line (0, t, 0) on the boundary of the chronological future",
                  SubSpaceTime(martinet_fields()));
  martinet_oracles(e);
  e.predicates["segment_interval"] = [](const Vec& p, const Vec& q) {
    // I+(p) ∩ I-(q) is the open segment when p, q lie on one T-line in {x = 0}.
    return p[0] == 0 && q[0] == 0 && p[2] == q[2] && q[1] > p[1];
  };
  e.expected = {"yes", "yes", "no", "A not contained in tau"};
  e.topology = defaults(Box(make_vec({-1, -1, -1}), make_vec({1, 1, 1})), 0.4, 0.8, 1.0, 3000);
  e.neighbourhood = box_neighbourhoods();
  e.documented_points = {make_vec({0.0, 0.5, 0.0})};
  return e;
}

GroupAction martinet_shift(double period) {
  GroupAction a;
  a.name = "shift" + std::to_string(static_cast<int>(period));
  a.generator.map = [period](const Vec& p) -> Vec { return make_vec({p[0], p[1] + period, p[2]}); };
  a.generator.inverse = [period](const Vec& p) -> Vec {
    return make_vec({p[0], p[1] - period, p[2]});
  };
  a.generator.jacobian = [](const Vec&) -> Mat { return Mat::Identity(3, 3); };
  a.canonicalize = [period](const Vec& p) -> Vec {
    Vec q = p;
    q[1] = p[1] - period * std::floor(p[1] / period);
    if (q[1] >= period) q[1] -= period;
    if (q[1] < 0) q[1] = 0;
    return q;
  };
  a.fundamental_box = Box(make_vec({-2.0, 0.0, -2.0}), make_vec({2.0, period, 2.0}));
  a.cover_box = [period](int m) {
    const double rz = 2.0 + 4.0 * (m + 1) * period;
    return Box(make_vec({-2.0, -m * period, -rz}), make_vec({2.0, (m + 1) * period, rz}));
  };
  return a;
}

RegistryEntry martinet_mod2_entry() {
  SubSpaceTimeFields f = martinet_fields();
  f.name = "martinet_mod2";
  // The lines (0, 2n, z) are removed; a thin slab stands in for each line.
  constexpr double kSlab = 1e-3;
  f.excluded = [](const Vec& p) {
    return std::abs(p[0]) < kSlab && std::abs(p[1] - 2.0 * std::round(0.5 * p[1])) < kSlab;
  };
  RegistryEntry e = entry("martinet_mod2", "Martinet distribution minus the lines (0, 2n, z), modulo y -> y + 2",
                  "quotient whose curves leave a neighbourhood and return to it",
                  SubSpaceTime(f));
  e.action = martinet_shift(2.0);
  martinet_oracles(e);
  e.expected = {"not asserted", "no", "no", "A finer than tau"};
  e.topology = defaults(Box(make_vec({-1, 0.1, -1}), make_vec({1, 1.9, 1})), 0.4, 0.8, 2.5, 3000);
  e.neighbourhood = box_neighbourhoods();
  e.documented_points = {make_vec({0.0, 1.0, 0.0})};
  // gamma_delta(t) = (delta t, y0 + t, z0 + delta^2 t^3 / 3) with control T + delta X.
  constexpr double kDelta = 0.05;
  e.probe_curves.push_back({make_vec({0.0, 1.0, 0.0}),
                            ControlSignal::constant(make_vec({1.0, kDelta}), 2.5),
                            "gamma_delta with delta = 0.05 from (0, 1, 0)"});
  return e;
}

RegistryEntry martinet_mod1_entry() {
  SubSpaceTimeFields f = martinet_fields();
  f.name = "martinet_mod1";
  RegistryEntry e = entry("martinet_mod1", "Martinet distribution modulo y -> y + 1",
                  "quotient with the closed timelike line (0, t, 0)", SubSpaceTime(f));
  e.action = martinet_shift(1.0);
  e.action->documented_loops.push_back(
      {Vec::Zero(3), ControlSignal::constant(make_vec({1.0, 0.0}), 1.0, Strictness::Timelike),
       "line (0, t, 0), closing after t = 1"});
  martinet_oracles(e);
  e.expected = {"no (closed timelike line)", "no", "no", "A and tau incomparable"};
  e.topology = defaults(Box(make_vec({-1, 0.0, -1}), make_vec({1, 1.0, 1})), 0.4, 0.8, 2.5, 3000);
  e.neighbourhood = box_neighbourhoods();
  e.documented_points = {make_vec({0.0, 0.5, 0.0})};
  return e;
}

// ---------------------------------------------------------------------------

RegistryEntry varmetric_entry() {
  SubSpaceTimeFields f;
  f.name = "varmetric";
  f.dim = 3;
  f.rank = 2;
  // Column 0 is X = dy + x^2 dz, column 1 is Y = dx.
  f.frame = martinet_fields().frame;
  f.metric = [](const Vec& p) -> Mat {
    Mat g(2, 2);
    g << -varmetric::psi(p[1]), 1.0,  //
        1.0, 1.0;
    return g;
  };
  // T = X - b Y with b = 1.
  f.time_orientation = [](const Vec&) -> Vec { return make_vec({1.0, -1.0}); };
  f.domain = domain_cube(3);
  f.analytic_bracket = martinet_fields().analytic_bracket;
  RegistryEntry e = entry("varmetric", "X = dy + x^2 dz, Y = dx, g = [[-psi(y), 1], [1, 1]], T = X - Y",
                  "degenerating metric: positive length along (0, t, 0) but (0, 1, 0) not in I+(0)",
                  SubSpaceTime(f));
  e.functions["psi"] = [](const Vec&, const Vec& q) { return varmetric::psi(q[1]); };
  e.expected = {"yes", "not asserted", "no", "tau_TS differs from A"};
  e.topology = defaults(Box(make_vec({-1, -1, -1}), make_vec({1, 1, 1})), 0.4, 0.8, 1.0, 3000);
  e.neighbourhood = box_neighbourhoods();
  e.documented_points = {Vec::Zero(3), make_vec({0.0, 1.0, 0.0})};
  return e;
}

}  // namespace

namespace heisenberg {

Vec translate_to_origin(const Vec& p0, const Vec& q) {
  return make_vec({q[0] - p0[0], q[1] - p0[1],
                   q[2] - p0[2] + 0.5 * (q[1] * p0[0] - q[0] * p0[1])});
}

double cone_function(const Vec& p, const Vec& q) {
  const Vec t = translate_to_origin(p, q);
  return -t[0] * t[0] + t[1] * t[1] + 4 * std::abs(t[2]);
}

bool in_chronological_future(const Vec& p, const Vec& q) {
  const Vec t = translate_to_origin(p, q);
  return t[0] > 0 && -t[0] * t[0] + t[1] * t[1] + 4 * std::abs(t[2]) < 0;
}

}  // namespace heisenberg

namespace varmetric {

double psi(double y) {
  if (y <= 1.0 / 3.0) return 1.0;
  if (y >= 2.0 / 3.0) return 0.0;
  const double u = 3.0 * y - 1.0;
  return 1.0 - u * u * (3.0 - 2.0 * u);
}

}  // namespace varmetric

NeighbourhoodFamily box_neighbourhoods() {
  return [](const Vec& p, double r) -> PointPredicate {
    return [p, r](const Vec& q) { return ((q - p).array().abs() < r).all(); };
  };
}

std::vector<std::string> registry_names() {
  return {"minkowski2",    "minkowski3",    "heisenberg",       "martinet",
          "martinet_mod2", "martinet_mod1", "heisenberg_boost", "varmetric"};
}

RegistryEntry get_structure(const std::string& name, double phi) {
  if (name == "minkowski2") return minkowski(2);
  if (name == "minkowski3") return minkowski(3);
  if (name == "heisenberg") return heisenberg_entry();
  if (name == "martinet") return martinet_entry();
  if (name == "martinet_mod2") return martinet_mod2_entry();
  if (name == "martinet_mod1") return martinet_mod1_entry();
  if (name == "heisenberg_boost") return heisenberg_boost_entry(phi);
  if (name == "varmetric") return varmetric_entry();
  std::string known;
  for (const auto& n : registry_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown manifold '" + name + "'; available: " + known);
}

}  // namespace causalreach
