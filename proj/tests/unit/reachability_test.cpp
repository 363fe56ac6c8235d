#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "causalreach/errors.hpp"
#include "causalreach/reachability.hpp"
#include "causalreach/registry.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

namespace cr = causalreach;
using cr::Box;
using cr::Direction;
using cr::make_vec;
using cr::ReachConfig;
using cr::Vec;

namespace {

const cr::RegistryEntry& entry(const std::string& name) {
  static std::map<std::string, cr::RegistryEntry> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, cr::get_structure(name)).first;
  return it->second;
}

const cr::SubSpaceTime& structure(const std::string& name) { return entry(name).structure; }

ReachConfig config(double horizon, std::uint64_t samples, int resolution, Box box) {
  ReachConfig c;
  c.horizon = horizon;
  c.samples = samples;
  c.resolution = resolution;
  c.box = std::move(box);
  return c;
}

Box heisenberg_box() { return Box(make_vec({-0.1, -0.6, -0.3}), make_vec({1.1, 0.6, 0.3})); }

}  // namespace

TEST(SampleReach, HeisenbergExamples) {
  const auto& st = structure("heisenberg");
  const auto g = cr::sample_reach(st, Vec::Zero(3), Direction::Future,
                                  config(1.2, 20000, 32, heisenberg_box()));
  EXPECT_TRUE(g.contains_point(make_vec({0.5, 0.2, 0.01})));
  EXPECT_FALSE(g.contains_point(make_vec({1, 0.5, 0.3})));
  EXPECT_EQ(g.semantics(), cr::GridSemantics::UnderI);
}

TEST(SampleReach, MartinetNeverBelowThePlane) {
  const auto& st = structure("martinet");
  const Box box(make_vec({-1, -1, -0.5}), make_vec({1, 1, 0.5}));
  for (std::uint64_t samples : {1000u, 10000u}) {
    auto c = config(1.0, samples, 64, box);
    c.strictness = cr::Strictness::Nonspacelike;
    const auto g = cr::sample_reach(st, Vec::Zero(3), Direction::Future, c);
    EXPECT_FALSE(g.contains_point(make_vec({0, 0.5, -0.01})));
  }
}

TEST(SampleReach, MinkowskiExamples) {
  const auto& st = structure("minkowski2");
  const Box box(make_vec({-0.2, -1.2}), make_vec({1.2, 1.2}));
  const auto g = cr::sample_reach(st, Vec::Zero(2), Direction::Future, config(1.2, 4000, 64, box));
  EXPECT_TRUE(g.contains_point(make_vec({1, 0.5})));
  EXPECT_FALSE(g.contains_point(make_vec({0.5, 1})));
  const auto past = cr::sample_reach(st, make_vec({1, 0}), Direction::Past, config(1.2, 4000, 64, box));
  EXPECT_TRUE(past.contains_point(make_vec({0.1, 0.3})));
  EXPECT_FALSE(past.contains_point(make_vec({1.1, 0})));
}

TEST(SampleReach, SourceOutsideTheDomainThrows) {
  const auto& st = structure("minkowski2");
  const Box box(make_vec({0, 0}), make_vec({1, 1}));
  EXPECT_THROW(cr::sample_reach(st, make_vec({100, 0.5}), Direction::Future,
                                config(1.0, 10, 16, box)),
               cr::DomainError);
}

TEST(SampleReach, SourceOutsideTheGridBoxKeepsReachedCells) {
  const auto& st = structure("minkowski2");
  const Box box(make_vec({0.5, -1.5}), make_vec({1.5, 1.5}));
  const auto g = cr::sample_reach(st, Vec::Zero(2), Direction::Future, config(1.5, 2000, 32, box));
  EXPECT_TRUE(g.contains_point(make_vec({1, 0})));
  EXPECT_FALSE(g.contains_point(make_vec({0.6, 1.2})));
}

TEST(ReachConfig, Validation) {
  ReachConfig c;
  EXPECT_NO_THROW(c.validate());
  c.samples = 0;
  EXPECT_THROW(c.validate(), cr::ConfigError);
  c = ReachConfig{};
  c.resolution = 4;
  EXPECT_THROW(c.validate(), cr::ConfigError);
  c = ReachConfig{};
  c.cone_margin = 1.0;
  EXPECT_THROW(c.validate(), cr::ConfigError);
  c = ReachConfig{};
  c.switch_span = -1;
  EXPECT_THROW(c.validate(), cr::ConfigError);
}

TEST(ReachConfig, DigestTracksFields) {
  ReachConfig a, b;
  EXPECT_EQ(a.digest(), b.digest());
  b.seed = 2;
  EXPECT_NE(a.digest(), b.digest());
}

TEST(SampleControls, RowsInsideTheScaledBall) {
  ReachConfig c;
  c.horizon = 2.0;
  for (std::uint64_t i = 1; i < 500; ++i) {
    const auto ctrl = cr::sample_controls(c, 3, i, 0.8);
    double total = 0;
    ASSERT_LE(ctrl.steps(), c.steps);
    for (int r = 0; r < ctrl.steps(); ++r) {
      EXPECT_DOUBLE_EQ(ctrl.row(r)[0], 1.0);
      EXPECT_LE(ctrl.row(r).tail(2).norm(), 0.8 + 1e-12);
      total += ctrl.duration(r);
    }
    EXPECT_NEAR(total, 2.0, 1e-12);
  }
  const auto flow = cr::sample_controls(c, 3, 0, 0.8);
  EXPECT_EQ(flow.steps(), 1);
  EXPECT_DOUBLE_EQ(flow.row(0).tail(2).norm(), 0.0);
}

TEST(SampleControls, FixedSpanGivesPrefixes) {
  ReachConfig lo, hi;
  lo.switch_span = hi.switch_span = 2.0;
  lo.horizon = 0.7;
  hi.horizon = 2.0;
  for (std::uint64_t i = 1; i < 200; ++i) {
    const auto a = cr::sample_controls(lo, 2, i, 1.0);
    const auto b = cr::sample_controls(hi, 2, i, 1.0);
    ASSERT_LE(a.steps(), b.steps());
    for (int r = 0; r + 1 < a.steps(); ++r) {
      EXPECT_EQ(a.duration(r), b.duration(r));
      EXPECT_EQ(a.row(r), b.row(r));
    }
    EXPECT_EQ(a.row(a.steps() - 1), b.row(a.steps() - 1));
    EXPECT_LE(a.duration(a.steps() - 1), b.duration(a.steps() - 1) + 1e-15);
  }
}

TEST(ReachProperties, TimelikeInsideNonspacelike) {
  for (const char* name : {"heisenberg", "martinet", "varmetric"}) {
    const auto& st = structure(name);
    auto c = config(1.0, 3000, 32, st.domain());
    c.cone_margin = 0.1;
    auto n = c;
    n.strictness = cr::Strictness::Nonspacelike;
    const Vec p = Vec::Zero(st.dim());
    const auto gi = cr::sample_reach(st, p, Direction::Future, c);
    const auto gj = cr::sample_reach(st, p, Direction::Future, n);
    EXPECT_TRUE(cr::grid_subset(gi, gj)) << name;
    EXPECT_GT(gj.count(), gi.count()) << name;
  }
}

TEST(ReachProperties, MonotoneInSamples) {
  const auto& st = structure("heisenberg");
  std::size_t last = 0;
  cr::ReachGrid prev;
  for (std::uint64_t n : {500u, 1000u, 4000u}) {
    const auto g =
        cr::sample_reach(st, Vec::Zero(3), Direction::Future, config(1.2, n, 32, heisenberg_box()));
    if (n > 500) {
      EXPECT_TRUE(cr::grid_subset(prev, g));
    }
    EXPECT_GE(g.count(), last);
    last = g.count();
    prev = g;
  }
}

TEST(ReachProperties, MonotoneInHorizon) {
  for (const char* name : {"heisenberg", "martinet"}) {
    const auto& st = structure(name);
    cr::ReachGrid prev;
    for (double h : {0.5, 1.0, 2.0}) {
      auto c = config(h, 2000, 32, st.domain());
      c.switch_span = 2.0;
      const auto g = cr::sample_reach(st, Vec::Zero(3), Direction::Future, c);
      if (h > 0.5) {
        EXPECT_TRUE(cr::grid_subset(prev, g)) << name << " horizon " << h;
      }
      prev = g;
    }
  }
}

TEST(ReachProperties, DeterministicAcrossThreads) {
  const auto& st = structure("martinet_mod2");
  auto c = config(1.5, 3000, 32, st.domain());
  c.threads = 1;
  const auto a = cr::sample_reach(st, make_vec({0, 1, 0}), Direction::Future, c);
  c.threads = 4;
  const auto b = cr::sample_reach(st, make_vec({0, 1, 0}), Direction::Future, c);
  c.threads = 3;
  const auto d = cr::sample_reach(st, make_vec({0, 1, 0}), Direction::Future, c);
  EXPECT_EQ(a.cells(), b.cells());
  EXPECT_EQ(a.cells(), d.cells());
  c.seed = 9;
  const auto e = cr::sample_reach(st, make_vec({0, 1, 0}), Direction::Future, c);
  EXPECT_NE(a.cells(), e.cells());
}

TEST(ReachProperties, HeisenbergOracleSoundness) {
  const auto& st = structure("heisenberg");
  cr::Philox rng(5, 0);
  for (int trial = 0; trial < 3; ++trial) {
    const Vec p0 = trial == 0 ? Vec(Vec::Zero(3)) : testing_support::random_admissible(st, rng, 0.6);
    const Box box(p0.array() - 0.8, p0.array() + 0.8);
    const auto g = cr::sample_reach(st, p0, Direction::Future, config(1.0, 4000, 32, box));
    const double diag = g.cell_diagonal();
    std::size_t bad = 0;
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
      if (!g.marked(i)) continue;
      // Some point within one diagonal of the center must satisfy the closed form.
      const Vec c = g.cell_center(i);
      bool ok = false;
      for (int k = 0; k < 200 && !ok; ++k) {
        Vec d(3);
        for (int a = 0; a < 3; ++a) d[a] = rng.uniform(-1, 1);
        if (d.norm() > 1) continue;
        const Vec q = c + diag * d;
        const Vec r = oracle::heisenberg_translate(p0, q);
        ok = r[0] >= 0 && oracle::heisenberg_cone(p0, q) <= 0;
      }
      // Fall back to the analytic distance bound: |grad f| <= 2|x| + 2|y| + 4.
      if (!ok) {
        const Vec r = oracle::heisenberg_translate(p0, c);
        const double slack = (2 * std::abs(r[0]) + 2 * std::abs(r[1]) + 4 + 2) * diag;
        ok = r[0] >= -diag && oracle::heisenberg_cone(p0, c) <= slack;
      }
      bad += !ok;
    }
    EXPECT_EQ(bad, 0u) << "trial " << trial;
  }
}

TEST(ReachProperties, MartinetZMonotone) {
  const auto& st = structure("martinet");
  auto c = config(1.5, 5000, 64, st.domain());
  c.strictness = cr::Strictness::Nonspacelike;
  for (const Vec& p : {make_vec({0, 0, 0}), make_vec({0.5, -0.2, 0.1}), make_vec({-0.3, 0.4, -0.2})}) {
    const auto g = cr::sample_reach(st, p, Direction::Future, c);
    const double dz = g.cell_size()[2];
    std::size_t bad = 0;
    for (std::size_t i = 0; i < g.cell_count(); ++i)
      if (g.marked(i) && g.cell_center(i)[2] < p[2] - dz) ++bad;
    EXPECT_EQ(bad, 0u);
  }
}

TEST(ReachBoundary, HeisenbergBoundaryOnTheCone) {
  const auto& st = structure("heisenberg");
  const auto g = cr::sample_reach(st, Vec::Zero(3), Direction::Future,
                                  config(1.0, 20000, 32, heisenberg_box()));
  const auto b = cr::grid_boundary(g);
  const double diag = g.cell_diagonal();
  std::size_t checked = 0, bad = 0;
  for (std::size_t i = 0; i < b.cell_count(); ++i) {
    if (!b.marked(i)) continue;
    const Vec c = b.cell_center(i);
    // The sampled band: away from the horizon front and the grid faces.
    if (c[0] < 0.1 || c[0] > 0.6) continue;
    ++checked;
    const double grad = 2 * std::abs(c[0]) + 2 * std::abs(c[1]) + 4;
    if (std::abs(oracle::heisenberg_cone(Vec::Zero(3), c)) >= 3 * diag * grad) ++bad;
  }
  EXPECT_GT(checked, 50u);
  EXPECT_EQ(bad, 0u);
}

TEST(ChronOpen, Examples) {
  {
    const auto& st = structure("heisenberg");
    const auto c = config(1.6, 8000, 32, Box(make_vec({-0.2, -1, -0.5}), make_vec({1.5, 1, 0.5})));
    EXPECT_EQ(cr::chron_open_at(st, Vec::Zero(3), make_vec({1, 0.5, 0}), c),
              cr::ChronVerdict::Interior);
    EXPECT_TRUE(cr::open_chron(st, Vec::Zero(3), make_vec({1, 0.5, 0}), c));
  }
  {
    const auto& st = structure("martinet");
    const auto c = config(1.0, 8000, 32, Box(make_vec({-1, -1, -0.5}), make_vec({1, 1, 0.5})));
    EXPECT_EQ(cr::chron_open_at(st, Vec::Zero(3), make_vec({0, 0.5, 0}), c),
              cr::ChronVerdict::Boundary);
    EXPECT_FALSE(cr::open_chron(st, Vec::Zero(3), make_vec({0, 0.5, 0}), c));
    EXPECT_EQ(cr::chron_open_at(st, Vec::Zero(3), make_vec({0, 0.5, -0.1}), c),
              cr::ChronVerdict::Outside);
  }
}

TEST(ChronOpen, ClassifyInGrids) {
  const Box box(make_vec({0, 0}), make_vec({1, 1}));
  auto coarse = cr::ReachGrid::cubic(box, 8, cr::GridSemantics::UnderI);
  auto fine = cr::ReachGrid::cubic(box, 16, cr::GridSemantics::UnderI);
  for (std::size_t i = 0; i < coarse.cell_count(); ++i) coarse.mark(i);
  for (std::size_t i = 0; i < fine.cell_count(); ++i) fine.mark(i);
  EXPECT_EQ(cr::classify_in_grids({coarse, fine}, make_vec({0.5, 0.5})), cr::ChronVerdict::Interior);
  EXPECT_EQ(cr::classify_in_grids({coarse, fine}, make_vec({0.01, 0.5})), cr::ChronVerdict::Boundary);
  auto empty = cr::ReachGrid::cubic(box, 16, cr::GridSemantics::UnderI);
  auto empty8 = cr::ReachGrid::cubic(box, 8, cr::GridSemantics::UnderI);
  EXPECT_EQ(cr::classify_in_grids({empty8, empty}, make_vec({0.5, 0.5})), cr::ChronVerdict::Outside);
  EXPECT_EQ(cr::classify_in_grids({coarse, empty}, make_vec({0.5, 0.5})), cr::ChronVerdict::Unknown);
}

TEST(ChronOpen, FutureAndPastAgreeOnHeisenbergPairs) {
  const auto& st = structure("heisenberg");
  cr::Philox rng(77, 0);
  const Box box(make_vec({-1.2, -1.2, -0.3}), make_vec({1.2, 1.2, 0.3}));
  const auto c = config(1.2, 6000, 32, box);
  int agree = 0, interior = 0;
  for (int i = 0; i < 20; ++i) {
    const Vec p = testing_support::random_point(
        Box(make_vec({-0.3, -0.3, -0.1}), make_vec({0.3, 0.3, 0.1})), rng);
    const double t = rng.uniform(0.5, 0.8);
    // Even pairs lie on a timelike ray from p, odd pairs on a spacelike one.
    const double b = i % 2 ? 1.5 : rng.uniform(-0.4, 0.4);
    const Vec q = oracle::heisenberg_flow(p, 1, b, t);
    const bool f = cr::open_chron(st, p, q, c);
    const bool back = cr::open_chron_past(st, q, p, c);
    agree += f == back;
    interior += f;
    EXPECT_EQ(f, oracle::heisenberg_chron(p, q)) << "pair " << i;
  }
  EXPECT_EQ(agree, 20);
  EXPECT_EQ(interior, 10);
}

TEST(AlexandrovInterval, MinkowskiDiamond) {
  const auto& st = structure("minkowski2");
  const Box box(make_vec({-0.1, -1.1}), make_vec({2.1, 1.1}));
  const auto g = cr::alexandrov_interval(st, make_vec({0, 0}), make_vec({2, 0}),
                                         config(2.2, 20000, 64, box), false);
  std::size_t inside = 0, hit = 0, outside = 0;
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    const Vec c = g.cell_center(i);
    const double d = std::min(c[0] - std::abs(c[1]), 2 - c[0] - std::abs(c[1]));
    if (d > 2 * g.cell_diagonal()) {
      ++inside;
      hit += g.marked(i);
    }
    if (d < -g.cell_diagonal()) outside += g.marked(i);
  }
  EXPECT_GE(static_cast<double>(hit), 0.95 * inside);
  EXPECT_EQ(outside, 0u);
}

TEST(AlexandrovInterval, MartinetSegment) {
  const auto& st = structure("martinet");
  const Box box(make_vec({-0.5, -0.1, -0.25}), make_vec({0.5, 1.1, 0.25}));
  const auto g = cr::alexandrov_interval(st, Vec::Zero(3), make_vec({0, 1, 0}),
                                         config(1.2, 10000, 32, box), false);
  EXPECT_GT(g.count(), 0u);
  const Vec h = g.cell_size();
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    if (!g.marked(i)) continue;
    const Vec c = g.cell_center(i);
    EXPECT_LE(std::abs(c[0]), h[0]) << c.transpose();
    EXPECT_LE(std::abs(c[2]), h[2]) << c.transpose();
    EXPECT_GE(c[1], -h[1]);
    EXPECT_LE(c[1], 1 + h[1]);
  }
}

TEST(AlexandrovInterval, EmptyForEqualEndpoints) {
  for (const char* name : {"minkowski2", "heisenberg", "martinet"}) {
    const auto& st = structure(name);
    const Vec p = Vec::Zero(st.dim());
    const auto g = cr::alexandrov_interval(st, p, p, config(1.0, 2000, 32, st.domain()), false);
    EXPECT_EQ(g.count(), 0u) << name;
  }
}

TEST(AlexandrovInterval, OpenedInsideClosed) {
  const auto& st = structure("heisenberg");
  const auto c = config(1.2, 6000, 32, heisenberg_box());
  const Vec q = make_vec({1, 0.2, 0});
  const auto a = cr::alexandrov_interval(st, Vec::Zero(3), q, c, false);
  const auto o = cr::alexandrov_interval(st, Vec::Zero(3), q, c, true);
  EXPECT_TRUE(cr::grid_subset(o, a));
  EXPECT_GT(o.count(), 0u);
}

TEST(TimeFlow, MovesAlongTheOrientation) {
  const auto& st = structure("heisenberg");
  const Vec p = make_vec({0.1, 0.2, 0.05});
  EXPECT_LE((cr::time_flow(st, p, 0.3) - oracle::heisenberg_flow(p, 1, 0, 0.3)).norm(), 1e-9);
  EXPECT_LE((cr::time_flow(st, cr::time_flow(st, p, 0.3), -0.3) - p).norm(), 1e-9);
}
