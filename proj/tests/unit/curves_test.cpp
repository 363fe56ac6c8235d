#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "causalreach/curves.hpp"
#include "causalreach/errors.hpp"
#include "causalreach/reachability.hpp"
#include "causalreach/registry.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

namespace cr = causalreach;
using cr::ControlSignal;
using cr::make_vec;
using cr::Vec;

namespace {

const cr::SubSpaceTime& structure(const std::string& name) {
  static std::map<std::string, cr::RegistryEntry> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, cr::get_structure(name)).first;
  return it->second.structure;
}

cr::HorizontalCurve straight(const cr::SubSpaceTime& st, const Vec& p0, const Vec& u, double T,
                             int substeps = 64) {
  cr::IntegrateOptions o;
  o.substeps_per_row = substeps;
  return cr::integrate(st, p0, ControlSignal::constant(u, T), o);
}

}  // namespace

TEST(Integrate, HeisenbergRays) {
  const auto& st = structure("heisenberg");
  const auto a = straight(st, Vec::Zero(3), make_vec({1, 0}), 1.0);
  EXPECT_LE((a.end() - make_vec({1, 0, 0})).norm(), 1e-9);
  const auto b = straight(st, Vec::Zero(3), make_vec({1, 0.5}), 1.0);
  EXPECT_LE((b.end() - make_vec({1, 0.5, 0})).norm(), 1e-9);
}

TEST(Integrate, HeisenbergMatchesAnalyticFlow) {
  const auto& st = structure("heisenberg");
  cr::Philox g(41, 0);
  for (int i = 0; i < 50; ++i) {
    const Vec p0 = testing_support::random_admissible(st, g, 0.5);
    const double b = g.uniform(-0.9, 0.9);
    const double t = g.uniform(0.05, 0.4);
    const auto c = straight(st, p0, make_vec({1, b}), t, 8);
    ASSERT_LE((c.end() - oracle::heisenberg_flow(p0, 1, b, t)).norm(), 1e-12);
  }
}

TEST(Integrate, MartinetAbnormalLine) {
  const auto& st = structure("martinet");
  for (double theta : {0.25, 0.5, 0.9}) {
    const auto c = straight(st, Vec::Zero(3), make_vec({1, 0}), theta);
    EXPECT_LE((c.end() - make_vec({0, theta, 0})).norm(), 1e-12);
  }
}

TEST(Integrate, ConvergesAtFourthOrder) {
  // Constant controls on the Heisenberg group give polynomial solutions that
  // RK4 reproduces exactly, so the rate is measured where the frame varies.
  const auto& st = structure("varmetric");
  const ControlSignal ctrl({0.4, 0.4}, {make_vec({1, 0.3}), make_vec({1, -0.4})});
  const Vec p0 = make_vec({0.3, 0.1, 0.0});
  cr::IntegrateOptions fine;
  fine.substeps_per_row = 4096;
  const Vec ref = cr::integrate(st, p0, ctrl, fine).end();
  double prev = 0.0;
  for (int n : {4, 8, 16}) {
    cr::IntegrateOptions o;
    o.substeps_per_row = n;
    const double err = (cr::integrate(st, p0, ctrl, o).end() - ref).norm();
    if (prev > 0) EXPECT_GE(prev / err, 8.0) << "substeps " << n;
    prev = err;
  }
}

TEST(Integrate, TruncatesAtDomainExit) {
  const auto& st = structure("minkowski2");
  const auto c = straight(st, Vec::Zero(2), make_vec({1, 0}), 50.0);
  EXPECT_TRUE(c.exited);
  EXPECT_TRUE(st.admissible(c.end()));
}

TEST(ControlSignal, RejectsRowsOutsideTheCone) {
  EXPECT_THROW(ControlSignal::constant(make_vec({1, 1.5}), 1.0), cr::ConeViolation);
  EXPECT_THROW(ControlSignal::constant(make_vec({1, 1.0}), 1.0, cr::Strictness::Timelike),
               cr::ConeViolation);
  EXPECT_NO_THROW(ControlSignal::constant(make_vec({1, 1.0}), 1.0));
}

TEST(Martinet, HeightNeverDecreasesAlongFutureTrajectories) {
  const auto& st = structure("martinet");
  cr::ReachConfig cfg;
  cfg.horizon = 1.0;
  cfg.strictness = cr::Strictness::Nonspacelike;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const ControlSignal ctrl = cr::sample_controls(cfg, st.rank(), i, 1.0);
    cr::IntegrateOptions o;
    o.max_dt = cfg.horizon / cfg.integrator_steps;
    const auto c = cr::integrate(st, Vec::Zero(3), ctrl, o);
    for (int s = 0; s < c.steps(); ++s) {
      const double dt = c.times[s + 1] - c.times[s];
      ASSERT_GE(c.points[s + 1][2] - c.points[s][2], -1e-9 * dt) << "trajectory " << i;
    }
  }
}

TEST(Length, MinkowskiExamples) {
  const auto& st = structure("minkowski2");
  EXPECT_NEAR(cr::length(st, straight(st, Vec::Zero(2), make_vec({1, 0}), 1.0)), 1.0, 1e-12);
  EXPECT_NEAR(cr::length(st, straight(st, Vec::Zero(2), make_vec({1, 1}), 1.0)), 0.0, 1e-12);
  const auto c = cr::curve_from_points({0, 1}, {Vec::Zero(2), make_vec({1, 0.6})});
  EXPECT_NEAR(cr::length(st, c), oracle::minkowski_tsep(Vec::Zero(2), make_vec({1, 0.6})), 1e-12);
}

TEST(Length, VarmetricSegment) {
  const auto& st = structure("varmetric");
  const int n = 4000;
  std::vector<double> t;
  std::vector<Vec> p;
  for (int i = 0; i <= n; ++i) {
    t.push_back(static_cast<double>(i) / n);
    p.push_back(make_vec({0, t.back(), 0}));
  }
  const double quad = oracle::simpson([](double y) { return std::sqrt(oracle::bump(y)); }, 0, 1,
                                      20000);
  ASSERT_NEAR(quad, oracle::varmetric_segment_length(), 1e-8);
  const double len = cr::length(st, cr::curve_from_points(t, p));
  EXPECT_GE(len, 1.0 / 3.0);
  EXPECT_NEAR(len, oracle::varmetric_segment_length(), 1e-6);
}

TEST(Length, SpacelikeCurveThrows) {
  const auto& st = structure("minkowski2");
  const auto c = cr::curve_from_points({0, 1}, {Vec::Zero(2), make_vec({0.2, 0.6})});
  EXPECT_THROW(cr::length(st, c), cr::ConeViolation);
}

TEST(Length, AdditiveUnderConcatenation) {
  for (const std::string name : {"heisenberg", "martinet", "varmetric", "minkowski3"}) {
    const auto& st = structure(name);
    cr::ReachConfig cfg;
    cfg.horizon = 0.4;
    cr::Philox g(43, 0);
    for (std::uint64_t i = 1; i < 20; ++i) {
      const Vec p0 = testing_support::random_admissible(st, g, 0.6);
      const auto a = cr::integrate(st, p0, cr::sample_controls(cfg, st.rank(), i, 1.0));
      const auto b = cr::integrate(st, a.end(), cr::sample_controls(cfg, st.rank(), 100 + i, 1.0));
      if (a.exited || b.exited) continue;
      const double joined = cr::length(st, cr::concatenate(a, b));
      ASSERT_NEAR(joined, cr::length(st, a) + cr::length(st, b), 1e-12) << name;
    }
  }
}

TEST(Length, StableUnderRefinement) {
  for (const std::string name : {"heisenberg", "martinet", "varmetric"}) {
    const auto& st = structure(name);
    cr::ReachConfig cfg;
    cfg.horizon = 0.8;
    for (std::uint64_t i = 1; i < 20; ++i) {
      const ControlSignal ctrl = cr::sample_controls(cfg, st.rank(), i, 1.0);
      cr::IntegrateOptions coarse, fine;
      coarse.substeps_per_row = 32;
      fine.substeps_per_row = 64;
      const auto a = cr::integrate(st, make_vec({0.1, 0.05, 0}), ctrl, coarse);
      const auto b = cr::integrate(st, make_vec({0.1, 0.05, 0}), ctrl, fine);
      ASSERT_EQ(b.steps(), 2 * a.steps());
      const double la = cr::length(st, a), lb = cr::length(st, b);
      ASSERT_LE(std::abs(la - lb), 1e-6 * std::max(1.0, lb)) << name << " " << i;
    }
  }
}

TEST(VerifyCausal, ForwardAndReversed) {
  const auto& st = structure("heisenberg");
  const auto c = straight(st, Vec::Zero(3), make_vec({1, 0}), 1.0);
  const auto r = cr::verify_causal(st, c);
  EXPECT_EQ(r.spacelike_steps, 0);
  EXPECT_EQ(r.orientation_violations, 0);
  EXPECT_NEAR(r.worst_norm, -1.0, 1e-9);
  EXPECT_TRUE(r.causal_future());
  const auto back = cr::verify_causal(st, cr::reversed(c));
  EXPECT_EQ(back.orientation_violations, back.steps);
  for (const auto& ch : back.per_step) EXPECT_EQ(ch.orientation, cr::Orientation::Past);
}

TEST(TubeEvents, Examples) {
  const auto& st = structure("minkowski2");
  const auto inside = straight(st, Vec::Zero(2), make_vec({1, 0}), 0.1);
  EXPECT_TRUE(cr::tube_events(inside, cr::Box::centered(Vec::Zero(2), 0.5)).empty());
  const auto crossing = straight(st, Vec::Zero(2), make_vec({1, 0.3}), 1.0);
  const auto ev = cr::tube_events(crossing, cr::Box::centered(Vec::Zero(2), 0.5));
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_NEAR(ev[0].exit_time, 0.5, 1e-9);
  EXPECT_FALSE(ev[0].reentry_time.has_value());
}

TEST(TubeEvents, MartinetQuotientCurveReturns) {
  const auto e = cr::get_structure("martinet_mod2");
  const double delta = 0.05, y0 = 1.0, z0 = 0.0;
  std::vector<double> t;
  std::vector<Vec> p;
  for (int i = 0; i <= 2000; ++i) {
    const double s = 2.5 * i / 2000;
    t.push_back(s);
    p.push_back(make_vec({delta * s, y0 + s, z0 + delta * delta * s * s * s / 3}));
  }
  const auto c = cr::curve_from_points(t, p);
  const auto ev = cr::tube_events(c, cr::Box::centered(make_vec({0, y0, z0}), 0.1),
                                  e.action->canonicalize);
  ASSERT_FALSE(ev.empty());
  EXPECT_LT(ev[0].exit_time, 2.0);
  EXPECT_TRUE(ev[0].reentry_time.has_value());
  EXPECT_TRUE(cr::verify_causal(e.structure, c).causal_future());
}

TEST(WriteCurveCsv, HeaderAndRows) {
  const auto& st = structure("heisenberg");
  const auto c = straight(st, Vec::Zero(3), make_vec({1, 0.5}), 1.0, 4);
  std::ostringstream os;
  cr::write_curve_csv(os, c);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,x1,x2,x3,u0,u1");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, static_cast<int>(c.points.size()));
}
