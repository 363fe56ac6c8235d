#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "causalreach/quotient.hpp"
#include "causalreach/registry.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

namespace cr = causalreach;
using cr::Box;
using cr::Direction;
using cr::make_vec;
using cr::Vec;

namespace {

const cr::RegistryEntry& entry(const std::string& name) {
  static std::map<std::string, cr::RegistryEntry> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, cr::get_structure(name)).first;
  return it->second;
}

cr::Isometry heisenberg_translation(const Vec& p0) {
  cr::Isometry iso;
  iso.map = [p0](const Vec& q) { return oracle::heisenberg_translate(p0, q); };
  // Inverse: left translation by p0.
  iso.inverse = [p0](const Vec& q) {
    Vec r(3);
    r << q[0] + p0[0], q[1] + p0[1], q[2] + p0[2] - 0.5 * (q[1] * p0[0] - q[0] * p0[1]);
    return r;
  };
  return iso;
}

// Collects the segments of sampled trajectories for an independent projection.
class SegmentSink : public cr::TrajectorySink {
 public:
  void segment(const Vec& a, const Vec& b, double, double, double) override {
    segments.emplace_back(a, b);
  }
  std::vector<std::pair<Vec, Vec>> segments;
};

}  // namespace

TEST(VerifyIsometry, HeisenbergTranslation) {
  const auto& st = entry("heisenberg").structure;
  const auto rep = cr::verify_isometry(st, heisenberg_translation(make_vec({0.3, -0.2, 0.1})), 200, 1,
                                       Box(make_vec({-1, -1, -1}), make_vec({1, 1, 1})));
  EXPECT_EQ(rep.samples, 200);
  EXPECT_TRUE(rep.passes()) << rep.to_json().dump();
  EXPECT_LE(rep.distribution_defect, 1e-6);
  EXPECT_LE(rep.metric_defect, 1e-6);
  EXPECT_LT(rep.orientation_sign, 0);
}

TEST(VerifyIsometry, HeisenbergFlipReversesTime) {
  const auto& st = entry("heisenberg").structure;
  cr::Isometry flip;
  flip.map = [](const Vec& q) { return make_vec({-q[0], -q[1], q[2]}); };
  flip.inverse = flip.map;
  const auto rep = cr::verify_isometry(st, flip, 200, 1);
  EXPECT_TRUE(rep.preserves_distribution());
  EXPECT_TRUE(rep.preserves_metric());
  EXPECT_GT(rep.orientation_sign, 0);
  EXPECT_FALSE(rep.passes());
}

TEST(VerifyIsometry, IdentityHasNoDefects) {
  for (const char* name : {"minkowski3", "martinet", "varmetric"}) {
    const auto& st = entry(name).structure;
    cr::Isometry id;
    id.map = [](const Vec& q) { return q; };
    id.inverse = id.map;
    const auto rep = cr::verify_isometry(st, id, 100, 2);
    EXPECT_LE(rep.distribution_defect, 1e-9) << name;
    EXPECT_LE(rep.metric_defect, 1e-9) << name;
    EXPECT_EQ(rep.inverse_defect, 0.0) << name;
    EXPECT_TRUE(rep.passes()) << name;
  }
}

TEST(VerifyIsometry, RegistryGeneratorsAtAThousandPoints) {
  for (const char* name : {"martinet_mod2", "martinet_mod1", "heisenberg_boost"}) {
    const auto& e = entry(name);
    ASSERT_TRUE(e.action.has_value()) << name;
    const auto rep = cr::verify_isometry(e.structure, e.action->generator, 1000, 7);
    EXPECT_EQ(rep.samples, 1000);
    EXPECT_TRUE(rep.passes()) << name << " " << rep.to_json().dump();
  }
}

TEST(Canonicalize, MartinetModTwo) {
  const auto& a = *entry("martinet_mod2").action;
  EXPECT_LE((cr::canonicalize(a, make_vec({0, 5.5, 1})) - make_vec({0, 1.5, 1})).norm(), 1e-12);
  const Vec c = make_vec({0.2, 1.5, -0.3});
  EXPECT_EQ(cr::canonicalize(a, c), c);
}

TEST(Canonicalize, IdempotentAndGeneratorInvariant) {
  for (const char* name : {"martinet_mod2", "martinet_mod1", "heisenberg_boost"}) {
    const auto& e = entry(name);
    const auto& a = *e.action;
    cr::Philox rng(13, 0);
    for (int i = 0; i < 100; ++i) {
      const Vec p = testing_support::random_point(a.fundamental_box, rng);
      const Vec c = cr::canonicalize(a, p);
      EXPECT_TRUE(a.fundamental_box.contains(c)) << name << " " << p.transpose();
      EXPECT_LE((cr::canonicalize(a, c) - c).norm(), 1e-9) << name;
      EXPECT_LE((cr::canonicalize(a, a.generator(p)) - c).norm(), 1e-9) << name;
      EXPECT_LE((a.generator.inverse(a.generator(p)) - p).norm(), 1e-9) << name;
      const int n = static_cast<int>(rng.below(5)) - 2;
      const Vec moved = a.power(p, n);
      if (e.structure.domain().contains(moved)) {
        EXPECT_LE((cr::canonicalize(a, moved) - c).norm(), 1e-9) << name << " n=" << n;
      }
    }
  }
}

TEST(ReachQuotient, MartinetModOneExamples) {
  const auto& e = entry("martinet_mod1");
  cr::ReachConfig c;
  c.horizon = 2.0;
  c.samples = 4000;
  c.resolution = 32;
  const auto g = cr::reach_quotient(e.structure, *e.action, Vec::Zero(3), Direction::Future, c);
  EXPECT_TRUE(g.contains_point(make_vec({0, 0.25, 0})));
  EXPECT_FALSE(g.contains_point(make_vec({0, 0.25, -0.1})));
  EXPECT_EQ(g.box().lo, e.action->fundamental_box.lo);
  EXPECT_EQ(g.box().hi, e.action->fundamental_box.hi);
}

TEST(ReachQuotient, TrivialActionMatchesSampleReach) {
  const auto& st = entry("minkowski2").structure;
  const auto action = cr::trivial_action(st.domain());
  cr::ReachConfig c;
  c.horizon = 1.5;
  c.samples = 2000;
  c.resolution = 32;
  const Vec p = make_vec({-0.5, 0.2});
  const auto q = cr::reach_quotient(st, action, p, Direction::Future, c);
  const auto d = cr::sample_reach(st, p, Direction::Future, c);
  EXPECT_EQ(q.cells(), d.cells());
  EXPECT_GT(q.count(), 0u);
}

TEST(ReachQuotient, ProjectionOfCoverSamples) {
  const auto& e = entry("martinet_mod2");
  const auto& action = *e.action;
  cr::ReachConfig c;
  c.horizon = 2.0;
  c.samples = 1500;
  c.resolution = 32;
  c.copies = 2;
  const Vec p = make_vec({0.1, 1.0, 0});
  const auto q = cr::reach_quotient(e.structure, action, p, Direction::Future, c);

  const auto cover = e.structure.with_domain(action.cover_box(c.copies));
  const auto sinks = cr::run_trajectories(cover, cr::canonicalize(action, p), Direction::Future, c,
                                          [] { return std::make_unique<SegmentSink>(); });
  auto g = cr::ReachGrid::cubic(action.fundamental_box, c.resolution, q.semantics());
  for (const auto& s : sinks)
    for (const auto& [a, b] : static_cast<const SegmentSink&>(*s).segments)
      cr::mark_segment(g, a, b, action.canonicalize);
  EXPECT_EQ(g.cells(), q.cells());
}

TEST(ReachQuotient, ReportsTruncationWhenCopiesRunOut) {
  const auto& e = entry("martinet_mod1");
  cr::ReachConfig c;
  c.horizon = 3.0;
  c.samples = 500;
  c.resolution = 16;
  c.copies = 1;
  const auto g = cr::reach_quotient(e.structure, *e.action, Vec::Zero(3), Direction::Future, c);
  EXPECT_GT(g.meta().truncated, 0u);
}

TEST(FindClosedCausal, DocumentedLoops) {
  for (const char* name : {"heisenberg_boost", "martinet_mod1"}) {
    const auto& e = entry(name);
    cr::ReachConfig c;
    c.samples = 1000;
    c.horizon = 2.0;
    const auto w = cr::find_closed_causal(e.structure, e.action_ptr(), Vec::Zero(3), c);
    ASSERT_TRUE(w.has_value()) << name;
    EXPECT_LE(w->gap, 1e-9) << name;
    EXPECT_EQ(w->source, "documented");
    EXPECT_LE((e.action->power(w->curve.start(), w->copy) - w->curve.end()).norm(), 1e-9);
  }
}

TEST(FindClosedCausal, BoostLoopIsTheStraightRay) {
  const auto& e = entry("heisenberg_boost");
  cr::ReachConfig c;
  c.samples = 100;
  const auto w = cr::find_closed_causal(e.structure, e.action_ptr(), Vec::Zero(3), c);
  ASSERT_TRUE(w.has_value());
  const Vec end = make_vec({std::cosh(0.5), std::sinh(0.5), 0});
  EXPECT_LE((w->curve.end() - end).norm(), 1e-9);
}

TEST(FindClosedCausal, NoneWithoutAQuotient) {
  for (const char* name : {"heisenberg", "minkowski2"}) {
    const auto& e = entry(name);
    cr::ReachConfig c;
    c.samples = 2000;
    c.horizon = 1.5;
    const Vec p = Vec::Zero(e.structure.dim());
    EXPECT_FALSE(cr::find_closed_causal(e.structure, e.action_ptr(), p, c).has_value()) << name;
  }
}

TEST(FindClosedCausal, Deterministic) {
  const auto& e = entry("martinet_mod1");
  cr::ReachConfig c;
  c.samples = 500;
  c.horizon = 2.0;
  const Vec p = make_vec({0.3, 0.2, 0.1});
  const auto a = cr::find_closed_causal(e.structure, e.action_ptr(), p, c);
  c.threads = 3;
  const auto b = cr::find_closed_causal(e.structure, e.action_ptr(), p, c);
  ASSERT_EQ(a.has_value(), b.has_value());
  if (a) {
    EXPECT_EQ(a->to_json().dump(), b->to_json().dump());
  }
}
