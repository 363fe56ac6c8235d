#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "causalreach/errors.hpp"
#include "causalreach/registry.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

namespace cr = causalreach;
using cr::make_vec;
using cr::Vec;

TEST(Registry, Names) {
  const auto names = cr::registry_names();
  for (const char* n : {"minkowski2", "minkowski3", "heisenberg", "martinet", "martinet_mod2",
                        "martinet_mod1", "heisenberg_boost", "varmetric"})
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
  for (const auto& n : names) EXPECT_EQ(cr::get_structure(n).name, n);
}

TEST(Registry, UnknownNameListsTheKnownOnes) {
  try {
    cr::get_structure("unknown");
    FAIL() << "expected ConfigError";
  } catch (const cr::ConfigError& e) {
    const std::string msg = e.what();
    for (const auto& n : cr::registry_names()) EXPECT_NE(msg.find(n), std::string::npos) << n;
  }
}

TEST(Registry, ClosedFormOracles) {
  const auto h = cr::get_structure("heisenberg");
  ASSERT_TRUE(h.has_predicate("chronological_future"));
  const auto& in = h.predicates.at("chronological_future");
  EXPECT_TRUE(in(Vec::Zero(3), make_vec({0.5, 0.2, 0.01})));
  EXPECT_FALSE(in(Vec::Zero(3), make_vec({1, 0.5, 0.3})));
  EXPECT_FALSE(in(Vec::Zero(3), make_vec({-0.5, 0, 0})));

  const auto m = cr::get_structure("minkowski2");
  ASSERT_TRUE(m.functions.count("time_separation"));
  EXPECT_NEAR(m.functions.at("time_separation")(Vec::Zero(2), make_vec({1, 0.6})), 0.8, 1e-12);
  EXPECT_EQ(m.functions.at("time_separation")(Vec::Zero(2), make_vec({0.5, 1})), 0.0);
}

TEST(Registry, HeisenbergOracleMatchesIndependentFormula) {
  cr::Philox rng(31, 0);
  for (int i = 0; i < 2000; ++i) {
    const Vec p = testing_support::random_point(cr::Box::centered(Vec::Zero(3), 1.0), rng);
    const Vec q = testing_support::random_point(cr::Box::centered(Vec::Zero(3), 1.0), rng);
    EXPECT_EQ(cr::heisenberg::in_chronological_future(p, q), oracle::heisenberg_chron(p, q));
    EXPECT_NEAR(cr::heisenberg::cone_function(p, q), oracle::heisenberg_cone(p, q), 1e-12);
  }
}

TEST(Registry, VarmetricBump) {
  for (double y : {-1.0, 0.0, 0.2, 0.4, 0.5, 0.6, 0.7, 1.5})
    EXPECT_NEAR(cr::varmetric::psi(y), oracle::bump(y), 1e-12) << y;
}

// Every entry: index one, timelike orientation, bracket generating, frame of
// full rank, and (varmetric) a <= 0 with a - b^2 < 0.
TEST(Registry, EntryInvariants) {
  for (const auto& name : cr::registry_names()) {
    const auto e = cr::get_structure(name);
    const auto& st = e.structure;
    cr::Philox rng(3, 0);
    for (int i = 0; i < 200; ++i) {
      const Vec p = testing_support::random_admissible(st, rng);
      const cr::Mat g = st.metric(p);
      ASSERT_EQ(cr::metric_index(g), 1) << name;
      const Vec c = st.time_orientation(p);
      EXPECT_LT(c.dot(g * c), 0) << name;
      EXPECT_TRUE(cr::two_step_check(st, p)) << name << " " << p.transpose();
      Eigen::FullPivLU<cr::Mat> lu(st.frame(p));
      EXPECT_EQ(lu.rank(), st.rank()) << name;
      if (name == "varmetric") {
        const double a = g(0, 0), b = g(0, 1);
        EXPECT_LE(a, 0);
        EXPECT_LT(a - b * b, 0);
        EXPECT_NEAR(a, -oracle::bump(p[1]), 1e-12);
      }
    }
  }
}

TEST(Registry, QuotientEntriesCarryActions) {
  for (const char* name : {"martinet_mod2", "martinet_mod1", "heisenberg_boost"}) {
    const auto e = cr::get_structure(name);
    ASSERT_TRUE(e.action.has_value()) << name;
    EXPECT_NE(e.action_ptr(), nullptr);
    EXPECT_FALSE(e.documented_points.empty()) << name;
  }
  for (const char* name : {"minkowski2", "heisenberg", "martinet", "varmetric"})
    EXPECT_FALSE(cr::get_structure(name).action.has_value()) << name;
  EXPECT_FALSE(cr::get_structure("martinet_mod1").action->documented_loops.empty());
  EXPECT_FALSE(cr::get_structure("heisenberg_boost").action->documented_loops.empty());
}

TEST(Registry, ModTwoRemovesTheOrbitLines) {
  const auto& st = cr::get_structure("martinet_mod2").structure;
  EXPECT_FALSE(st.admissible(make_vec({0, 0, 0.3})));
  EXPECT_FALSE(st.admissible(make_vec({0, 2, -0.3})));
  EXPECT_TRUE(st.admissible(make_vec({0, 1, 0})));
  EXPECT_TRUE(st.admissible(make_vec({0.2, 0, 0})));
}

TEST(Registry, BoostParameter) {
  const auto e = cr::get_structure("heisenberg_boost", 0.8);
  const Vec p = make_vec({0.1, 0.2, 0.3});
  const Vec q = e.action->generator(p);
  EXPECT_NEAR(q[0], 0.1 - std::cosh(0.8), 1e-12);
  EXPECT_NEAR(q[1], 0.2 - std::sinh(0.8), 1e-12);
  EXPECT_NEAR(q[2], 0.3 + 0.5 * (0.2 * std::cosh(0.8) - 0.1 * std::sinh(0.8)), 1e-12);
}

TEST(Registry, ExpectedVerdictsPresent) {
  for (const auto& name : cr::registry_names()) {
    const auto e = cr::get_structure(name);
    EXPECT_FALSE(e.expected.chronological.empty()) << name;
    EXPECT_FALSE(e.expected.topology.empty()) << name;
    EXPECT_FALSE(e.provenance.empty()) << name;
  }
}
