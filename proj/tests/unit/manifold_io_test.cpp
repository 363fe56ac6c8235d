#include <gtest/gtest.h>

#include <fstream>

#include "causalreach/errors.hpp"
#include "causalreach/manifold_io.hpp"
#include "causalreach/registry.hpp"
#include "helpers.hpp"

namespace cr = causalreach;
using cr::make_vec;
using cr::Vec;
using nlohmann::json;

namespace {

std::string data(const std::string& name) { return std::string(CAUSALREACH_TEST_DATA) + "/" + name; }

json heisenberg_doc() {
  std::ifstream in(data("heisenberg.json"));
  return json::parse(in);
}

void expect_same_structure(const cr::SubSpaceTime& a, const cr::SubSpaceTime& b) {
  cr::Philox rng(8, 0);
  for (int i = 0; i < 200; ++i) {
    const Vec p = testing_support::random_admissible(a, rng);
    EXPECT_LE((a.frame(p) - b.frame(p)).norm(), 1e-12);
    EXPECT_LE((a.metric(p) - b.metric(p)).norm(), 1e-12);
    EXPECT_LE((a.time_orientation(p) - b.time_orientation(p)).norm(), 1e-12);
  }
}

}  // namespace

TEST(ManifoldIo, HeisenbergFileMatchesRegistry) {
  const auto st = cr::load_manifold(data("heisenberg.json"));
  EXPECT_EQ(st.name(), "heisenberg_file");
  EXPECT_EQ(st.dim(), 3);
  EXPECT_EQ(st.rank(), 2);
  EXPECT_TRUE(st.constant_metric());
  expect_same_structure(st, cr::get_structure("heisenberg").structure);
}

TEST(ManifoldIo, SmoothstepBlend) {
  const auto st = cr::load_manifold(data("varmetric.json"));
  EXPECT_FALSE(st.constant_metric());
  expect_same_structure(st, cr::get_structure("varmetric").structure);
}

TEST(ManifoldIo, Errors) {
  const auto expect_error = [](const json& doc) {
    EXPECT_THROW(cr::manifold_from_json(doc), cr::ConfigError) << doc.dump();
  };
  json d = heisenberg_doc();
  d["rank"] = 1;
  expect_error(d);
  d = heisenberg_doc();
  d["frame"].erase(1);
  expect_error(d);
  d = heisenberg_doc();
  d["frame"][0][2] = {{"terms", {{0.5, {0, 1}}}}};
  expect_error(d);
  d = heisenberg_doc();
  d["frame"][0][2] = "y/2";
  expect_error(d);
  d = heisenberg_doc();
  d["metric"] = {{-1, 0}};
  expect_error(d);
  d = heisenberg_doc();
  d.erase("domain");
  expect_error(d);
  d = heisenberg_doc();
  d["frame"][0][2] = {{"smoothstep", {{"axis", 1}, {"from", 1}, {"to", 0}}}, {"below", 0}, {"above", 1}};
  expect_error(d);
  EXPECT_THROW(cr::load_manifold(data("missing.json")), cr::ConfigError);
}

TEST(ManifoldIo, DegenerateMetricIsRejectedOnUse) {
  json d = heisenberg_doc();
  d["metric"] = {{0, 0}, {0, 1}};
  EXPECT_ANY_THROW({
    const auto st = cr::manifold_from_json(d);
    cr::metric_index(st.metric(Vec::Zero(3)));
  });
}
