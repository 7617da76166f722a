#include <gtest/gtest.h>

#include <set>

#include "rssloc/rssloc.hpp"

using namespace rssloc;

namespace {

ExperimentSpec tiny_spec(const std::map<std::string, std::string>& extra = {})
{
  KeyValues kv;
  kv.set("L", "60");
  kv.set("R", "12");
  kv.set("n_max", "2");
  kv.set("runs", "2");
  for (const auto& [k, v] : extra)
    kv.set(k, v);
  return parse_experiment_spec(kv);
}

std::vector<Position> positions_of(const NetworkGeometry& g, NodeRole role)
{
  std::vector<Position> out;
  for (const auto& n : g.nodes())
    if (n.role == role)
      out.push_back(n.position);
  return out;
}

}  // namespace

TEST(Harness, Network2Layout)
{
  const auto g = load_bundled_network("network2", 20.0);
  EXPECT_EQ(g.agent_ids().size(), 10u);
  EXPECT_EQ(g.anchor_ids().size(), 5u);
  const auto anchors = positions_of(g, NodeRole::anchor);
  for (const auto& a : positions_of(g, NodeRole::agent))
    EXPECT_TRUE(inside_convex_hull(anchors, a));
  const auto box = g.bounding_box();
  EXPECT_EQ(box.x_min, 0.0);
  EXPECT_EQ(box.x_max, 35.0);
}

TEST(Harness, Network1LikeHasAgentsOutsideHull)
{
  const auto g = load_bundled_network("network1_like", 20.0);
  const auto anchors = positions_of(g, NodeRole::anchor);
  int outside = 0;
  for (const auto& a : positions_of(g, NodeRole::agent))
    outside += !inside_convex_hull(anchors, a);
  EXPECT_GT(outside, 0);
  EXPECT_THROW(load_bundled_network("nope"), ConfigError);
}

TEST(Harness, HullTest)
{
  const std::vector<Position> sq{{0, 0}, {2, 0}, {2, 2}, {0, 2}, {1, 1}};
  EXPECT_TRUE(inside_convex_hull(sq, {1, 0.5}));
  EXPECT_TRUE(inside_convex_hull(sq, {2, 1}));
  EXPECT_FALSE(inside_convex_hull(sq, {2.1, 1}));
}

TEST(Harness, ValueLists)
{
  EXPECT_EQ(parse_value_list("{1..6}", "v"), (std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(parse_value_list("3..4", "v"), (std::vector<double>{3, 4}));
  EXPECT_EQ(parse_value_list("2.5, 3,4.75", "v"), (std::vector<double>{2.5, 3, 4.75}));
  EXPECT_TRUE(parse_value_list("", "v").empty());
  EXPECT_THROW(parse_value_list("5..2", "v"), ConfigError);
  EXPECT_THROW(parse_value_list("1,x", "v"), ConfigError);
}

TEST(Harness, SpecDefaultsAndErrors)
{
  const auto s = parse_experiment_spec(KeyValues{});
  EXPECT_EQ(s.engine.particles, 1000u);
  EXPECT_EQ(s.engine.grid_points, 100u);
  EXPECT_EQ(s.engine.max_iterations, 10);
  EXPECT_EQ(algorithm_name(s.engine), "spawn-ais");
  EXPECT_EQ(s.channel.noise_std, 3.0);

  for (auto [k, v] : std::vector<std::pair<std::string, std::string>>{
           {"colour", "blue"}, {"L", "ten"}, {"algorithm", "gibbs"}, {"sweep.axis", "sigma"},
           {"R", "1"}, {"alpha_prior_hi", "1.0"}, {"report_timings", "yes"}}) {
    KeyValues kv;
    kv.set(k, v);
    EXPECT_THROW(parse_experiment_spec(kv), ConfigError) << k;
  }
}

TEST(Harness, ConfigHashTracksContent)
{
  const auto a = tiny_spec();
  const auto b = tiny_spec();
  const auto c = tiny_spec({{"sigma", "4"}});
  EXPECT_EQ(a.config_hash, b.config_hash);
  EXPECT_NE(a.config_hash, c.config_hash);
  EXPECT_EQ(a.config_hash.size(), 16u);
  // a key set to its default value leaves the hash unchanged
  EXPECT_EQ(tiny_spec({{"sigma", "3"}}).config_hash, a.config_hash);
}

TEST(Harness, AlgorithmNames)
{
  EngineConfig cfg;
  for (const char* name : {"bp-is", "bp-ais", "spawn-is", "spawn-ais"}) {
    apply_algorithm(cfg, name);
    EXPECT_EQ(algorithm_name(cfg), name);
  }
}

TEST(Harness, RunSeedsDiffer)
{
  std::set<std::uint64_t> seen;
  for (int k = 0; k < 100; ++k)
    seen.insert(run_seed(1, k));
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(run_seed(1, 3), run_seed(1, 3));
}

TEST(Harness, SmallSweepIsDeterministic)
{
  const auto spec = tiny_spec({{"sweep.axis", "sigma"}, {"sweep.values", "2,4"}});
  const auto a = run_experiment(spec);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].value, 2.0);
  EXPECT_EQ(a[1].value, 4.0);
  EXPECT_EQ(a[0].runs, 2);
  EXPECT_EQ(a[0].details.size(), 2u);

  const auto b = run_experiment(tiny_spec(
      {{"sweep.axis", "sigma"}, {"sweep.values", "2,4"}, {"threads", "2"}}));
  for (std::size_t v = 0; v < 2; ++v) {
    EXPECT_EQ(a[v].metrics.mse_alpha, b[v].metrics.mse_alpha);
    EXPECT_EQ(a[v].metrics.rmse_positions, b[v].metrics.rmse_positions);
    EXPECT_TRUE(std::isfinite(a[v].metrics.rmse_positions));
  }
}

TEST(Harness, RunSingleUsesTruthOrder)
{
  const auto spec = tiny_spec();
  const auto g = build_geometry(spec);
  const auto r = run_single(spec, g, 5);
  ASSERT_EQ(r.truths.size(), 10u);
  EXPECT_EQ(r.truths[0], g.node(1).position);
  EXPECT_EQ(r.estimates.positions.size(), 10u);
  EXPECT_GE(r.estimates.alpha, 1.5);
  EXPECT_LE(r.estimates.alpha, 6.0);
}

TEST(Harness, LogLogSlope)
{
  const std::vector<double> x{1, 2, 4, 8};
  std::vector<double> y;
  for (double v : x)
    y.push_back(3.0 * v * v);
  EXPECT_NEAR(loglog_slope(x, y), 2.0, 1e-12);
}

TEST(Harness, RandomNetworkIsSeeded)
{
  const auto a = build_geometry(tiny_spec({{"network", "random"}, {"seed", "9"}}));
  const auto b = build_geometry(tiny_spec({{"network", "random"}, {"seed", "9"}}));
  ASSERT_EQ(a.size(), 15u);
  for (std::size_t k = 0; k < a.size(); ++k)
    EXPECT_EQ(a.nodes()[k].position, b.nodes()[k].position);
}
