#include <gtest/gtest.h>

#include <sstream>

#include "rssloc/rssloc.hpp"

using namespace rssloc;

TEST(Io, NetworkRoundTrip)
{
  const auto g = load_bundled_network("network2", 20.0);
  std::ostringstream os;
  write_network(os, g);
  const auto back = parse_network(os.str(), 20.0);
  ASSERT_EQ(back.size(), g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_EQ(back.nodes()[k].id, g.nodes()[k].id);
    EXPECT_EQ(back.nodes()[k].role, g.nodes()[k].role);
    EXPECT_EQ(back.nodes()[k].position, g.nodes()[k].position);
  }
}

TEST(Io, MeasurementRoundTrip)
{
  const auto g = load_bundled_network("network2", 20.0);
  Rng rng = make_stream(4, StreamPurpose::measurements);
  const auto ms = synthesize_measurements(rng, g, ChannelParams{}, 3.5);
  std::ostringstream os;
  write_measurements(os, ms);
  const auto back = parse_measurements(os.str(), 3.0);
  ASSERT_EQ(back.edges.size(), ms.edges.size());
  for (std::size_t k = 0; k < ms.edges.size(); ++k) {
    EXPECT_EQ(back.edges[k].i, ms.edges[k].i);
    EXPECT_EQ(back.edges[k].j, ms.edges[k].j);
    EXPECT_EQ(back.edges[k].rss_dbm, ms.edges[k].rss_dbm);
  }
}

TEST(Io, MeasurementDefaultsAndOrdering)
{
  const auto ms = parse_measurements("# note\ni,j,r_dbm\n\n7,2,-55.5\n", 2.5);
  ASSERT_EQ(ms.edges.size(), 1u);
  EXPECT_EQ(ms.edges[0].i, 2);
  EXPECT_EQ(ms.edges[0].j, 7);
  EXPECT_EQ(ms.edges[0].sigma, 2.5);
}

TEST(Io, TableErrors)
{
  EXPECT_THROW(parse_network("x,y\n1,agent,0,0\n", 10.0), ConfigError);
  EXPECT_THROW(parse_network("", 10.0), ConfigError);
  EXPECT_THROW(parse_network("id,role,x,y\n1,robot,0,0\n", 10.0), ConfigError);
  EXPECT_THROW(parse_network("id,role,x,y\n1,anchor,0\n", 10.0), ConfigError);
  EXPECT_THROW(parse_network("id,role,x,y\n1,anchor,0,abc\n", 10.0), ConfigError);
  EXPECT_THROW(parse_network("id,role,x,y\n1,agent,0,0\n", 10.0), ConfigError);  // no anchor
  EXPECT_THROW(parse_measurements("i,j,r_dbm\n1,2\n", 3.0), ConfigError);
  EXPECT_THROW(read_file("/nonexistent/file.csv"), MissingFileError);
}

TEST(Io, Numbers)
{
  EXPECT_EQ(parse_double(" 2.5", "x"), 2.5);  // stod skips leading space
  EXPECT_THROW(parse_double("2.5x", "x"), ConfigError);
  EXPECT_EQ(parse_int("-12", "n"), -12);
  EXPECT_THROW(parse_int("1.5", "n"), ConfigError);
  EXPECT_THROW(parse_u64("-1", "n"), ConfigError);
  for (double v : {0.1, -3.0e-17, 123456.789, 1.0 / 3.0})
    EXPECT_EQ(std::stod(fmt_double(v)), v);
  EXPECT_EQ(fmt_fixed(2.0, 3), "2.000");
}

TEST(Io, KeyValues)
{
  const auto kv = KeyValues::parse("# header\nL = 500 # inline\n  sweep.values={1..6}\n\nR=20\n");
  EXPECT_EQ(kv.get("L", ""), "500");
  EXPECT_EQ(kv.get("sweep.values", ""), "{1..6}");
  EXPECT_EQ(kv.get("R", ""), "20");
  EXPECT_EQ(kv.get("missing", "dflt"), "dflt");
  EXPECT_EQ(kv.canonical(), "L = 500\nR = 20\nsweep.values = {1..6}\n");
  EXPECT_THROW(KeyValues::parse("novalue\n"), ConfigError);
  EXPECT_THROW(KeyValues::parse("= 3\n"), ConfigError);
}

TEST(Io, HashIsStable)
{
  EXPECT_EQ(hex64(fnv1a("")), "cbf29ce484222325");
  EXPECT_EQ(hex64(fnv1a("a")), "af63dc4c8601ec8c");
}

TEST(Io, OutputHeader)
{
  EXPECT_EQ(output_header("00ff", 7), "# rssloc 0.1.0 config_hash=00ff seed=7\n");
}

TEST(Io, BeliefRows)
{
  std::ostringstream os;
  write_belief_header(os);
  write_belief_rows(os, 3, ParticleBelief{4, {{1.5, 2}, {0, -1}}});
  EXPECT_EQ(os.str(), "iter,node_id,sample_index,x,y\n3,4,0,1.5,2\n3,4,1,0,-1\n");
}
