#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "heer/analysis.hpp"
#include "heer/error.hpp"
#include "heer/eval.hpp"
#include "oracles.hpp"

using namespace heer;

namespace {

// Authors a0..a2, papers p0..p3, years y0 y1: an 8-node version of the
// authorship / publishing-year example.
HinGraph bibliography() {
  Schema s;
  s.add_node_type("author");
  s.add_node_type("paper");
  s.add_node_type("year");
  s.add_edge_type("authorship", "author", "paper", false);
  s.add_edge_type("in_year", "paper", "year", false);
  s.add_edge_type("cites", "paper", "paper", true);
  return HinGraph(s, {"a0", "a1", "a2", "p0", "p1", "p2", "p3", "y0", "y1"}, {0, 0, 0, 1, 1, 1, 1, 2, 2},
                  {{0, 3, 0, 1.0},
                   {1, 3, 0, 2.0},
                   {1, 4, 0, 1.0},
                   {2, 5, 0, 1.0},
                   {2, 6, 0, 0.5},
                   {3, 7, 1, 1.0},
                   {4, 7, 1, 1.0},
                   {5, 8, 1, 1.0},
                   {6, 8, 1, 1.0},
                   {3, 4, 2, 1.0},
                   {5, 4, 2, 3.0}});
}

// a0 a1 a2 | p0 p1 p2 | v0
HinGraph seven_nodes() {
  Schema s;
  s.add_node_type("author");
  s.add_node_type("paper");
  s.add_node_type("venue");
  s.add_edge_type("aut", "author", "paper", false);
  s.add_edge_type("ven", "paper", "venue", false);
  return HinGraph(s, {"a0", "a1", "a2", "p0", "p1", "p2", "v0"}, {0, 0, 0, 1, 1, 1, 2},
                  {{0, 3, 0, 1.0}, {1, 3, 0, 1.0}, {1, 4, 0, 1.0}, {2, 5, 0, 1.0}, {3, 6, 1, 1.0}, {4, 6, 1, 1.0}});
}

std::vector<std::string> ids(const HinGraph& g, const std::vector<NodeId>& nodes) {
  std::vector<std::string> out;
  for (NodeId u : nodes) out.push_back(g.node_id(u));
  return out;
}

}  // namespace

TEST(Reachability, MatchesDenseProduct) {
  const HinGraph g = bibliography();
  for (TypeId r = 0; r < 3; ++r) {
    for (bool reverse : {false, true}) {
      const TypedAdjacency adj(g, r, reverse);
      const auto p = oracle::dense_transition(g, r, reverse);
      for (NodeId u = 0; u < g.num_nodes(); ++u) {
        for (NodeId v = 0; v < g.num_nodes(); ++v) {
          double l = 0;
          for (NodeId x = 0; x < g.num_nodes(); ++x) l += p[u][x] * p[v][x];
          EXPECT_NEAR(reachability(adj, u, v), l, 1e-15);
        }
      }
    }
  }
}

TEST(Jaccard, SameTypeIsOne) {
  const HinGraph g = bibliography();
  for (NodeId p = 3; p < 7; ++p) EXPECT_DOUBLE_EQ(jaccard_coefficient(g, p, 0, 0), 1.0);
}

TEST(Jaccard, DisjointSupportsAreZero) {
  Schema s;
  s.add_node_type("hub");
  s.add_node_type("x");
  s.add_edge_type("r1", "hub", "x", false);
  s.add_edge_type("r2", "hub", "x", false);
  const HinGraph g(s, {"h0", "h1", "x0", "x1"}, {0, 0, 1, 1}, {{0, 2, 0, 1.0}, {1, 3, 1, 1.0}});
  EXPECT_EQ(jaccard_coefficient(g, 0, 0, 1), 0.0);  // h0 only has r1 edges
  EXPECT_EQ(jaccard_coefficient(g, 1, 0, 1), 0.0);
}

TEST(Jaccard, EightNodeFixtureMatchesDenseOracle) {
  const HinGraph g = bibliography();
  for (NodeId p = 3; p < 7; ++p) {
    EXPECT_NEAR(jaccard_coefficient(g, p, 0, 1), oracle::dense_jaccard(g, p, 0, 1), 1e-12);
    EXPECT_NEAR(jaccard_coefficient(g, p, 1, 0), oracle::dense_jaccard(g, p, 1, 0), 1e-12);
    EXPECT_NEAR(jaccard_coefficient(g, p, 0, 2), oracle::dense_jaccard(g, p, 0, 2), 1e-12);
  }
  const auto profile = jaccard_profile(g, 0, 1);
  EXPECT_EQ(g.schema().node_type_name(profile.hub), "paper");
  EXPECT_EQ(profile.nodes.size(), 4u);
  EXPECT_THROW(jaccard_coefficient(g, 0, 0, 1), ValidationError);  // authors have no in_year edges
}

TEST(Jaccard, RandomGraphsMatchDenseOracle) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const HinGraph g = oracle::random_hin(seed, 2, 8, 25);
    const auto& s = g.schema();
    for (TypeId r1 = 0; r1 < g.num_edge_types(); ++r1) {
      for (TypeId r2 = 0; r2 < g.num_edge_types(); ++r2) {
        for (bool reverse : {false, true}) {
          for (NodeId u = 0; u < g.num_nodes(); ++u) {
            const TypeId t = g.node_type(u);
            auto ok = [&](TypeId r) {
              const auto& et = s.edge_type(r);
              if (et.directed) return reverse ? et.dst == t : et.src == t;
              return et.src == t || et.dst == t;
            };
            if (!ok(r1) || !ok(r2)) continue;
            ASSERT_NEAR(jaccard_coefficient(g, u, r1, r2, reverse), oracle::dense_jaccard(g, u, r1, r2, reverse),
                        1e-12);
          }
        }
      }
    }
  }
}

TEST(JaccardCdf, AllZeroAndMonotone) {
  JaccardProfile zero;
  zero.coefficients.assign(5, 0.0);
  for (const auto& [t, f] : jaccard_cdf(zero, default_cdf_grid())) EXPECT_EQ(f, 1.0);

  const HinGraph g = generate_synthetic_hin(SyntheticSpec::two_semantics(true), 2);
  const auto cdf = jaccard_cdf(g, 0, 1, default_cdf_grid());
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    EXPECT_GT(cdf[i].first, cdf[i - 1].first);
    EXPECT_GE(cdf[i].second, cdf[i - 1].second);
  }
  EXPECT_EQ(cdf.back().second, 1.0);
}

TEST(JaccardCdf, IncompatiblePairDominatesAtSmallThresholds) {
  const auto grid = default_cdf_grid();
  const HinGraph inc = generate_synthetic_hin(SyntheticSpec::two_semantics(true), 1);
  const HinGraph comp = generate_synthetic_hin(SyntheticSpec::two_semantics(false), 1);
  const auto a = jaccard_cdf(inc, 0, 1, grid);
  const auto b = jaccard_cdf(comp, 0, 1, grid);
  bool strict = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] > 0.1) break;
    EXPECT_GE(a[i].second, b[i].second) << "threshold " << grid[i];
    strict |= a[i].second > b[i].second;
  }
  EXPECT_TRUE(strict);
  EXPECT_NE(std::find(grid.begin(), grid.end(), 5e-5), grid.end());
}

TEST(Standardize, Examples) {
  MetricStore m(1, 2);
  m.column(0)[0] = 1.0;
  m.column(0)[1] = 3.0;
  const auto z = standardize_metrics(m);
  EXPECT_EQ(z.column(0)[0], -1.0);
  EXPECT_EQ(z.column(0)[1], 1.0);

  const MetricStore r = oracle::random_metrics(3, 10, 4);
  const auto z1 = standardize_metrics(r);
  const auto z2 = standardize_metrics(z1);
  for (std::size_t i = 0; i < z1.data().size(); ++i) EXPECT_NEAR(z1.data()[i], z2.data()[i], 1e-12);

  try {
    standardize_metrics(MetricStore(2, 4, 1.0));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("zero variance"), std::string::npos);
  }
  EXPECT_THROW(standardize_metrics(MetricStore(2, 1, 1.0)), ValidationError);
}

TEST(MetricSimilarity, SelfAndAntipodal) {
  MetricStore m(2, 4);
  const double col[] = {0.3, 1.2, -0.7, 2.0};
  for (std::size_t k = 0; k < 4; ++k) {
    m.column(0)[k] = col[k];
    m.column(1)[k] = 5.0 - 2.0 * col[k];
  }
  EXPECT_NEAR(metric_similarity(m, 0, 0), 1.0, 1e-15);
  EXPECT_NEAR(metric_similarity(m, 0, 1), -1.0, 1e-15);
}

TEST(Heatmap, OrderIsPermutationAndCsvShape) {
  const MetricStore z = standardize_metrics(oracle::random_metrics(3, 12, 8));
  auto order = heatmap_column_order(z);
  ASSERT_EQ(order.size(), 12u);
  auto sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < 12; ++k) EXPECT_EQ(sorted[k], k);

  const auto csv = heatmap_csv({"a", "b", "c"}, z);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("edge_type,d", 0), 0u);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 12);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Heatmap, ChainsSimilarColumns) {
  // Columns 0 and 2 are identical across types, 1 is their negation.
  MetricStore z(2, 3);
  z.column(0)[0] = 2.0;
  z.column(0)[1] = -1.0;
  z.column(0)[2] = 2.0;
  z.column(1)[0] = -1.0;
  z.column(1)[1] = 0.5;
  z.column(1)[2] = -1.0;
  EXPECT_EQ(heatmap_column_order(z), (std::vector<std::size_t>{0, 2, 1}));
}

TEST(Metapath, LengthOneAndVenue) {
  const HinGraph g = seven_nodes();
  const auto aut = parse_metapath(g.schema(), "aut");
  EXPECT_EQ(ids(g, metapath_neighbors(g, 1, aut, 0, 1)), (std::vector<std::string>{"p0", "p1"}));
  const auto ven = parse_metapath(g.schema(), "ven,ven");
  EXPECT_EQ(ids(g, metapath_neighbors(g, 3, ven, 0, 1)), (std::vector<std::string>{"p1"}));
  EXPECT_TRUE(metapath_neighbors(g, 5, ven, 0, 1).empty());
}

TEST(Metapath, CoauthorHandEnumeration) {
  const HinGraph g = seven_nodes();
  const auto path = parse_metapath(g.schema(), "aut, aut");
  EXPECT_EQ(ids(g, metapath_neighbors(g, 0, path, 0, 1)), (std::vector<std::string>{"a1"}));
  EXPECT_EQ(ids(g, metapath_neighbors(g, 1, path, 0, 1)), (std::vector<std::string>{"a0"}));
  EXPECT_TRUE(metapath_neighbors(g, 2, path, 0, 1).empty());
  EXPECT_EQ(ids(g, metapath_neighbors(g, 3, path, 0, 1)), (std::vector<std::string>{"p1"}));
  const auto long_path = parse_metapath(g.schema(), "aut,ven,ven,aut");
  EXPECT_EQ(ids(g, metapath_neighbors(g, 0, long_path, 0, 1)), (std::vector<std::string>{"a1"}));
}

TEST(Metapath, DirectedStepsAndValidation) {
  const HinGraph g = bibliography();
  const auto& s = g.schema();
  EXPECT_EQ(ids(g, metapath_neighbors(g, 3, parse_metapath(s, "cites"), 0, 1)), (std::vector<std::string>{"p1"}));
  EXPECT_EQ(ids(g, metapath_neighbors(g, 4, parse_metapath(s, "^cites"), 0, 1)),
            (std::vector<std::string>{"p0", "p2"}));
  EXPECT_THROW(metapath_neighbors(g, 0, parse_metapath(s, "in_year"), 0, 1), ValidationError);
  EXPECT_THROW(parse_metapath(s, "aut,nope"), ValidationError);
  EXPECT_THROW(parse_metapath(s, ""), ValidationError);
}

TEST(Metapath, DownsamplingAndCsv) {
  const HinGraph g = generate_synthetic_hin(SyntheticSpec::two_semantics(true), 3);
  const auto path = parse_metapath(g.schema(), "likes,likes");
  const auto all = metapath_neighbors(g, 0, path, 0, 1);
  const auto few = metapath_neighbors(g, 0, path, 10, 1);
  ASSERT_GT(all.size(), 10u);
  ASSERT_EQ(few.size(), 10u);
  for (NodeId x : few) EXPECT_TRUE(std::binary_search(all.begin(), all.end(), x));
  EXPECT_EQ(few, metapath_neighbors(g, 0, path, 10, 1));

  const EmbeddingStore e = oracle::random_store(g.num_nodes(), 4, 1);
  const auto csv = metapath_csv(g, e, {{"likes,likes", few}});
  EXPECT_EQ(csv.rfind("node_id,metapath_label,v_1,v_2,v_3,v_4\n", 0), 0u);
  EXPECT_NE(csv.find(",\"likes,likes\","), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
}
