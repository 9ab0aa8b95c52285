#include <cmath>
#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "heer/error.hpp"
#include "heer/eval.hpp"
#include "heer/trainer.hpp"
#include "oracles.hpp"

using namespace heer;

namespace {

HinGraph two_cliques() {
  Schema s;
  s.add_node_type("n");
  s.add_edge_type("link", "n", "n", false);
  std::vector<std::string> ids;
  std::vector<TypeId> types;
  std::vector<TypedEdge> edges;
  for (NodeId i = 0; i < 16; ++i) {
    ids.push_back("v" + std::to_string(i));
    types.push_back(0);
  }
  for (NodeId base : {0u, 8u}) {
    for (NodeId a = 0; a < 8; ++a) {
      for (NodeId b = a + 1; b < 8; ++b) edges.push_back({base + a, base + b, 0, 1.0});
    }
  }
  return HinGraph(s, ids, types, edges);
}

TrainConfig small_config() {
  TrainConfig c;
  c.dim = 16;
  c.epochs = 3;
  c.pretrain_epochs = 20;
  return c;
}

const HinGraph& synthetic() {
  static const HinGraph g = [] {
    auto spec = SyntheticSpec::two_semantics(true);
    spec.node_types = {{"user", 200}, {"item", 60}};
    spec.edge_types[0].edges = spec.edge_types[1].edges = 1200;
    spec.clusters = 6;
    return generate_synthetic_hin(spec, 3);
  }();
  return g;
}

}  // namespace

TEST(TrainConfig, DefaultsAndValidation) {
  const TrainConfig c;
  EXPECT_EQ(c.dim, 256u);
  EXPECT_EQ(c.negatives, 5u);
  EXPECT_EQ(c.lr, 10.0);
  EXPECT_EQ(c.rescale, 0.1);
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.dim = 7;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = c;
  bad.dim = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = c;
  bad.lr = -1;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = c;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = c;
  bad.workers = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(TrainConfig, JsonRoundTripAndHash) {
  TrainConfig c;
  c.seed = 99;
  c.lr = 2.5;
  c.freeze_metrics = true;
  const auto back = TrainConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_EQ(c.hash().size(), 16u);
  c.seed = 100;
  EXPECT_NE(back.hash(), c.hash());
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
}

TEST(Init, UniformInDocumentedRange) {
  const auto e = random_embeddings(50, 8, 1);
  const double bound = 0.5 / 4;
  for (double x : e.data()) {
    EXPECT_GE(x, -bound);
    EXPECT_LE(x, bound);
  }
  EXPECT_EQ(e, random_embeddings(50, 8, 1));
  EXPECT_NE(e, random_embeddings(50, 8, 2));
}

TEST(Pretrain, ZeroEpochsReturnsInit) {
  const HinGraph g = two_cliques();
  auto c = small_config();
  c.pretrain_epochs = 0;
  EXPECT_EQ(pretrain_line(g, c), random_embeddings(g.num_nodes(), c.dim, c.seed));
}

TEST(Pretrain, Reproducible) {
  const HinGraph g = two_cliques();
  const auto c = small_config();
  EXPECT_EQ(pretrain_line(g, c), pretrain_line(g, c));
}

TEST(Pretrain, SeparatesCliques) {
  const HinGraph g = two_cliques();
  auto c = small_config();
  c.pretrain_epochs = 200;
  const auto e = pretrain_line(g, c);
  double intra = 0, inter = 0;
  int ni = 0, nx = 0;
  for (NodeId u = 0; u < 16; ++u) {
    for (NodeId v = 0; v < 16; ++v) {
      if (u == v) continue;
      double s = 0;
      for (std::size_t k = 0; k < e.half_dim(); ++k) s += e.outward(u)[k] * e.inward(v)[k];
      if ((u < 8) == (v < 8)) {
        intra += s;
        ++ni;
      } else {
        inter += s;
        ++nx;
      }
    }
  }
  EXPECT_GT(intra / ni, inter / nx);
}

TEST(Rescale, Examples) {
  EmbeddingStore s(1, 2);
  s.column(0)[0] = 2.0;
  s.column(0)[1] = -3.0;
  const auto r = rescale_embeddings(s, 0.1);
  EXPECT_DOUBLE_EQ(r.column(0)[0], 0.2);
  EXPECT_EQ(rescale_embeddings(s, 1.0), s);
  EXPECT_THROW(rescale_embeddings(s, 0.0), ValidationError);

  const EmbeddingStore a = oracle::random_store(2, 6, 4);
  const EmbeddingStore b = rescale_embeddings(a, 0.1);
  for (bool directed : {true, false}) {
    const auto ga = edge_embedding(a, 0, 1, directed);
    const auto gb = edge_embedding(b, 0, 1, directed);
    for (std::size_t k = 0; k < ga.size(); ++k) EXPECT_NEAR(gb[k], 0.01 * ga[k], 1e-15);
  }
}

TEST(TrainHeer, ZeroEpochsReturnsInitAndOnes) {
  const HinGraph& g = synthetic();
  auto c = small_config();
  c.epochs = 0;
  const auto init = random_embeddings(g.num_nodes(), c.dim, 5);
  const auto r = train_heer(g, init, c);
  EXPECT_EQ(r.embeddings, init);
  EXPECT_EQ(r.metrics, MetricStore(g.num_edge_types(), c.dim / 2, 1.0));
  EXPECT_TRUE(r.loss_trace.empty());
}

TEST(TrainHeer, LossDecreasesOverFiveEpochs) {
  const HinGraph& g = synthetic();
  auto c = small_config();
  c.epochs = 5;
  const auto init = rescale_embeddings(pretrain_line(g, c), c.rescale);
  const auto r = train_heer(g, init, c);
  ASSERT_EQ(r.loss_trace.size(), 5u);
  EXPECT_LT(r.loss_trace.back(), r.loss_trace.front());
}

TEST(TrainHeer, FrozenMetricsStayOnes) {
  const HinGraph& g = synthetic();
  auto c = small_config();
  c.freeze_metrics = true;
  const auto r = train_heer(g, random_embeddings(g.num_nodes(), c.dim, 1), c);
  EXPECT_EQ(r.metrics, MetricStore(g.num_edge_types(), c.dim / 2, 1.0));
}

TEST(TrainHeer, DeterministicSingleWorker) {
  const HinGraph& g = synthetic();
  const auto c = small_config();
  const auto init = random_embeddings(g.num_nodes(), c.dim, 1);
  const auto a = train_heer(g, init, c);
  const auto b = train_heer(g, init, c);
  EXPECT_EQ(a.embeddings, b.embeddings);
  EXPECT_EQ(a.metrics, b.metrics);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
}

TEST(TrainHeer, EachStepTouchesOnlySampleColumns) {
  const HinGraph& g = synthetic();
  auto c = small_config();
  c.epochs = 1;
  c.samples_per_epoch = 300;
  const auto init = random_embeddings(g.num_nodes(), c.dim, 2);
  EmbeddingStore prev = init;
  MetricStore prev_m(g.num_edge_types(), c.dim / 2, 1.0);
  std::size_t steps = 0;
  train_heer(g, init, c, [&](const NsSample& s, const SampleLossGrad&, const EmbeddingStore& e, const MetricStore& m) {
    std::set<NodeId> touched{s.u, s.v};
    touched.insert(s.neg_v.begin(), s.neg_v.end());
    touched.insert(s.neg_u.begin(), s.neg_u.end());
    EXPECT_EQ(s.neg_v.size(), c.negatives);
    for (NodeId x : s.neg_v) {
      EXPECT_EQ(g.node_type(x), g.node_type(s.v));
      EXPECT_NE(x, s.v);
    }
    for (NodeId x : s.neg_u) {
      EXPECT_EQ(g.node_type(x), g.node_type(s.u));
      EXPECT_NE(x, s.u);
    }
    for (NodeId n = 0; n < g.num_nodes(); ++n) {
      if (!touched.count(n)) {
        ASSERT_TRUE(std::equal(e.column(n).begin(), e.column(n).end(), prev.column(n).begin()));
      }
    }
    for (TypeId r = 0; r < g.num_edge_types(); ++r) {
      if (r != s.type) {
        ASSERT_TRUE(std::equal(m.column(r).begin(), m.column(r).end(), prev_m.column(r).begin()));
      }
    }
    prev = e;
    prev_m = m;
    ++steps;
  });
  EXPECT_EQ(steps, 300u);
}

TEST(TrainHeer, MultiWorkerRunsAndStaysFinite) {
  const HinGraph& g = synthetic();
  auto c = small_config();
  c.workers = 4;
  const auto init = rescale_embeddings(pretrain_line(g, c), c.rescale);
  const auto r = train_heer(g, init, c);
  ASSERT_EQ(r.loss_trace.size(), c.epochs);
  for (double x : r.embeddings.data()) ASSERT_TRUE(std::isfinite(x));
  EXPECT_LT(r.loss_trace.back(), r.loss_trace.front());
}

TEST(TrainHeer, DivergenceKeepsLastGoodCheckpoint) {
  const HinGraph& g = synthetic();
  auto c = small_config();
  c.lr = 1e6;
  c.batch_size = 1;
  c.epochs = 5;
  const auto init = random_embeddings(g.num_nodes(), c.dim, 3);
  try {
    train_heer(g, init, c);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    const auto& ck = e.last_good();
    EXPECT_EQ(ck.loss_trace.size(), ck.epoch);
    for (double x : ck.embeddings.data()) ASSERT_TRUE(std::isfinite(x));
    EXPECT_EQ(ck.config_hash, c.hash());
    if (ck.epoch == 0) {
      EXPECT_EQ(ck.embeddings, init);
    }

    const auto dir = std::filesystem::temp_directory_path() / "heer_test_ckpt";
    std::filesystem::remove_all(dir);
    save_checkpoint(dir, g, ck);
    const auto back = load_checkpoint(dir, g);
    EXPECT_EQ(back.embeddings, ck.embeddings);
    EXPECT_EQ(back.metrics, ck.metrics);
    EXPECT_EQ(back.epoch, ck.epoch);
    EXPECT_EQ(back.loss_trace, ck.loss_trace);
    EXPECT_EQ(back.config_hash, ck.config_hash);
    std::filesystem::remove_all(dir);
  }
}

TEST(TrainHeer, RejectsMismatchedInit) {
  const HinGraph& g = synthetic();
  const auto c = small_config();
  EXPECT_THROW(train_heer(g, random_embeddings(g.num_nodes(), 8, 1), c), ValidationError);
  EXPECT_THROW(train_heer(g, random_embeddings(3, 16, 1), c), ValidationError);
}
