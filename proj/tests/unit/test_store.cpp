#include <gtest/gtest.h>

#include <map>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "distop/oracles/oracles.hpp"
#include "distop/store/sampling.hpp"
#include "support/fixtures.hpp"

using namespace distop;
using distop::fixtures::fill;
using distop::fixtures::transition;
using distop::fixtures::v3;
using topology::OegnConfig;
using topology::TopologyGraph;

namespace {

TopologyGraph graph_with_counts(const std::vector<int>& counts) {
  OegnConfig cfg;
  cfg.buffer_size = 100000;
  TopologyGraph g(cfg, 3);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const NodeId id = g.add_node(v3(static_cast<double>(i)));
    fill(g, id, counts[i], counts[i]);
  }
  return g;
}

double chi_square_p(const std::vector<long>& observed, const std::vector<double>& p) {
  long n = 0;
  for (long o : observed) n += o;
  double stat = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) {
      EXPECT_EQ(observed[i], 0);
      continue;
    }
    const double e = p[i] * static_cast<double>(n);
    stat += (static_cast<double>(observed[i]) - e) * (static_cast<double>(observed[i]) - e) / e;
    ++cells;
  }
  boost::math::chi_squared_distribution<double> dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace

TEST(Fifo, EvictsOldestFirst) {
  store::Fifo f(3);
  std::vector<store::TransitionPtr> items;
  for (int i = 0; i < 5; ++i) {
    auto t = std::make_shared<store::Transition>();
    t->step_index = i;
    items.push_back(t);
  }
  EXPECT_EQ(f.push(items[0]) + f.push(items[1]) + f.push(items[2]), 0u);
  EXPECT_EQ(f.push(items[3]), 1u);
  EXPECT_EQ(f.front()->step_index, 1);
  EXPECT_EQ(f.back()->step_index, 3);
  EXPECT_EQ(f.set_capacity(1), 2u);
  EXPECT_EQ(f.front()->step_index, 3);
  EXPECT_EQ(store::Fifo(0).capacity(), 1u);
}

TEST(Route, SingleNodeTakesBoth) {
  TopologyGraph g(OegnConfig{}, 3);
  const NodeId a = g.add_node(v3(0));
  const auto enc = fixtures::identity_encoder(3);
  const auto r = store::route_transition(g, enc, transition(v3(1), v3(2), v3(-4)));
  EXPECT_EQ(r.state_node, a);
  EXPECT_EQ(r.goal_node, a);
  EXPECT_EQ(g.node(a).buffers.states.size(), 1u);
  EXPECT_EQ(g.node(a).buffers.goals.size(), 1u);
}

TEST(Route, SplitsByReachedStateAndGoal) {
  TopologyGraph g(OegnConfig{}, 3);
  const NodeId a = g.add_node(v3(0));
  const NodeId b = g.add_node(v3(5));
  const auto enc = fixtures::identity_encoder(3);
  const auto r = store::route_transition(g, enc, transition(v3(4), v3(0.5), v3(4.8)));
  EXPECT_EQ(r.state_node, a);
  EXPECT_EQ(r.goal_node, b);
  EXPECT_EQ(g.cluster_count(a), 1u);
  EXPECT_EQ(g.node(b).buffers.goals.size(), 1u);
  EXPECT_EQ(g.node(a).buffers.goals.size(), 0u);
}

TEST(Route, GoalFreeTransitionOnlyEntersStateBuffer) {
  TopologyGraph g(OegnConfig{}, 3);
  const NodeId a = g.add_node(v3(0));
  const auto r = store::route_transition(g, fixtures::identity_encoder(3), transition(v3(0), v3(0)));
  EXPECT_EQ(r.goal_node, kNoNode);
  EXPECT_EQ(g.node(a).buffers.goals.size(), 0u);
}

TEST(Route, AgreesWithBruteForceAndKeepsPartition) {
  Rng rng(3);
  TopologyGraph g(OegnConfig{}, 3);
  for (int i = 0; i < 20; ++i) g.add_node(oracles::random_matrix(rng, 3, 1).col(0));
  Rng enc_rng(4);
  repr::EncoderArchitecture arch;
  arch.input_dim = 2;
  arch.hidden = {16};
  const auto enc = repr::make_encoder(arch, enc_rng);
  for (int i = 0; i < 1000; ++i) {
    const Vec s2 = oracles::random_matrix(rng, 2, 1).col(0);
    const Vec goal = oracles::random_matrix(rng, 2, 1).col(0);
    const auto r = store::route_transition(g, enc, transition(s2, s2, goal));
    EXPECT_EQ(r.state_node, oracles::brute_force_nearest(g, repr::embed_target(enc, s2)));
    EXPECT_EQ(r.goal_node, oracles::brute_force_nearest(g, repr::embed_target(enc, goal)));
  }
  for (const auto& node : g.nodes()) {
    for (const auto& t : node.buffers.states) EXPECT_EQ(oracles::brute_force_nearest(g, repr::embed_target(enc, t->next_state)), node.id);
  }
}

TEST(Skewed, SpecValues) {
  const auto g = graph_with_counts({10, 40, 50});
  const auto p0 = store::skewed_cluster_distribution(g, 0.0);
  for (double p : p0) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
  const auto p1 = store::skewed_cluster_distribution(g, 1.0);
  EXPECT_NEAR(p1[0], 0.1, 1e-12);
  EXPECT_NEAR(p1[1], 0.4, 1e-12);
  EXPECT_NEAR(p1[2], 0.5, 1e-12);
  const auto ph = store::skewed_cluster_distribution(g, 0.5);
  EXPECT_NEAR(ph[0], 0.1910, 1e-3);
  EXPECT_NEAR(ph[1], 0.3821, 1e-3);
  EXPECT_NEAR(ph[2], 0.4270, 1e-3);
}

TEST(Skewed, MatchesOracleAndExcludesEmptyClusters) {
  const std::vector<int> counts{0, 3, 17, 0, 250};
  const auto g = graph_with_counts(counts);
  for (double e : {-1.0, -0.5, 0.0, 0.1, 0.5, 1.0}) {
    const auto p = store::skewed_cluster_distribution(g, e);
    const auto ref = oracles::reference_skewed(std::vector<long>(counts.begin(), counts.end()), e);
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_NEAR(p[i], ref[i], 1e-12);
      total += p[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_EQ(p[0], 0.0);
    EXPECT_EQ(p[3], 0.0);
  }
  EXPECT_THROW(store::skewed_cluster_distribution(graph_with_counts({0, 0}), 1.0), InvalidState);
}

TEST(LearningBatch, ClusterFrequenciesFollowSkewedDistribution) {
  for (double e : {0.0, 0.1, 0.5, 1.0}) {
    const auto g = graph_with_counts({10, 40, 50, 5});
    store::LearningMixConfig mix;
    mix.skew_exponent = e;
    Rng rng(static_cast<std::uint64_t>(100 * e) + 1);
    std::map<NodeId, long> hits;
    for (int rep = 0; rep < 1000; ++rep) {
      for (const auto& s : store::sample_learning_batch(g, 100, mix, nullptr, rng)) ++hits[s.node];
    }
    std::vector<long> observed;
    for (const auto& n : g.nodes()) observed.push_back(hits[n.id]);
    EXPECT_GT(chi_square_p(observed, store::skewed_cluster_distribution(g, e)), 0.01) << "exponent " << e;
  }
}

TEST(LearningBatch, SingleClusterSplitsBetweenBuffers) {
  const auto g = graph_with_counts({200});
  Rng rng(5);
  long goal_draws = 0;
  const int n = 10000;
  for (int rep = 0; rep < 100; ++rep) {
    for (const auto& s : store::sample_learning_batch(g, 100, {}, nullptr, rng)) {
      EXPECT_EQ(s.node, g.nodes()[0].id);
      goal_draws += s.source == store::BufferKind::kGoal ? 1 : 0;
    }
  }
  boost::math::binomial_distribution<double> b(n, 0.5);
  EXPECT_GE(goal_draws, boost::math::quantile(b, 0.005));
  EXPECT_LE(goal_draws, boost::math::quantile(boost::math::complement(b, 0.005)));
}

TEST(LearningBatch, HighLevelPointMass) {
  const auto g = graph_with_counts({10, 40, 50});
  store::LearningMixConfig mix;
  mix.high_ratio = 1.0;
  const std::vector<double> point{0.0, 1.0, 0.0};
  Rng rng(6);
  for (const auto& s : store::sample_learning_batch(g, 64, mix, &point, rng)) EXPECT_EQ(s.node, g.nodes()[1].id);
  EXPECT_THROW(store::sample_learning_batch(g, 64, mix, nullptr, rng), InvalidArgument);
}

TEST(LearningBatch, NotReadyWhenTooFewTransitions) {
  const auto g = graph_with_counts({3, 4});
  Rng rng(7);
  EXPECT_THROW(store::sample_learning_batch(g, 8, {}, nullptr, rng), NotReady);
}

TEST(LearningBatch, EmptyBuffersFallBackAfterRedraws) {
  // Only B^S is filled, so half of the picks need a redraw; with one redraw
  // allowed some slots use the deterministic fallback.
  OegnConfig cfg;
  TopologyGraph g(cfg, 3);
  const NodeId a = g.add_node(v3(0));
  fill(g, a, 200, 0);
  store::LearningMixConfig mix;
  mix.max_redraws = 1;
  Rng rng(8);
  store::BatchStats stats;
  const auto batch = store::sample_learning_batch(g, 200, mix, nullptr, rng, &stats);
  EXPECT_EQ(batch.size(), 200u);
  EXPECT_EQ(stats.redraws, stats.fallbacks);
  EXPECT_GT(stats.fallbacks, 0);
  for (const auto& s : batch) EXPECT_EQ(s.source, store::BufferKind::kState);
}

TEST(Relabel, UniformOnOneClusterUsesItsStates) {
  auto g = graph_with_counts({100});
  Rng rng(9);
  auto batch = store::sample_learning_batch(g, 64, {}, nullptr, rng);
  store::RelabelConfig cfg;
  cfg.fraction = 1.0;
  const auto stats = store::relabel(batch, cfg, g, nullptr, rng);
  long state_sourced = 0;
  for (const auto& s : batch) {
    if (s.source == store::BufferKind::kState) {
      ++state_sourced;
      EXPECT_TRUE(s.relabeled);
      EXPECT_EQ(s.goal, g.nodes()[0].w);
    } else {
      EXPECT_FALSE(s.relabeled);
    }
  }
  EXPECT_EQ(stats.relabeled, state_sourced);
}

TEST(Relabel, FractionZeroKeepsGoalsExceptGoalFreeOnes) {
  OegnConfig ocfg;
  TopologyGraph g(ocfg, 3);
  const NodeId a = g.add_node(v3(0));
  fill(g, a, 250, 250);
  g.node(a).buffers.states.push(transition(v3(1), v3(1)));  // goal-free warmup step
  Rng rng(10);
  auto batch = store::sample_learning_batch(g, 200, {}, nullptr, rng);
  store::RelabelConfig cfg;
  cfg.fraction = 0.0;
  store::relabel(batch, cfg, g, nullptr, rng);
  for (const auto& s : batch) {
    EXPECT_GT(s.goal.size(), 0);
    EXPECT_EQ(s.relabeled, !s.transition->has_goal());
  }
}

TEST(Relabel, TopologicalUsesNeighbourOrSource) {
  OegnConfig ocfg;
  TopologyGraph g(ocfg, 3);
  const NodeId a = g.add_node(v3(0));
  const NodeId b = g.add_node(v3(3));
  const NodeId c = g.add_node(v3(-3));
  g.set_edge(a, b, 0);
  for (NodeId id : {a, b, c}) fill(g, id, 40, 40);
  Rng rng(11);
  store::LearningMixConfig mix;
  mix.high_ratio = 1.0;
  const std::vector<double> only_a{1.0, 0.0, 0.0};
  auto batch = store::sample_learning_batch(g, 64, mix, &only_a, rng);
  store::RelabelConfig cfg;
  cfg.strategy = store::RelabelStrategy::kTopological;
  cfg.fraction = 1.0;
  store::relabel(batch, cfg, g, nullptr, rng);
  for (const auto& s : batch) {
    const NodeId n = oracles::brute_force_nearest(g, s.goal);
    EXPECT_TRUE(n == a || n == b);
    EXPECT_TRUE(s.relabeled);  // B^G samples are eligible too
  }
}

TEST(Relabel, TopologicalIsolatedNodeFallsBackToItself) {
  OegnConfig ocfg;
  TopologyGraph g(ocfg, 3);
  const NodeId a = g.add_node(v3(0));
  const NodeId b = g.add_node(v3(3));
  for (NodeId id : {a, b}) fill(g, id, 20, 20);
  Rng rng(12);
  store::LearningMixConfig mix;
  mix.high_ratio = 1.0;
  const std::vector<double> only_a{1.0, 0.0};
  auto batch = store::sample_learning_batch(g, 32, mix, &only_a, rng);
  store::RelabelConfig cfg;
  cfg.strategy = store::RelabelStrategy::kTopological;
  cfg.fraction = 1.0;
  const auto stats = store::relabel(batch, cfg, g, nullptr, rng);
  EXPECT_EQ(stats.isolated_fallbacks, 32);
  for (const auto& s : batch) EXPECT_EQ(s.goal, g.node(a).w);
}

TEST(Relabel, HighLevelPointMassDrawsFromThatCluster) {
  auto g = graph_with_counts({30, 30, 30});
  Rng rng(13);
  auto batch = store::sample_learning_batch(g, 64, {}, nullptr, rng);
  const std::vector<double> point{0.0, 0.0, 1.0};
  store::RelabelConfig cfg;
  cfg.strategy = store::RelabelStrategy::kHighLevel;
  cfg.fraction = 1.0;
  store::relabel(batch, cfg, g, &point, rng);
  for (const auto& s : batch) {
    if (s.relabeled) EXPECT_EQ(s.goal, g.nodes()[2].w);
  }
  EXPECT_THROW(store::relabel(batch, cfg, g, nullptr, rng), InvalidArgument);
}

TEST(Relabel, PreservesTransitionsBitExactly) {
  auto g = graph_with_counts({10, 30, 40});
  Rng rng(14);
  auto batch = store::sample_learning_batch(g, 64, {}, nullptr, rng);
  std::vector<store::Transition> before;
  for (const auto& s : batch) before.push_back(*s.transition);
  for (auto strategy : {store::RelabelStrategy::kUniform, store::RelabelStrategy::kTopological}) {
    store::RelabelConfig cfg;
    cfg.strategy = strategy;
    cfg.fraction = 1.0;
    store::relabel(batch, cfg, g, nullptr, rng);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      EXPECT_EQ(batch[i].transition->state, before[i].state);
      EXPECT_EQ(batch[i].transition->next_state, before[i].next_state);
      EXPECT_EQ(batch[i].transition->action, before[i].action);
      EXPECT_EQ(batch[i].transition->goal_state, before[i].goal_state);
    }
  }
  std::vector<store::LearningSample> empty;
  EXPECT_THROW(store::relabel(empty, {}, g, nullptr, rng), InvalidArgument);
}

TEST(Relabel, StrategyNames) {
  for (auto s : {store::RelabelStrategy::kHighLevel, store::RelabelStrategy::kUniform, store::RelabelStrategy::kTopological}) {
    EXPECT_EQ(store::relabel_strategy_from_string(store::to_string(s)), s);
  }
  EXPECT_THROW(store::relabel_strategy_from_string("future"), ConfigError);
}
