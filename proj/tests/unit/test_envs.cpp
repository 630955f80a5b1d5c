#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "distop/envs/point_maze.hpp"
#include "distop/envs/random_walk.hpp"
#include "distop/harness/metrics.hpp"
#include "distop/oracles/oracles.hpp"

using namespace distop;
using envs::Cell;
using envs::GridWorld;
using envs::GridWorldConfig;

namespace {

Vec action(int a) { return Vec::Constant(1, static_cast<double>(a)); }

Vec maze_action(double forward, double turn) {
  Vec a(2);
  a << forward, turn;
  return a;
}

GridWorld world(const std::string& layout, GridWorldConfig cfg = {}) { return GridWorld(envs::parse_grid_map(layout), cfg); }

}  // namespace

TEST(GridMap, ParsesWallsAndMarkers) {
  const auto m = envs::parse_grid_map("####\n#S.#\n#.G#\n####\n");
  EXPECT_EQ(m.width, 4);
  EXPECT_EQ(m.height, 4);
  EXPECT_TRUE(m.wall(0, 0));
  EXPECT_FALSE(m.wall(1, 2));
  EXPECT_TRUE(m.wall(-1, 2));
  EXPECT_TRUE(m.wall(1, 4));
  EXPECT_EQ(*m.start, (Cell{1, 1}));
  EXPECT_EQ(*m.goal, (Cell{2, 2}));
  EXPECT_EQ(m.free_cells().size(), 4u);
  EXPECT_EQ(m.cell(m.index({2, 1})), (Cell{2, 1}));
}

TEST(GridMap, RejectsMalformedLayouts) {
  EXPECT_THROW(envs::parse_grid_map(""), ConfigError);
  EXPECT_THROW(envs::parse_grid_map("###\n##\n"), ConfigError);
  EXPECT_THROW(envs::parse_grid_map("#x#\n"), ConfigError);
  EXPECT_THROW(envs::parse_grid_map("###\n###\n"), ConfigError);
  EXPECT_THROW(envs::load_grid_map("/nonexistent/map.txt"), ConfigError);
}

TEST(Layouts, SizesAndConnectivity) {
  const auto four = world(envs::layouts::four_rooms(7));
  EXPECT_EQ(four.free_cells().size(), 200u);
  EXPECT_EQ(world(envs::layouts::open_room(6)).free_cells().size(), 36u);
  const auto rep = world(envs::layouts::representation_maze());
  EXPECT_EQ(rep.observation_dim(), 900);
  for (const auto* env : {&four, &rep}) {
    const auto dist = env->bfs_from(env->free_cells().front());
    for (const Cell& c : env->free_cells()) EXPECT_GE(dist[static_cast<std::size_t>(env->map().index(c))], 0);
  }
  const auto u = envs::parse_grid_map(envs::layouts::u_maze());
  EXPECT_TRUE(u.start && u.goal);
}

TEST(GridWorld, BfsAgreesWithFloydWarshall) {
  for (const auto& layout : {envs::layouts::four_rooms(4), envs::layouts::u_maze(), envs::layouts::open_room(5)}) {
    const auto env = world(layout);
    EXPECT_EQ(env.all_pairs_distances(), oracles::floyd_warshall(env));
  }
}

TEST(GridWorld, MovesAndBumpsIntoWalls) {
  GridWorldConfig cfg;
  cfg.reset = envs::ResetMode::kFixedStart;
  auto env = world(envs::layouts::open_room(3), cfg);
  Rng rng(1);
  env.reset(rng);
  EXPECT_EQ(env.agent(), (Cell{1, 1}));
  env.step(action(0));
  EXPECT_EQ(env.agent(), (Cell{1, 1}));
  env.step(action(1));
  EXPECT_EQ(env.agent(), (Cell{2, 1}));
  env.step(action(3));
  EXPECT_EQ(env.agent(), (Cell{2, 2}));
  env.step(action(2));
  EXPECT_EQ(env.agent(), (Cell{2, 1}));
  for (int a = 0; a < 4; ++a) EXPECT_EQ(env.next_cell(env.next_cell({2, 2}, a), GridWorld::opposite(a)), (Cell{2, 2}));
}

TEST(GridWorld, ClipsInvalidActions) {
  auto env = world(envs::layouts::open_room(3));
  Rng rng(2);
  env.reset(rng);
  env.step(action(7));
  env.step(Vec::Constant(1, 0.5));
  env.step(Vec::Constant(1, std::nan("")));
  EXPECT_EQ(env.clipped_actions(), 2);
  EXPECT_THROW(env.step(Vec::Zero(2)), InvalidArgument);
}

TEST(GridWorld, HorizonAndSparseReward) {
  GridWorldConfig cfg;
  cfg.reset = envs::ResetMode::kFixedStart;
  cfg.reward = envs::GridReward::kSparseGoal;
  cfg.horizon = 3;
  auto env = world("####\n#SG#\n####\n", cfg);
  Rng rng(3);
  env.reset(rng);
  auto r = env.step(action(2));
  EXPECT_EQ(r.reward, -1.0);
  EXPECT_FALSE(r.done);
  r = env.step(action(3));
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_FALSE(r.terminal);
  r = env.step(action(3));
  EXPECT_TRUE(r.done);
  EXPECT_EQ(env.t(), 3);
  cfg.horizon = 0;
  EXPECT_THROW(world("####\n#SG#\n####\n", cfg), ConfigError);
  cfg.horizon = 5;
  EXPECT_THROW(world("####\n#..#\n####\n", cfg), ConfigError);
}

TEST(GridWorld, Observations) {
  auto env = world(envs::layouts::open_room(4));
  for (const Cell& c : env.free_cells()) {
    const Vec o = env.observation_of(c);
    EXPECT_EQ(o.sum(), 1.0);
    EXPECT_EQ(env.cell_of_observation(o), c);
  }
  GridWorldConfig cfg;
  cfg.observation = envs::ObservationMode::kXY;
  auto xy = world(envs::layouts::open_room(4), cfg);
  EXPECT_EQ(xy.observation_dim(), 2);
  EXPECT_EQ(xy.observation_of({0, 0}), Eigen::Vector2d(-1, -1));
  EXPECT_EQ(xy.observation_of({5, 5}), Eigen::Vector2d(1, 1));
  EXPECT_EQ(xy.observation_of({5, 0}), Eigen::Vector2d(-1, 1));
  EXPECT_THROW(xy.cell_of_observation(xy.observation()), InvalidArgument);
  EXPECT_EQ(envs::observation_mode_from_string("xy_coords"), envs::ObservationMode::kXY);
  EXPECT_THROW(envs::observation_mode_from_string("pixels"), ConfigError);
  EXPECT_THROW(envs::reset_mode_from_string("corner"), ConfigError);
}

TEST(GridWorld, UniformResetCoversFreeCells) {
  auto env = world(envs::layouts::four_rooms(3));
  Rng rng(4);
  std::vector<int> hits(env.free_cells().size(), 0);
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    env.reset(rng);
    ++hits[static_cast<std::size_t>(env.free_index(env.agent()))];
  }
  const double expected = static_cast<double>(n) / static_cast<double>(hits.size());
  for (int h : hits) EXPECT_NEAR(h, expected, 5.0 * std::sqrt(expected));
}

TEST(RandomWalk, MatchesStationaryDistribution) {
  auto env = world(envs::layouts::four_rooms(3));
  const auto hist = envs::random_walk_rollout(env, 4000, 5);
  Vec empirical = Vec::Zero(static_cast<Eigen::Index>(env.free_cells().size()));
  long total = 0;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    if (hist[i] == 0) continue;
    const int f = env.free_index(env.map().cell(static_cast<int>(i)));
    ASSERT_GE(f, 0) << "visit recorded on a wall";
    empirical[f] = static_cast<double>(hist[i]);
    total += hist[i];
  }
  EXPECT_EQ(total, 4000L * 50);
  const Vec pi = oracles::stationary_distribution(oracles::random_walk_matrix(env));
  EXPECT_LT(oracles::total_variation(empirical / static_cast<double>(total), pi), 0.03);
  // Symmetric moves make the uniform distribution stationary.
  EXPECT_LT((pi.array() - 1.0 / static_cast<double>(pi.size())).abs().maxCoeff(), 1e-9);
}

TEST(RandomWalk, SeedDeterminesHistogram) {
  auto a = world(envs::layouts::four_rooms(3));
  auto b = world(envs::layouts::four_rooms(3));
  EXPECT_EQ(envs::random_walk_rollout(a, 50, 9), envs::random_walk_rollout(b, 50, 9));
  EXPECT_NE(envs::random_walk_rollout(a, 50, 9), envs::random_walk_rollout(b, 50, 10));
  EXPECT_THROW(envs::random_walk_rollout(a, -1, 0), InvalidArgument);
}

TEST(RandomWalk, FixedStartEntropyBelowUniformBound) {
  GridWorldConfig cfg;
  cfg.reset = envs::ResetMode::kFixedStart;
  auto env = world(envs::layouts::four_rooms(7), cfg);
  const double h = harness::visitation_entropy(envs::random_walk_rollout(env, 300, 1));
  EXPECT_GT(h, 2.0);
  EXPECT_LT(h, std::log(200.0));
}

TEST(PointMaze, StartsAtStartCentre) {
  envs::PointMazeConfig cfg;
  envs::PointMaze maze(envs::parse_grid_map(envs::layouts::u_maze()), cfg);
  EXPECT_DOUBLE_EQ(maze.x(), 1.5);
  EXPECT_DOUBLE_EQ(maze.y(), 1.5);
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    maze.reset(rng);
    EXPECT_LE(std::abs(maze.x() - 1.5), cfg.start_jitter);
    EXPECT_LE(std::abs(maze.y() - 1.5), cfg.start_jitter);
    EXPECT_LE(std::abs(maze.heading()), std::numbers::pi);
    EXPECT_EQ(maze.t(), 0);
  }
  EXPECT_DOUBLE_EQ(maze.goal_x(), 1.5);
  EXPECT_DOUBLE_EQ(maze.goal_y(), 5.5);
}

TEST(PointMaze, KinematicsAndObservation) {
  envs::PointMaze maze(envs::parse_grid_map(envs::layouts::u_maze()), {});
  maze.set_pose(2.0, 1.5, 0.0);
  maze.step(maze_action(1.0, 0.0));
  EXPECT_NEAR(maze.x(), 2.2, 1e-12);
  EXPECT_NEAR(maze.y(), 1.5, 1e-12);
  maze.step(maze_action(0.5, 0.25));
  EXPECT_NEAR(maze.heading(), 0.25, 1e-12);
  EXPECT_NEAR(maze.x(), 2.2 + 0.1 * std::cos(0.25), 1e-12);
  EXPECT_NEAR(maze.y(), 1.5 + 0.1 * std::sin(0.25), 1e-12);
  const Vec o = maze.observation();
  EXPECT_NEAR(o[0], 2.0 * maze.x() / 8.0 - 1.0, 1e-12);
  EXPECT_NEAR(o[3], std::sin(0.25), 1e-12);
  EXPECT_THROW(maze.set_pose(0.5, 0.5, 0.0), InvalidArgument);
  EXPECT_THROW(maze.step(Vec::Zero(1)), InvalidArgument);
}

TEST(PointMaze, WallsBlockAndAgentSlides) {
  envs::PointMaze maze(envs::parse_grid_map(envs::layouts::u_maze()), {});
  // Heading straight up into the top wall: no motion.
  maze.set_pose(3.5, 1.5, -std::numbers::pi / 2);
  for (int i = 0; i < 20; ++i) maze.step(maze_action(1.0, 0.0));
  EXPECT_NEAR(maze.y(), 1.1, 1e-9);
  // Diagonal into the wall slides along x.
  maze.set_pose(3.5, 1.15, -std::numbers::pi / 4);
  const double y = maze.y();
  maze.step(maze_action(1.0, 0.0));
  EXPECT_GT(maze.x(), 3.5);
  EXPECT_EQ(maze.y(), y);
  // A long random drive never enters a wall.
  Rng rng(7);
  maze.set_pose(1.5, 1.5, 0.0);
  for (int i = 0; i < 5000; ++i) {
    maze.step(maze.random_action(rng));
    ASSERT_TRUE(maze.free(maze.x(), maze.y()));
  }
}

TEST(PointMaze, ClippingRewardAndHorizon) {
  envs::PointMazeConfig cfg;
  cfg.horizon = 2;
  envs::PointMaze maze(envs::parse_grid_map(envs::layouts::u_maze()), cfg);
  maze.set_pose(2.5, 5.5, 0.0);
  auto r = maze.step(maze_action(5.0, -3.0));
  EXPECT_EQ(maze.clipped_actions(), 1);
  EXPECT_NEAR(maze.heading(), -cfg.max_rotation, 1e-12);
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_FALSE(r.done);
  maze.set_pose(6.5, 1.5, 0.0);
  r = maze.step(maze_action(0.0, 0.0));
  EXPECT_EQ(r.reward, -1.0);
  r = maze.step(maze_action(std::nan(""), 0.0));
  EXPECT_TRUE(r.done);
  EXPECT_EQ(maze.clipped_actions(), 2);
  EXPECT_EQ(maze.goal_observation().head(2), Eigen::Vector2d(2.0 * 1.5 / 8 - 1, 2.0 * 5.5 / 8 - 1));
}

TEST(PointMaze, ConfigValidation) {
  const auto map = envs::parse_grid_map(envs::layouts::u_maze());
  envs::PointMazeConfig cfg;
  cfg.radius = 0.5;
  EXPECT_THROW(envs::PointMaze(map, cfg), ConfigError);
  cfg = {};
  cfg.speed = 0.0;
  EXPECT_THROW(envs::PointMaze(map, cfg), ConfigError);
  EXPECT_THROW(envs::PointMaze(envs::parse_grid_map(envs::layouts::open_room(3)), {}), ConfigError);
}
