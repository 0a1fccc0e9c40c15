#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "coreplace/errors.hpp"
#include "coreplace/io.hpp"
#include "coreplace/placement.hpp"
#include "coreplace/rl/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/random_graphs.hpp"

using namespace coreplace;
using namespace coreplace::rl;
using coreplace::testing::make_toy_problem;
using coreplace::testing::max_gradient_error;

namespace {

TaskGraph chain(std::size_t n) {
  std::vector<TaskEdge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(i + 1), 1});
  }
  std::vector<std::int64_t> compute(n, 1);
  return make_graph(Mode::kInference, compute, edges);
}

}  // namespace

TEST(Encoder, SingleNode) {
  std::vector<std::int64_t> c{5};
  const auto g = make_graph(Mode::kInference, c, {});
  const auto w = init_encoder_weights(1, 32);
  const auto s = encode_state(g, w);
  ASSERT_EQ(s.normalized.rows(), 1);
  EXPECT_DOUBLE_EQ(s.normalized(0, 0), 1.0);
  const Eigen::MatrixXd expect = (s.features * w).cwiseMax(0.0);
  EXPECT_TRUE(s.embedding.isApprox(expect) || (s.embedding.norm() == 0 && expect.norm() == 0));
  EXPECT_EQ(s.embedding.cols(), 32);
}

TEST(Encoder, TwoNodesOneEdge) {
  std::vector<std::int64_t> c{1, 1};
  const auto g = make_graph(Mode::kInference, c, {{0, 1, 9}});
  const auto s = encode_state(g, init_encoder_weights(1, 32));
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(s.normalized(i, j), 0.5);
  }
  EXPECT_DOUBLE_EQ(s.adjacency(0, 1), 9.0);
  EXPECT_DOUBLE_EQ(s.adjacency(1, 0), 0.0);
  // multicast, deg_in, deg_out, bytes_in, bytes_out
  EXPECT_EQ(s.features.row(0), (Eigen::RowVectorXd(5) << 0, 0, 1, 0, 1).finished());
  EXPECT_EQ(s.features.row(1), (Eigen::RowVectorXd(5) << 0, 1, 0, 1, 0).finished());
}

TEST(Encoder, SpectralBound) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = coreplace::testing::random_dag(3 + seed % 12, seed, 0.3);
    const auto l = normalized_adjacency(g);
    EXPECT_TRUE(l.isApprox(l.transpose()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(l);
    EXPECT_LE(eig.eigenvalues().maxCoeff(), 1.0 + 1e-12);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1.0 - 1e-12);
    EXPECT_NEAR(eig.eigenvalues().maxCoeff(), 1.0, 1e-9);
    const auto x = node_features(g);
    EXPECT_GE(x.minCoeff(), 0.0);
    EXPECT_LE(x.maxCoeff(), 1.0);
  }
}

TEST(Encoder, AutoencoderDeterministicAndFinite) {
  const auto g = coreplace::testing::random_dag(10, 5);
  const auto a = pretrain_encoder_weights(g, 9, 32);
  EXPECT_EQ(a, pretrain_encoder_weights(g, 9, 32));
  EXPECT_TRUE(a.allFinite());
  EXPECT_NE(a, init_encoder_weights(9, 32));
}

TEST(Actor, ZeroWeightsGiveTanhBias) {
  auto p = make_toy_problem();
  p.actor.head.w1.setZero();
  p.actor.head.w2.setZero();
  for (Eigen::Index i = 0; i < p.actor.head.b2.rows(); ++i) p.actor.head.b2(i, 0) = 0.1 * static_cast<double>(i) - 0.4;
  const auto out = actor_forward(p.actor, p.state);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(out.mean(i, 0), std::tanh(p.actor.head.b2(4 * i, 0)));
    EXPECT_DOUBLE_EQ(out.mean(i, 1), std::tanh(p.actor.head.b2(4 * i + 2, 0)));
    EXPECT_DOUBLE_EQ(out.stddev(i, 0), softplus(p.actor.head.b2(4 * i + 1, 0)) + 0.05);
  }
}

TEST(Actor, BoundedForExtremeInputs) {
  auto p = make_toy_problem();
  p.state.features.setOnes();
  p.state.embedding = (p.state.normalized * p.state.features * p.actor.encoder).cwiseMax(0.0) * 1e6;
  const auto out = actor_forward(p.actor, p.state);
  EXPECT_TRUE(out.mean.allFinite());
  EXPECT_TRUE(out.stddev.allFinite());
  EXPECT_LE(out.mean.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_GE(out.stddev.minCoeff(), 0.05);
}

TEST(Actor, BackpropMatchesFiniteDifferences) {
  auto p = make_toy_problem();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd gm(3, 2), gs(3, 2);
  for (Eigen::Index i = 0; i < 6; ++i) {
    gm.data()[i] = normal(rng);
    gs.data()[i] = normal(rng);
  }
  auto loss = [&] {
    const auto out = actor_forward(p.actor, p.state);
    return (out.mean.array() * gm.array()).sum() + (out.stddev.array() * gs.array()).sum();
  };
  const auto out = actor_forward(p.actor, p.state);
  const auto grad = actor_backward(p.actor, p.state, out, gm, gs);
  EXPECT_LT(max_gradient_error(p.actor.head, grad, loss), 1e-4);
}

TEST(Critic, BackpropMatchesFiniteDifferences) {
  auto p = make_toy_problem();
  auto value = [&] { return critic_forward(p.critic, p.state).value; };
  const auto grad = critic_backward(p.critic, p.state, critic_forward(p.critic, p.state), 1.0);
  EXPECT_LT(max_gradient_error(p.critic.head, grad, value), 1e-4);
  auto loss = [&] { return critic_loss(p.critic, p.state, p.batch); };
  EXPECT_LT(max_gradient_error(p.critic.head, critic_loss_gradient(p.critic, p.state, p.batch), loss),
            1e-4);
}

TEST(Ppo, ClippedLossGradientMatchesFiniteDifferences) {
  auto p = make_toy_problem();
  const auto terms = surrogate_terms(actor_forward(p.actor, p.state), p.batch, 0.1);
  // The toy batch exercises both branches of the clip.
  int clipped = 0;
  for (Eigen::Index i = 0; i < terms.ratio.size(); ++i) {
    clipped += std::abs(terms.ratio(i) - 1.0) > 0.1;
  }
  EXPECT_GT(clipped, 0);
  EXPECT_LT(clipped, terms.ratio.size());
  auto loss = [&] { return actor_loss(p.actor, p.state, p.batch, 0.1); };
  EXPECT_LT(max_gradient_error(p.actor.head, actor_loss_gradient(p.actor, p.state, p.batch, 0.1), loss),
            1e-4);
}

TEST(Ppo, RatioIsOneAtFirstEpoch) {
  auto p = make_toy_problem();
  const auto dist = actor_forward(p.actor, p.state);
  for (std::size_t b = 0; b < p.batch.size(); ++b) {
    p.batch.log_prob_old(static_cast<Eigen::Index>(b)) =
        gaussian_log_prob(dist.mean, dist.stddev, p.batch.actions[b]);
  }
  const auto t = surrogate_terms(dist, p.batch, 0.1);
  for (Eigen::Index i = 0; i < t.ratio.size(); ++i) {
    EXPECT_NEAR(t.ratio(i), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(t.clipped(i), t.unclipped(i));
  }
  EXPECT_NEAR(actor_loss(p.actor, p.state, p.batch, 0.1), -p.batch.advantage.mean(), 1e-12);
}

TEST(Ppo, ZeroAdvantageZeroGradient) {
  auto p = make_toy_problem();
  p.batch.advantage.setZero();
  const auto g = actor_loss_gradient(p.actor, p.state, p.batch, 0.1);
  EXPECT_EQ(g.squared_norm(), 0.0);
}

TEST(Ppo, GaussianLogProb) {
  Eigen::MatrixXd mean(1, 2), sd(1, 2), x(1, 2);
  mean << 0.1, -0.2;
  sd << 0.5, 0.25;
  x << 0.3, 0.0;
  const double pi = 3.14159265358979323846;
  double expect = 0;
  for (int a = 0; a < 2; ++a) {
    const double z = (x(0, a) - mean(0, a)) / sd(0, a);
    expect += -0.5 * z * z - std::log(sd(0, a)) - 0.5 * std::log(2 * pi);
  }
  EXPECT_NEAR(gaussian_log_prob(mean, sd, x), expect, 1e-12);
}

TEST(Ppo, UpdateLeavesEncoderAndRejectsNan) {
  auto p = make_toy_problem();
  const auto encoder = p.actor.encoder;
  PpoConfig config;
  Optimizer ao(p.actor.head, config), co(p.critic.head, config);
  const auto stats = ppo_update(p.actor, p.critic, ao, co, p.state, p.batch, config);
  EXPECT_EQ(p.actor.encoder, encoder);
  EXPECT_TRUE(std::isfinite(stats.actor_loss_last));
  EXPECT_LE(stats.critic_loss_last, stats.critic_loss_first);
  p.batch.reward(0) = std::numeric_limits<double>::quiet_NaN();
  p.batch.value_target = p.batch.reward;
  EXPECT_THROW(ppo_update(p.actor, p.critic, ao, co, p.state, p.batch, config), NumericalError);
}

TEST(Ppo, GradientNormClip) {
  auto p = make_toy_problem();
  PpoConfig config;
  config.max_grad_norm = 1e-3;
  config.learning_rate = 1.0;
  Optimizer opt(p.critic.head, config);
  auto before = p.critic.head;
  auto grad = critic_loss_gradient(p.critic, p.state, p.batch);
  ASSERT_GT(std::sqrt(grad.squared_norm()), 1e-3);
  opt.step(p.critic.head, grad);
  double moved = 0;
  auto now = p.critic.head.tensors();
  auto was = before.tensors();
  for (std::size_t t = 0; t < 4; ++t) moved += (*now[t] - *was[t]).squaredNorm();
  EXPECT_NEAR(std::sqrt(moved), 1e-3, 1e-9);
}

TEST(Action, Discretize) {
  EXPECT_EQ(discretize(-1.0, 4), 0);
  EXPECT_EQ(discretize(1.0, 4), 3);
  EXPECT_EQ(discretize(-0.1, 4), 1);
  EXPECT_EQ(discretize(-5.0, 8), 0);
  EXPECT_EQ(discretize(5.0, 8), 7);
  EXPECT_EQ(discretize(0.0, 1), 0);
}

TEST(Action, ConcentratesAtSigmaMin) {
  auto p = make_toy_problem();
  p.actor.sigma_min = 1e-9;
  for (Eigen::Index i = 0; i < p.actor.head.b2.rows(); i += 2) p.actor.head.b2(i + 1, 0) = -60.0;
  const auto dist = actor_forward(p.actor, p.state);
  std::mt19937_64 rng(0);
  const auto priority = traffic_priority(p.graph);
  const auto first = sample_action(dist, p.mesh, priority, rng);
  for (int k = 0; k < 20; ++k) {
    const auto s = sample_action(dist, p.mesh, priority, rng);
    EXPECT_EQ(s.targets, first.targets);
    EXPECT_TRUE(std::isfinite(s.log_prob));
  }
  EXPECT_EQ(first.placement, mean_placement(dist, p.mesh, priority));
}

TEST(Reward, Examples) {
  EXPECT_DOUBLE_EQ(reward(100, 100), 0.0);
  EXPECT_DOUBLE_EQ(reward(0, 100), 10.0);
  EXPECT_DOUBLE_EQ(reward(200, 100), -10.0);
  EXPECT_DOUBLE_EQ(reward(500, 100), -10.0);
  EXPECT_DOUBLE_EQ(reward(75, 100), 2.5);
  EXPECT_GT(reward(99, 100), reward(100, 100));
  EXPECT_THROW(reward(1, 0), ValidationError);
}

TEST(Train, CurveBestAndDeterminism) {
  const auto g = coreplace::testing::random_dag(8, 2);
  const Mesh mesh(3, 3);
  TrainConfig c;
  c.episodes = 15;
  c.batch_size = 16;
  c.seed = 4;
  const auto a = train(g, mesh, c);
  ASSERT_EQ(a.curve.size(), 15u);
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    EXPECT_EQ(a.curve[i].episode, static_cast<std::int64_t>(i + 1));
    if (i > 0) EXPECT_LE(a.curve[i].best_cost, a.curve[i - 1].best_cost);
  }
  EXPECT_EQ(a.best_cost, a.curve.back().best_cost);
  EXPECT_EQ(communication_cost(g, a.best_placement), a.best_cost);
  EXPECT_TRUE(a.best_placement.is_injective());
  EXPECT_TRUE(a.best_placement.in_bounds(mesh));
  // Starting on zigzag means zigzag is scored at episode one.
  EXPECT_LE(a.curve.front().best_cost, a.zigzag_cost);
  const auto b = train(g, mesh, c);
  EXPECT_EQ(io::checkpoint_to_json(a, c, mesh).dump(), io::checkpoint_to_json(b, c, mesh).dump());
}

TEST(Train, EncoderFrozenDuringTraining) {
  const auto g = coreplace::testing::random_dag(6, 8);
  TrainConfig c;
  c.episodes = 0;
  c.seed = 12;
  const auto before = train(g, Mesh(2, 3), c).actor.encoder;
  c.episodes = 10;
  c.batch_size = 8;
  const auto after = train(g, Mesh(2, 3), c).actor.encoder;
  EXPECT_EQ(before, after);
}

TEST(Train, ZeroBudgetFallsBackToZigzag) {
  const auto g = coreplace::testing::random_dag(5, 1);
  TrainConfig c;
  c.episodes = 0;
  const auto r = train(g, Mesh(3, 2), c);
  EXPECT_EQ(r.best_placement, place_zigzag(g, Mesh(3, 2)));
  EXPECT_TRUE(r.curve.empty());
  ASSERT_FALSE(r.warnings.empty());
}

TEST(Train, ChainReachesOracle) {
  const auto g = chain(6);
  const Mesh mesh(2, 3);
  const auto optimum = communication_cost(g, place_oracle(g, mesh));
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TrainConfig c;
    c.episodes = 200;
    c.batch_size = 32;
    c.seed = seed;
    hits += train(g, mesh, c).best_cost == optimum;
  }
  EXPECT_GE(hits, 8);
}

TEST(Checkpoint, ParamsRoundTrip) {
  const auto g = coreplace::testing::random_dag(5, 3);
  TrainConfig c;
  c.episodes = 3;
  c.batch_size = 4;
  const auto r = train(g, Mesh(3, 2), c);
  const auto j = io::parse_json(io::dump(io::checkpoint_to_json(r, c, Mesh(3, 2))), "ckpt");
  const auto [actor, critic] = io::checkpoint_params(j);
  EXPECT_EQ(actor.encoder, r.actor.encoder);
  EXPECT_EQ(actor.head.w2, r.actor.head.w2);
  EXPECT_EQ(critic.head.w1, r.critic.head.w1);
  EXPECT_EQ(io::reward_curve_csv(r.curve).substr(0, 29), "episode,mean_reward,best_cost");
}
