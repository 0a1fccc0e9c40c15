#include "coreplace/rl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coreplace/errors.hpp"
#include "coreplace/placement.hpp"

namespace coreplace::rl {

std::string_view to_string(PolicyInit init) {
  return init == PolicyInit::kZigzag ? "zigzag" : "random";
}

PolicyInit parse_policy_init(std::string_view text) {
  if (text == "zigzag") return PolicyInit::kZigzag;
  if (text == "random") return PolicyInit::kRandom;
  throw ValidationError("unknown policy init '" + std::string(text) + "' (expected zigzag|random)");
}

std::string_view to_string(EncoderInit init) {
  return init == EncoderInit::kAutoencoder ? "autoencoder" : "random";
}

EncoderInit parse_encoder_init(std::string_view text) {
  if (text == "random") return EncoderInit::kRandom;
  if (text == "autoencoder") return EncoderInit::kAutoencoder;
  throw ValidationError("unknown encoder init '" + std::string(text) +
                        "' (expected random|autoencoder)");
}

int discretize(double action, int bins) {
  const double a = std::clamp(action, -1.0, 1.0);
  const int bin = static_cast<int>(std::floor((a + 1.0) / 2.0 * bins));
  return std::min(bins - 1, bin);
}

namespace {

std::vector<Coord> bin_targets(const Eigen::MatrixXd& action, const Mesh& mesh) {
  std::vector<Coord> targets(static_cast<std::size_t>(action.rows()));
  for (Eigen::Index i = 0; i < action.rows(); ++i) {
    targets[static_cast<std::size_t>(i)] = {discretize(action(i, 0), mesh.width()),
                                            discretize(action(i, 1), mesh.height())};
  }
  return targets;
}

// splitmix64 finalizer; gives each consumer of the seed its own stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

ActionSample sample_action(const ActorOutput& dist, const Mesh& mesh,
                           std::span<const NodeId> priority, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ActionSample s;
  s.raw.resize(dist.mean.rows(), 2);
  for (Eigen::Index i = 0; i < dist.mean.rows(); ++i) {
    for (int axis = 0; axis < 2; ++axis) {
      s.raw(i, axis) = dist.mean(i, axis) + dist.stddev(i, axis) * normal(rng);
    }
  }
  s.log_prob = gaussian_log_prob(dist.mean, dist.stddev, s.raw);
  s.targets = bin_targets(s.raw, mesh);
  s.placement = resolve_conflicts(s.targets, priority, mesh);
  return s;
}

Placement mean_placement(const ActorOutput& dist, const Mesh& mesh,
                         std::span<const NodeId> priority) {
  return resolve_conflicts(bin_targets(dist.mean, mesh), priority, mesh);
}

double reward(std::int64_t cost, std::int64_t baseline_cost) {
  if (baseline_cost <= 0) throw ValidationError("reward baseline cost must be > 0");
  const double r = 10.0 * static_cast<double>(baseline_cost - cost) /
                   static_cast<double>(baseline_cost);
  return std::clamp(r, -kRewardClip, kRewardClip);
}

double reward(const TaskGraph& graph, const Placement& placement, std::int64_t baseline_cost) {
  return reward(communication_cost(graph, placement), baseline_cost);
}

TrainResult train(const TaskGraph& graph, const Mesh& mesh, const TrainConfig& config,
                  const EpisodeCallback& on_episode) {
  graph.validate();
  if (graph.size() == 0) throw ValidationError("cannot train on an empty graph");
  if (config.batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (config.episodes < 0) throw ValidationError("episode budget must be >= 0");
  const Placement zigzag = place_zigzag(graph, mesh);

  TrainResult result;
  result.zigzag_cost = communication_cost(graph, zigzag);

  const auto n = static_cast<Eigen::Index>(graph.size());
  const Eigen::MatrixXd encoder =
      config.encoder_init == EncoderInit::kAutoencoder
          ? pretrain_encoder_weights(graph, derive_seed(config.seed, 0), config.embed_dim)
          : init_encoder_weights(derive_seed(config.seed, 0), config.embed_dim);
  const StateEncoding state = encode_state(graph, encoder);
  result.actor = init_actor(n, encoder, config.hidden, config.sigma_min, config.init_sigma,
                            derive_seed(config.seed, 1));
  if (config.policy_init == PolicyInit::kZigzag) center_actor_on_zigzag(result.actor, mesh);
  result.critic = init_critic(config.embed_dim, config.hidden, derive_seed(config.seed, 2));

  if (config.episodes == 0 || result.zigzag_cost == 0) {
    result.warnings.push_back(config.episodes == 0
                                  ? "episode budget is 0; returning the zigzag placement"
                                  : "zigzag placement already has zero communication cost");
    result.best_placement = zigzag;
    result.best_cost = result.zigzag_cost;
    return result;
  }

  Optimizer actor_opt(result.actor.head, config.ppo);
  Optimizer critic_opt(result.critic.head, config.ppo);
  const auto priority = traffic_priority(graph);
  std::mt19937_64 rng(derive_seed(config.seed, 3));
  result.best_cost = std::numeric_limits<std::int64_t>::max();

  auto consider = [&](const Placement& p, std::int64_t cost) {
    if (cost < result.best_cost) {
      result.best_cost = cost;
      result.best_placement = p;
    }
  };

  const auto batch = static_cast<std::size_t>(config.batch_size);
  Trajectory traj;
  traj.actions.resize(batch);
  traj.log_prob_old.resize(static_cast<Eigen::Index>(batch));
  traj.reward.resize(static_cast<Eigen::Index>(batch));

  for (std::int64_t episode = 1; episode <= config.episodes; ++episode) {
    const ActorOutput dist = actor_forward(result.actor, state);
    if (config.score_policy_mean) {
      const auto p = mean_placement(dist, mesh, priority);
      consider(p, communication_cost(graph, p));
    }
    for (std::size_t b = 0; b < batch; ++b) {
      auto sample = sample_action(dist, mesh, priority, rng);
      const auto cost = communication_cost(graph, sample.placement);
      const auto idx = static_cast<Eigen::Index>(b);
      traj.actions[b] = std::move(sample.raw);
      traj.log_prob_old(idx) = sample.log_prob;
      traj.reward(idx) = reward(cost, result.zigzag_cost);
      consider(sample.placement, cost);
    }
    const double value = critic_forward(result.critic, state).value;
    traj.advantage = traj.reward.array() - value;
    traj.value_target = traj.reward;
    ppo_update(result.actor, result.critic, actor_opt, critic_opt, state, traj, config.ppo);

    CurvePoint point{episode, traj.reward.mean(), result.best_cost};
    result.curve.push_back(point);
    if (on_episode) on_episode(point);
  }
  if (config.symmetry_tiebreak) {
    result.best_placement = coolest_symmetry(graph, result.best_placement, mesh);
  }
  return result;
}

}  // namespace coreplace::rl
