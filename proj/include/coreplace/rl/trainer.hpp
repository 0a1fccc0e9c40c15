#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coreplace/mesh.hpp"
#include "coreplace/rl/encoder.hpp"
#include "coreplace/rl/networks.hpp"
#include "coreplace/rl/ppo.hpp"

namespace coreplace::rl {

enum class PolicyInit {
  kRandom,  // random mean head
  kZigzag,  // mean head starts on the zigzag cells
};

std::string_view to_string(PolicyInit init);
PolicyInit parse_policy_init(std::string_view text);
std::string_view to_string(EncoderInit init);
EncoderInit parse_encoder_init(std::string_view text);

struct TrainConfig {
  int embed_dim = 32;
  int hidden = 64;
  double sigma_min = 0.05;
  double init_sigma = 0.3;
  std::int64_t batch_size = 256;
  std::int64_t episodes = 200;
  std::uint64_t seed = 0;
  PpoConfig ppo;
  EncoderInit encoder_init = EncoderInit::kRandom;
  PolicyInit policy_init = PolicyInit::kZigzag;
  // Also score the policy mean each episode when tracking the best placement.
  bool score_policy_mean = true;
  // Replace the final best placement by its equal-cost mesh mirror image
  // with the lowest per-core forwarded peak.
  bool symmetry_tiebreak = true;
};

/// Equidistant bin of a clipped action coordinate in [-1, 1].
int discretize(double action, int bins);

struct ActionSample {
  Eigen::MatrixXd raw;       // n x 2 pre-clip draw
  double log_prob = 0.0;     // density of the pre-clip draw
  std::vector<Coord> targets;
  Placement placement;
};

/// Draws one placement from the policy: Gaussian sample, clip to [-1, 1],
/// bin onto the mesh, then resolve collisions in `priority` order.
ActionSample sample_action(const ActorOutput& dist, const Mesh& mesh,
                           std::span<const NodeId> priority, std::mt19937_64& rng);

/// Placement decoded from the policy mean (no sampling).
Placement mean_placement(const ActorOutput& dist, const Mesh& mesh,
                         std::span<const NodeId> priority);

inline constexpr double kRewardClip = 10.0;

/// 10 * (baseline - cost) / baseline, clipped to [-10, 10].
double reward(std::int64_t cost, std::int64_t baseline_cost);
double reward(const TaskGraph& graph, const Placement& placement, std::int64_t baseline_cost);

struct CurvePoint {
  std::int64_t episode = 0;
  double mean_reward = 0.0;
  std::int64_t best_cost = 0;
};

struct TrainResult {
  Placement best_placement;
  std::int64_t best_cost = 0;
  std::int64_t zigzag_cost = 0;
  std::vector<CurvePoint> curve;
  ActorParams actor;
  CriticParams critic;
  std::vector<std::string> warnings;
};

using EpisodeCallback = std::function<void(const CurvePoint&)>;

/// Optimizes the placement of `graph` on `mesh` with PPO and returns the best
/// placement sampled at any point. Deterministic for a given config.seed.
TrainResult train(const TaskGraph& graph, const Mesh& mesh, const TrainConfig& config,
                  const EpisodeCallback& on_episode = {});

}  // namespace coreplace::rl
