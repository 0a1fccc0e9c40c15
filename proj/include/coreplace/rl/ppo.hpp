#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "coreplace/rl/networks.hpp"

namespace coreplace::rl {

enum class OptimizerKind { kSgd, kAdam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view text);

struct PpoConfig {
  double clip_epsilon = 0.1;   // surrogate ratio clip
  int epochs = 10;             // passes over each batch
  double learning_rate = 0.005;
  double max_grad_norm = 0.5;  // global L2 clip per network
  OptimizerKind optimizer = OptimizerKind::kSgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

/// Gradient step with global-norm clipping. Adam keeps its moments here.
class Optimizer {
 public:
  Optimizer(const MlpWeights& like, const PpoConfig& config);

  /// Returns the pre-clip gradient norm.
  double step(MlpWeights& params, MlpWeights grad);

 private:
  PpoConfig config_;
  MlpWeights m_;
  MlpWeights v_;
  std::int64_t t_ = 0;
};

/// One batch of single-step episodes. All samples share the same state.
struct Trajectory {
  std::vector<Eigen::MatrixXd> actions;  // n x 2 pre-clip samples
  Eigen::VectorXd log_prob_old;
  Eigen::VectorXd reward;      // clipped
  Eigen::VectorXd advantage;   // reward - V(s)
  Eigen::VectorXd value_target;

  std::size_t size() const { return actions.size(); }
};

/// Diagonal Gaussian log-density, summed over nodes and both axes.
double gaussian_log_prob(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& stddev,
                         const Eigen::MatrixXd& action);

struct SurrogateTerms {
  Eigen::VectorXd ratio;
  Eigen::VectorXd unclipped;  // ratio * A
  Eigen::VectorXd clipped;    // clip(ratio, 1-eps, 1+eps) * A
};

SurrogateTerms surrogate_terms(const ActorOutput& out, const Trajectory& batch, double epsilon);

/// -mean(min(unclipped, clipped)).
double actor_loss(const ActorParams& params, const StateEncoding& state, const Trajectory& batch,
                  double epsilon);
MlpWeights actor_loss_gradient(const ActorParams& params, const StateEncoding& state,
                               const Trajectory& batch, double epsilon);

/// mean((V - target)^2).
double critic_loss(const CriticParams& params, const StateEncoding& state,
                   const Trajectory& batch);
MlpWeights critic_loss_gradient(const CriticParams& params, const StateEncoding& state,
                                const Trajectory& batch);

struct PpoStats {
  double actor_loss_first = 0.0;
  double actor_loss_last = 0.0;
  double critic_loss_first = 0.0;
  double critic_loss_last = 0.0;
  double clip_fraction_last = 0.0;
  double actor_grad_norm_max = 0.0;
};

/// `config.epochs` full-batch passes. The encoder is never touched.
/// Throws NumericalError when a loss or gradient is not finite.
PpoStats ppo_update(ActorParams& actor, CriticParams& critic, Optimizer& actor_opt,
                    Optimizer& critic_opt, const StateEncoding& state, const Trajectory& batch,
                    const PpoConfig& config);

}  // namespace coreplace::rl
