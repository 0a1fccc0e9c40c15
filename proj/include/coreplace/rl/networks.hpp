#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Dense>

#include "coreplace/mesh.hpp"
#include "coreplace/rl/encoder.hpp"

namespace coreplace::rl {

/// Trainable tensors of a two-layer head. Also used for gradients and
/// optimizer moments, which share the same shapes.
struct MlpWeights {
  Eigen::MatrixXd w1;
  Eigen::MatrixXd b1;
  Eigen::MatrixXd w2;
  Eigen::MatrixXd b2;

  std::array<Eigen::MatrixXd*, 4> tensors() { return {&w1, &b1, &w2, &b2}; }
  std::array<const Eigen::MatrixXd*, 4> tensors() const { return {&w1, &b1, &w2, &b2}; }

  MlpWeights zeros_like() const;
  double squared_norm() const;
  bool all_finite() const;
  Eigen::Index parameter_count() const;
};

/// Actor: relu(H w1 + b1) per node, then a dense layer over all nodes'
/// hidden units producing (mu_x, s_x, mu_y, s_y) for each node.
///   w1: embed x hidden     b1: 1 x hidden
///   w2: 4n x (n*hidden)    b2: 4n x 1
/// mean = tanh(mu), stddev = softplus(s) + sigma_min.
struct ActorParams {
  Eigen::MatrixXd encoder;  // frozen 5 x embed
  MlpWeights head;
  double sigma_min = 0.05;
};

/// Critic: relu(H w1 + b1) per node, mean over nodes, then a scalar.
///   w1: embed x hidden  b1: 1 x hidden  w2: hidden x 1  b2: 1 x 1
struct CriticParams {
  MlpWeights head;
};

struct ActorOutput {
  Eigen::MatrixXd mean;    // n x 2 (x, y), in (-1, 1)
  Eigen::MatrixXd stddev;  // n x 2, >= sigma_min
  // Cached for the backward pass.
  Eigen::MatrixXd hidden_pre;  // n x hidden
  Eigen::VectorXd hidden;      // n*hidden, node-major, after relu
  Eigen::VectorXd out_pre;     // 4n
};

struct CriticOutput {
  double value = 0.0;
  Eigen::MatrixXd hidden_pre;  // n x hidden
  Eigen::VectorXd pooled;      // hidden
};

ActorOutput actor_forward(const ActorParams& params, const StateEncoding& state);

/// Gradient of a scalar loss given dL/dmean and dL/dstddev (both n x 2).
MlpWeights actor_backward(const ActorParams& params, const StateEncoding& state,
                          const ActorOutput& out, const Eigen::MatrixXd& d_mean,
                          const Eigen::MatrixXd& d_stddev);

CriticOutput critic_forward(const CriticParams& params, const StateEncoding& state);
MlpWeights critic_backward(const CriticParams& params, const StateEncoding& state,
                           const CriticOutput& out, double d_value);

double softplus(double x);
double sigmoid(double x);
double inverse_softplus(double y);

ActorParams init_actor(Eigen::Index nodes, const Eigen::MatrixXd& encoder, int hidden,
                       double sigma_min, double init_sigma, std::uint64_t seed);

/// Re-centres the mean head on the zigzag cells so the initial policy mode
/// reproduces the zigzag baseline.
void center_actor_on_zigzag(ActorParams& params, const Mesh& mesh);

CriticParams init_critic(int embed_dim, int hidden, std::uint64_t seed);

}  // namespace coreplace::rl
