#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "coreplace/taskgraph.hpp"

namespace coreplace::rl {

/// multicast, degree_in, degree_out, bytes_in, bytes_out
inline constexpr int kFeatureCount = 5;

/// Graph state fed to the actor and critic. Computed once per graph; the
/// graph does not change while a placement is being optimized.
struct StateEncoding {
  Eigen::MatrixXd adjacency;   // n x n, bytes i -> j
  Eigen::MatrixXd normalized;  // D^-1/2 (B + I) D^-1/2, B = symmetric edge indicator
  Eigen::MatrixXd features;    // n x 5, last four min-max scaled to [0, 1]
  Eigen::MatrixXd embedding;   // n x embed, relu(normalized * features * w_g)

  Eigen::Index nodes() const { return features.rows(); }
};

enum class EncoderInit { kRandom, kAutoencoder };

Eigen::MatrixXd weighted_adjacency(const TaskGraph& graph);
Eigen::MatrixXd normalized_adjacency(const TaskGraph& graph);
Eigen::MatrixXd node_features(const TaskGraph& graph);

/// Glorot-uniform 5 x embed_dim weights from `seed`.
Eigen::MatrixXd init_encoder_weights(std::uint64_t seed, int embed_dim);

/// Fits w_g as the encoder half of a one-layer autoencoder that reconstructs
/// the feature matrix, starting from init_encoder_weights(seed, ...).
Eigen::MatrixXd pretrain_encoder_weights(const TaskGraph& graph, std::uint64_t seed,
                                         int embed_dim, int steps = 400,
                                         double learning_rate = 0.05);

StateEncoding encode_state(const TaskGraph& graph, const Eigen::MatrixXd& encoder_weights);

}  // namespace coreplace::rl
