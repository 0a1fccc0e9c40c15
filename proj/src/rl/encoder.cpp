#include "coreplace/rl/encoder.hpp"

#include <cmath>
#include <random>

#include "coreplace/errors.hpp"

namespace coreplace::rl {

Eigen::MatrixXd weighted_adjacency(const TaskGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : graph.edges) a(e.src, e.dst) += static_cast<double>(e.bytes);
  return a;
}

Eigen::MatrixXd normalized_adjacency(const TaskGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n);
  for (const auto& e : graph.edges) {
    b(e.src, e.dst) = 1.0;
    b(e.dst, e.src) = 1.0;
  }
  const Eigen::VectorXd inv_sqrt = b.rowwise().sum().array().rsqrt();
  return inv_sqrt.asDiagonal() * b * inv_sqrt.asDiagonal();
}

Eigen::MatrixXd node_features(const TaskGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  Eigen::MatrixXd x(n, kFeatureCount);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& node = graph.nodes[static_cast<std::size_t>(i)];
    x(i, 0) = node.multicast ? 1.0 : 0.0;
    x(i, 1) = static_cast<double>(node.degree_in);
    x(i, 2) = static_cast<double>(node.degree_out);
    x(i, 3) = static_cast<double>(node.bytes_in);
    x(i, 4) = static_cast<double>(node.bytes_out);
  }
  for (int c = 1; c < kFeatureCount; ++c) {
    if (n == 0) break;
    const double lo = x.col(c).minCoeff();
    const double hi = x.col(c).maxCoeff();
    if (hi > lo) {
      x.col(c) = (x.col(c).array() - lo) / (hi - lo);
    } else {
      x.col(c).setZero();
    }
  }
  return x;
}

Eigen::MatrixXd init_encoder_weights(std::uint64_t seed, int embed_dim) {
  std::mt19937_64 rng(seed);
  const double bound = std::sqrt(6.0 / (kFeatureCount + embed_dim));
  std::uniform_real_distribution<double> u(-bound, bound);
  Eigen::MatrixXd w(kFeatureCount, embed_dim);
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = u(rng);
  }
  return w;
}

Eigen::MatrixXd pretrain_encoder_weights(const TaskGraph& graph, std::uint64_t seed,
                                         int embed_dim, int steps, double learning_rate) {
  Eigen::MatrixXd w = init_encoder_weights(seed, embed_dim);
  if (graph.size() == 0) return w;
  const Eigen::MatrixXd x = node_features(graph);
  const Eigen::MatrixXd lx = normalized_adjacency(graph) * x;
  Eigen::MatrixXd decoder = init_encoder_weights(seed ^ 0x9e3779b97f4a7c15ULL, embed_dim).transpose();
  const double scale = 2.0 / static_cast<double>(x.size());
  for (int step = 0; step < steps; ++step) {
    const Eigen::MatrixXd pre = lx * w;
    const Eigen::MatrixXd z = pre.cwiseMax(0.0);
    const Eigen::MatrixXd d_recon = scale * (z * decoder - x);
    const Eigen::MatrixXd d_decoder = z.transpose() * d_recon;
    const Eigen::MatrixXd d_pre =
        ((d_recon * decoder.transpose()).array() * (pre.array() > 0.0).cast<double>()).matrix();
    w -= learning_rate * (lx.transpose() * d_pre);
    decoder -= learning_rate * d_decoder;
  }
  if (!w.allFinite()) throw NumericalError("encoder pre-training diverged");
  return w;
}

StateEncoding encode_state(const TaskGraph& graph, const Eigen::MatrixXd& encoder_weights) {
  if (graph.size() == 0) throw ValidationError("cannot encode an empty graph");
  if (encoder_weights.rows() != kFeatureCount) {
    throw ValidationError("encoder weights must have 5 rows");
  }
  StateEncoding s;
  s.adjacency = weighted_adjacency(graph);
  s.normalized = normalized_adjacency(graph);
  s.features = node_features(graph);
  s.embedding = (s.normalized * s.features * encoder_weights).cwiseMax(0.0);
  return s;
}

}  // namespace coreplace::rl
