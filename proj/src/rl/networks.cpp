#include "coreplace/rl/networks.hpp"

#include <cmath>
#include <random>

#include "coreplace/errors.hpp"

namespace coreplace::rl {

MlpWeights MlpWeights::zeros_like() const {
  MlpWeights z;
  z.w1 = Eigen::MatrixXd::Zero(w1.rows(), w1.cols());
  z.b1 = Eigen::MatrixXd::Zero(b1.rows(), b1.cols());
  z.w2 = Eigen::MatrixXd::Zero(w2.rows(), w2.cols());
  z.b2 = Eigen::MatrixXd::Zero(b2.rows(), b2.cols());
  return z;
}

double MlpWeights::squared_norm() const {
  double total = 0.0;
  for (const auto* t : tensors()) total += t->squaredNorm();
  return total;
}

bool MlpWeights::all_finite() const {
  for (const auto* t : tensors()) {
    if (!t->allFinite()) return false;
  }
  return true;
}

Eigen::Index MlpWeights::parameter_count() const {
  Eigen::Index count = 0;
  for (const auto* t : tensors()) count += t->size();
  return count;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double inverse_softplus(double y) {
  if (y <= 0.0) throw ValidationError("inverse_softplus needs y > 0");
  return y > 30.0 ? y : std::log(std::expm1(y));
}

ActorOutput actor_forward(const ActorParams& params, const StateEncoding& state) {
  const auto& h = params.head;
  const Eigen::Index n = state.nodes();
  const Eigen::Index hidden = h.w1.cols();
  if (h.w2.rows() != 4 * n || h.w2.cols() != n * hidden) {
    throw ValidationError("actor head does not match the graph size");
  }
  ActorOutput out;
  out.hidden_pre = state.embedding * h.w1;
  out.hidden_pre.rowwise() += h.b1.row(0);
  out.hidden.resize(n * hidden);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < hidden; ++j) {
      out.hidden(i * hidden + j) = std::max(out.hidden_pre(i, j), 0.0);
    }
  }
  out.out_pre = h.w2 * out.hidden + h.b2.col(0);
  out.mean.resize(n, 2);
  out.stddev.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int axis = 0; axis < 2; ++axis) {
      out.mean(i, axis) = std::tanh(out.out_pre(4 * i + 2 * axis));
      out.stddev(i, axis) = softplus(out.out_pre(4 * i + 2 * axis + 1)) + params.sigma_min;
    }
  }
  return out;
}

MlpWeights actor_backward(const ActorParams& params, const StateEncoding& state,
                          const ActorOutput& out, const Eigen::MatrixXd& d_mean,
                          const Eigen::MatrixXd& d_stddev) {
  const auto& h = params.head;
  const Eigen::Index n = state.nodes();
  const Eigen::Index hidden = h.w1.cols();
  Eigen::VectorXd d_out(4 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int axis = 0; axis < 2; ++axis) {
      const double mu = out.mean(i, axis);
      d_out(4 * i + 2 * axis) = d_mean(i, axis) * (1.0 - mu * mu);
      d_out(4 * i + 2 * axis + 1) = d_stddev(i, axis) * sigmoid(out.out_pre(4 * i + 2 * axis + 1));
    }
  }
  MlpWeights g;
  g.w2 = d_out * out.hidden.transpose();
  g.b2 = d_out;
  const Eigen::VectorXd d_hidden = h.w2.transpose() * d_out;
  Eigen::MatrixXd d_pre(n, hidden);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < hidden; ++j) {
      d_pre(i, j) = out.hidden_pre(i, j) > 0.0 ? d_hidden(i * hidden + j) : 0.0;
    }
  }
  g.w1 = state.embedding.transpose() * d_pre;
  g.b1 = d_pre.colwise().sum();
  return g;
}

CriticOutput critic_forward(const CriticParams& params, const StateEncoding& state) {
  const auto& h = params.head;
  CriticOutput out;
  out.hidden_pre = state.embedding * h.w1;
  out.hidden_pre.rowwise() += h.b1.row(0);
  out.pooled = out.hidden_pre.cwiseMax(0.0).colwise().mean().transpose();
  out.value = out.pooled.dot(h.w2.col(0)) + h.b2(0, 0);
  return out;
}

MlpWeights critic_backward(const CriticParams& params, const StateEncoding& state,
                           const CriticOutput& out, double d_value) {
  const auto& h = params.head;
  const auto n = static_cast<double>(state.nodes());
  MlpWeights g;
  g.w2 = out.pooled * d_value;
  g.b2 = Eigen::MatrixXd::Constant(1, 1, d_value);
  const Eigen::RowVectorXd d_pooled = h.w2.col(0).transpose() * d_value;
  Eigen::MatrixXd d_pre = (out.hidden_pre.array() > 0.0).cast<double>().matrix();
  for (Eigen::Index i = 0; i < d_pre.rows(); ++i) {
    d_pre.row(i) = d_pre.row(i).cwiseProduct(d_pooled) / n;
  }
  g.w1 = state.embedding.transpose() * d_pre;
  g.b1 = d_pre.colwise().sum();
  return g;
}

namespace {

Eigen::MatrixXd glorot(Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out,
                       std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> u(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng);
  }
  return m;
}

}  // namespace

ActorParams init_actor(Eigen::Index nodes, const Eigen::MatrixXd& encoder, int hidden,
                       double sigma_min, double init_sigma, std::uint64_t seed) {
  if (sigma_min <= 0.0) throw ValidationError("sigma_min must be > 0");
  if (init_sigma <= sigma_min) throw ValidationError("init_sigma must exceed sigma_min");
  if (hidden < 1 || nodes < 1) throw ValidationError("actor needs nodes >= 1 and hidden >= 1");
  std::mt19937_64 rng(seed);
  const auto embed = encoder.cols();
  ActorParams p;
  p.encoder = encoder;
  p.sigma_min = sigma_min;
  p.head.w1 = glorot(embed, hidden, static_cast<double>(embed), static_cast<double>(hidden), rng);
  p.head.b1 = Eigen::MatrixXd::Zero(1, hidden);
  p.head.w2 = glorot(4 * nodes, nodes * hidden, static_cast<double>(hidden),
                     static_cast<double>(4 * nodes), rng);
  p.head.b2 = Eigen::MatrixXd::Zero(4 * nodes, 1);
  const double s = inverse_softplus(init_sigma - sigma_min);
  for (Eigen::Index i = 0; i < nodes; ++i) {
    p.head.b2(4 * i + 1, 0) = s;
    p.head.b2(4 * i + 3, 0) = s;
  }
  return p;
}

void center_actor_on_zigzag(ActorParams& params, const Mesh& mesh) {
  const Eigen::Index n = params.head.b2.rows() / 4;
  if (n > mesh.size()) throw ValidationError("mesh too small for the actor");
  params.head.w2 *= 0.01;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Coord c = mesh.coord(static_cast<int>(i));
    const double ax = 2.0 * (c.x + 0.5) / mesh.width() - 1.0;
    const double ay = 2.0 * (c.y + 0.5) / mesh.height() - 1.0;
    params.head.b2(4 * i, 0) = std::atanh(ax);
    params.head.b2(4 * i + 2, 0) = std::atanh(ay);
  }
}

CriticParams init_critic(int embed_dim, int hidden, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CriticParams p;
  p.head.w1 = glorot(embed_dim, hidden, embed_dim, hidden, rng);
  p.head.b1 = Eigen::MatrixXd::Zero(1, hidden);
  p.head.w2 = glorot(hidden, 1, hidden, 1, rng);
  p.head.b2 = Eigen::MatrixXd::Zero(1, 1);
  return p;
}

}  // namespace coreplace::rl
