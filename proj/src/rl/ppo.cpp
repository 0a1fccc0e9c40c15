#include "coreplace/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "coreplace/errors.hpp"

namespace coreplace::rl {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "sgd") return OptimizerKind::kSgd;
  if (text == "adam") return OptimizerKind::kAdam;
  throw ValidationError("unknown optimizer '" + std::string(text) + "' (expected sgd|adam)");
}

Optimizer::Optimizer(const MlpWeights& like, const PpoConfig& config)
    : config_(config), m_(like.zeros_like()), v_(like.zeros_like()) {}

double Optimizer::step(MlpWeights& params, MlpWeights grad) {
  const double norm = std::sqrt(grad.squared_norm());
  if (!std::isfinite(norm)) throw NumericalError("non-finite gradient norm");
  if (config_.max_grad_norm > 0.0 && norm > config_.max_grad_norm) {
    const double scale = config_.max_grad_norm / norm;
    for (auto* t : grad.tensors()) *t *= scale;
  }
  const double lr = config_.learning_rate;
  auto p = params.tensors();
  auto g = grad.tensors();
  if (config_.optimizer == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < p.size(); ++i) *p[i] -= lr * *g[i];
    return norm;
  }
  ++t_;
  const double b1 = config_.adam_beta1;
  const double b2 = config_.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  auto m = m_.tensors();
  auto v = v_.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    *m[i] = b1 * *m[i] + (1.0 - b1) * *g[i];
    *v[i] = b2 * *v[i] + (1.0 - b2) * g[i]->cwiseAbs2();
    p[i]->array() -= lr * (m[i]->array() / c1) /
                     ((v[i]->array() / c2).sqrt() + config_.adam_epsilon);
  }
  return norm;
}

double gaussian_log_prob(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& stddev,
                         const Eigen::MatrixXd& action) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const auto z = (action - mean).array() / stddev.array();
  return (-0.5 * z.square() - stddev.array().log() - half_log_2pi).sum();
}

SurrogateTerms surrogate_terms(const ActorOutput& out, const Trajectory& batch, double epsilon) {
  const auto b = static_cast<Eigen::Index>(batch.size());
  SurrogateTerms t;
  t.ratio.resize(b);
  t.unclipped.resize(b);
  t.clipped.resize(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const double lp = gaussian_log_prob(out.mean, out.stddev, batch.actions[static_cast<std::size_t>(i)]);
    const double r = std::exp(lp - batch.log_prob_old(i));
    const double a = batch.advantage(i);
    t.ratio(i) = r;
    t.unclipped(i) = r * a;
    t.clipped(i) = std::clamp(r, 1.0 - epsilon, 1.0 + epsilon) * a;
  }
  return t;
}

double actor_loss(const ActorParams& params, const StateEncoding& state, const Trajectory& batch,
                  double epsilon) {
  const auto t = surrogate_terms(actor_forward(params, state), batch, epsilon);
  return -t.unclipped.cwiseMin(t.clipped).mean();
}

namespace {

MlpWeights actor_gradient_from(const ActorParams& params, const StateEncoding& state,
                               const ActorOutput& out, const Trajectory& batch,
                               const SurrogateTerms& t) {
  const auto b = static_cast<double>(batch.size());
  Eigen::MatrixXd d_mean = Eigen::MatrixXd::Zero(out.mean.rows(), 2);
  Eigen::MatrixXd d_std = Eigen::MatrixXd::Zero(out.mean.rows(), 2);
  const Eigen::ArrayXXd inv_var = out.stddev.array().square().inverse();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    // The clipped branch is flat in theta; only the unclipped branch carries
    // gradient, and only when it is the minimum.
    if (t.unclipped(idx) > t.clipped(idx)) continue;
    const double d_logp = -batch.advantage(idx) * t.ratio(idx) / b;
    const Eigen::ArrayXXd diff = (batch.actions[i] - out.mean).array();
    d_mean.array() += d_logp * diff * inv_var;
    d_std.array() += d_logp * (diff.square() * inv_var - 1.0) / out.stddev.array();
  }
  return actor_backward(params, state, out, d_mean, d_std);
}

}  // namespace

MlpWeights actor_loss_gradient(const ActorParams& params, const StateEncoding& state,
                               const Trajectory& batch, double epsilon) {
  const auto out = actor_forward(params, state);
  const auto t = surrogate_terms(out, batch, epsilon);
  return actor_gradient_from(params, state, out, batch, t);
}

double critic_loss(const CriticParams& params, const StateEncoding& state,
                   const Trajectory& batch) {
  const double v = critic_forward(params, state).value;
  return (batch.value_target.array() - v).square().mean();
}

MlpWeights critic_loss_gradient(const CriticParams& params, const StateEncoding& state,
                                const Trajectory& batch) {
  const auto out = critic_forward(params, state);
  const double d_value = 2.0 * (out.value - batch.value_target.array()).mean();
  return critic_backward(params, state, out, d_value);
}

PpoStats ppo_update(ActorParams& actor, CriticParams& critic, Optimizer& actor_opt,
                    Optimizer& critic_opt, const StateEncoding& state, const Trajectory& batch,
                    const PpoConfig& config) {
  if (batch.size() == 0) throw ValidationError("empty trajectory");
  PpoStats stats;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto out = actor_forward(actor, state);
    const auto t = surrogate_terms(out, batch, config.clip_epsilon);
    const double a_loss = -t.unclipped.cwiseMin(t.clipped).mean();
    const auto c_out = critic_forward(critic, state);
    const double c_loss = (batch.value_target.array() - c_out.value).square().mean();
    if (!std::isfinite(a_loss) || !std::isfinite(c_loss)) {
      std::ostringstream msg;
      msg << "non-finite PPO loss at epoch " << epoch << ": actor=" << a_loss
          << " critic=" << c_loss << " max|mean|=" << out.mean.cwiseAbs().maxCoeff()
          << " min stddev=" << out.stddev.minCoeff();
      throw NumericalError(msg.str());
    }
    if (epoch == 0) {
      stats.actor_loss_first = a_loss;
      stats.critic_loss_first = c_loss;
    }
    stats.actor_loss_last = a_loss;
    stats.critic_loss_last = c_loss;
    Eigen::Index clipped = 0;
    for (Eigen::Index i = 0; i < t.ratio.size(); ++i) {
      if (std::abs(t.ratio(i) - 1.0) > config.clip_epsilon) ++clipped;
    }
    stats.clip_fraction_last = static_cast<double>(clipped) / static_cast<double>(t.ratio.size());

    auto a_grad = actor_gradient_from(actor, state, out, batch, t);
    const double d_value = 2.0 * (c_out.value - batch.value_target.array()).mean();
    auto c_grad = critic_backward(critic, state, c_out, d_value);
    stats.actor_grad_norm_max =
        std::max(stats.actor_grad_norm_max, actor_opt.step(actor.head, std::move(a_grad)));
    critic_opt.step(critic.head, std::move(c_grad));
  }
  return stats;
}

}  // namespace coreplace::rl
