#pragma once

#include <cmath>
#include <numbers>

#include "distop/policy/agent_common.hpp"

namespace distop::policy {

/// Goal-conditioned soft actor-critic with a tanh-squashed Gaussian actor and
/// twin critics. Policy input is [state; goal].
class ContinuousSac {
 public:
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

  ContinuousSac() = default;
  ContinuousSac(int state_dim, int goal_dim, Vec action_low, Vec action_high, SacConfig cfg, Rng& rng)
      : cfg_(std::move(cfg)), state_dim_(state_dim), goal_dim_(goal_dim), low_(std::move(action_low)), high_(std::move(action_high)) {
    cfg_.validate();
    if (low_.size() != high_.size() || low_.size() == 0) throw ConfigError("action bounds must be non-empty and match");
    if ((high_.array() <= low_.array()).any()) throw ConfigError("action bounds must satisfy low < high");
    scale_ = 0.5 * (high_ - low_);
    offset_ = 0.5 * (high_ + low_);
    const int in = state_dim + goal_dim;
    const int a = action_dim();
    actor_ = nn::Mlp(sizes(in, 2 * a), cfg_.activation, rng);
    critic1_ = nn::Mlp(sizes(in + a, 1), cfg_.activation, rng);
    critic2_ = nn::Mlp(sizes(in + a, 1), cfg_.activation, rng);
    target1_ = critic1_;
    target2_ = critic2_;
    const nn::AdamConfig adam{cfg_.learning_rate};
    actor_opt_ = nn::Adam(actor_, adam);
    critic1_opt_ = nn::Adam(critic1_, adam);
    critic2_opt_ = nn::Adam(critic2_, adam);
  }

  int action_dim() const { return static_cast<int>(low_.size()); }
  int state_dim() const { return state_dim_; }
  int goal_dim() const { return goal_dim_; }
  const SacConfig& config() const { return cfg_; }
  const Vec& action_low() const { return low_; }
  const Vec& action_high() const { return high_; }

  nn::Mlp& actor() { return actor_; }
  const nn::Mlp& actor() const { return actor_; }
  nn::Mlp& critic(int i) { return i == 0 ? critic1_ : critic2_; }
  const nn::Mlp& critic(int i) const { return i == 0 ? critic1_ : critic2_; }
  nn::Mlp& target_critic(int i) { return i == 0 ? target1_ : target2_; }
  const nn::Mlp& target_critic(int i) const { return i == 0 ? target1_ : target2_; }

  Vec act(const Vec& state, const Vec& goal, bool greedy, Rng& rng) const {
    const Vec x = concat(state, goal);
    if (x.size() != state_dim_ + goal_dim_) throw InvalidArgument("act: input dimension mismatch");
    const Vec out = actor_.forward_one(x);
    const int a = action_dim();
    Vec u = out.head(a);
    if (!greedy) u.array() += log_std(out.tail(a)).array().exp() * standard_normal(rng, a).array();
    return squash(u);
  }

  /// Policy sample for a batch: actions, log-probabilities and the quantities
  /// the actor gradient needs.
  struct PolicySample {
    Mat out;  // raw actor output
    Mat eps;
    Mat u;
    Mat actions;
    Vec log_prob;
  };

  PolicySample sample(const nn::Mlp& actor, const Mat& inputs, Rng& rng) const {
    PolicySample s;
    s.out = actor.forward(inputs);
    fill_sample(s, rng);
    return s;
  }

  /// y = r + gamma (1 - terminal) (min target Q(s', a') - alpha log pi(a'|s'))
  Vec critic_targets(const AgentBatch& batch, Rng& rng) const {
    const Mat next_in = batch.next_inputs();
    const PolicySample next = sample(actor_, next_in, rng);
    const Mat qin = AgentBatch::stack(next_in, next.actions);
    const Vec q1 = target1_.forward(qin).row(0).transpose();
    const Vec q2 = target2_.forward(qin).row(0).transpose();
    const Vec soft = q1.cwiseMin(q2) - cfg_.entropy_scale * next.log_prob;
    return batch.rewards.array() + cfg_.gamma * (1.0 - batch.terminal.array()) * soft.array();
  }

  /// 0.5 * mean (Q_i(s, a) - y)^2, with parameter gradients when requested.
  double critic_loss(int which, const AgentBatch& batch, const Vec& y, nn::MlpGradients* grads) const {
    const nn::Mlp& net = critic(which);
    const Mat qin = AgentBatch::stack(batch.inputs(), batch.actions);
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    if (!grads) {
      const Vec q = net.forward(qin).row(0).transpose();
      return 0.5 * (q - y).squaredNorm() * inv_b;
    }
    nn::Mlp::Tape tape;
    const Vec q = net.forward(qin, tape).row(0).transpose();
    const Vec diff = q - y;
    net.backward(tape, (diff * inv_b).transpose(), *grads, false);
    return 0.5 * diff.squaredNorm() * inv_b;
  }

  /// mean [alpha log pi(a|s) - min Q(s, a)] with reparameterised a(eps).
  double actor_loss(const AgentBatch& batch, const Mat& eps, nn::MlpGradients* grads) const {
    const Mat in = batch.inputs();
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const int a = action_dim();
    PolicySample s;
    nn::Mlp::Tape actor_tape;
    s.out = grads ? actor_.forward(in, actor_tape) : actor_.forward(in);
    s.eps = eps;
    complete_sample(s);

    const Mat qin = AgentBatch::stack(in, s.actions);
    nn::Mlp::Tape t1, t2;
    const Vec q1 = critic1_.forward(qin, t1).row(0).transpose();
    const Vec q2 = critic2_.forward(qin, t2).row(0).transpose();
    const Vec qmin = q1.cwiseMin(q2);
    const double loss = (cfg_.entropy_scale * s.log_prob - qmin).mean();
    if (!grads) return loss;

    // d(-min Q)/da through whichever critic is smaller per sample.
    Mat g1 = Mat::Zero(1, batch.size());
    Mat g2 = Mat::Zero(1, batch.size());
    for (Eigen::Index b = 0; b < batch.size(); ++b) {
      if (q1[b] <= q2[b]) g1(0, b) = -inv_b;
      else g2(0, b) = -inv_b;
    }
    auto scratch1 = critic1_.zero_gradients();
    auto scratch2 = critic2_.zero_gradients();
    const Mat dq = critic1_.backward(t1, g1, scratch1) + critic2_.backward(t2, g2, scratch2);
    const Mat d_action = dq.bottomRows(a);

    const Mat tanh_u = s.u.array().tanh();
    Mat d_u = (cfg_.entropy_scale * inv_b) * 2.0 * tanh_u.array() +
              d_action.array() * (scale_.replicate(1, batch.size()).array()) * (1.0 - tanh_u.array().square());
    const Mat raw = s.out.bottomRows(a);
    const Mat sigma = log_std(raw).array().exp();
    const Mat d_log_std = -cfg_.entropy_scale * inv_b + d_u.array() * sigma.array() * s.eps.array();
    const Mat d_raw = d_log_std.array() * (0.5 * (kLogStdMax - kLogStdMin)) * (1.0 - raw.array().tanh().square());
    Mat d_out(2 * a, batch.size());
    d_out.topRows(a) = d_u;
    d_out.bottomRows(a) = d_raw;
    actor_.backward(actor_tape, d_out, *grads, false);
    return loss;
  }

  AgentLosses update(const AgentBatch& batch, Rng& rng) {
    check_batch(batch);
    AgentLosses out;
    const Vec y = critic_targets(batch, rng);
    for (int i = 0; i < 2; ++i) {
      auto g = critic(i).zero_gradients();
      const double l = critic_loss(i, batch, y, &g);
      require_finite(l, "critic loss");
      (i == 0 ? critic1_opt_ : critic2_opt_).step(critic(i), g);
      (i == 0 ? out.critic1 : out.critic2) = l;
    }
    const Mat eps = random_normal(action_dim(), batch.size(), rng);
    auto ga = actor_.zero_gradients();
    out.actor = actor_loss(batch, eps, &ga);
    require_finite(out.actor, "actor loss");
    actor_opt_.step(actor_, ga);
    out.mean_q = y.mean();
    {
      PolicySample s;
      s.out = actor_.forward(batch.inputs());
      s.eps = eps;
      complete_sample(s);
      out.entropy = -s.log_prob.mean();
    }
    target1_.blend_from(critic1_, cfg_.tau);
    target2_.blend_from(critic2_, cfg_.tau);
    return out;
  }

  nn::Checkpoint to_checkpoint() const {
    nn::Checkpoint c;
    c.networks.emplace("actor", actor_);
    c.networks.emplace("critic1", critic1_);
    c.networks.emplace("critic2", critic2_);
    c.networks.emplace("critic1.target", target1_);
    c.networks.emplace("critic2.target", target2_);
    return c;
  }

  static Mat random_normal(int rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (int r = 0; r < rows; ++r) m(r, c) = n(rng);
    }
    return m;
  }

  Mat log_std(const Mat& raw) const {
    return (kLogStdMin + 0.5 * (kLogStdMax - kLogStdMin) * (raw.array().tanh() + 1.0)).matrix();
  }

 private:
  std::vector<int> sizes(int in, int out) const {
    std::vector<int> s{in};
    s.insert(s.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    s.push_back(out);
    return s;
  }

  Vec squash(const Vec& u) const { return (scale_.array() * u.array().tanh() + offset_.array()).matrix(); }

  void fill_sample(PolicySample& s, Rng& rng) const {
    s.eps = random_normal(action_dim(), s.out.cols(), rng);
    complete_sample(s);
  }

  void complete_sample(PolicySample& s) const {
    const int a = action_dim();
    const Mat mean = s.out.topRows(a);
    const Mat ls = log_std(s.out.bottomRows(a));
    s.u = mean.array() + ls.array().exp() * s.eps.array();
    s.actions = (s.u.array().tanh().colwise() * scale_.array()).colwise() + offset_.array();
    // log N(u; mean, sigma) - log|d a / d u|, with log(1 - tanh^2 u) = 2 (log 2 - u - softplus(-2u)).
    const Eigen::ArrayXXd u = s.u.array();
    const Eigen::ArrayXXd softplus = (-2.0 * u).max(0.0) + (-(2.0 * u).abs()).exp().log1p();
    const Eigen::ArrayXXd log_det = 2.0 * (std::numbers::ln2 - u - softplus);
    const double log_scale = scale_.array().log().sum();
    const Eigen::ArrayXXd per_dim = -0.5 * s.eps.array().square() - ls.array() - 0.5 * std::log(2.0 * std::numbers::pi) - log_det;
    s.log_prob = per_dim.colwise().sum().transpose().matrix().array() - log_scale;
  }

  void check_batch(const AgentBatch& b) const {
    if (b.size() == 0) throw InvalidArgument("agent batch is empty");
    if (b.states.rows() != state_dim_ || b.goals.rows() != goal_dim_ || b.actions.rows() != action_dim()) {
      throw InvalidArgument("agent batch has wrong dimensions");
    }
  }

  SacConfig cfg_;
  int state_dim_ = 0;
  int goal_dim_ = 0;
  Vec low_, high_, scale_, offset_;
  nn::Mlp actor_, critic1_, critic2_, target1_, target2_;
  nn::Adam actor_opt_, critic1_opt_, critic2_opt_;
};

}  // namespace distop::policy
