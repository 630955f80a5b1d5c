#pragma once

#include <cmath>

#include "distop/policy/agent_common.hpp"

namespace distop::policy {

/// Categorical-actor variant of the entropy-regularised actor-critic: critics
/// output one value per action and soft values are expectations under pi.
/// Actions are stored as a single row holding the action index.
class DiscreteSac {
 public:
  DiscreteSac() = default;
  DiscreteSac(int state_dim, int goal_dim, int num_actions, SacConfig cfg, Rng& rng)
      : cfg_(std::move(cfg)), state_dim_(state_dim), goal_dim_(goal_dim), num_actions_(num_actions) {
    cfg_.validate();
    if (num_actions < 2) throw ConfigError("a discrete agent needs at least two actions");
    const int in = state_dim + goal_dim;
    actor_ = nn::Mlp(sizes(in), cfg_.activation, rng);
    critic1_ = nn::Mlp(sizes(in), cfg_.activation, rng);
    critic2_ = nn::Mlp(sizes(in), cfg_.activation, rng);
    target1_ = critic1_;
    target2_ = critic2_;
    const nn::AdamConfig adam{cfg_.learning_rate};
    actor_opt_ = nn::Adam(actor_, adam);
    critic1_opt_ = nn::Adam(critic1_, adam);
    critic2_opt_ = nn::Adam(critic2_, adam);
  }

  int num_actions() const { return num_actions_; }
  int action_dim() const { return 1; }
  int state_dim() const { return state_dim_; }
  int goal_dim() const { return goal_dim_; }
  const SacConfig& config() const { return cfg_; }

  nn::Mlp& actor() { return actor_; }
  const nn::Mlp& actor() const { return actor_; }
  nn::Mlp& critic(int i) { return i == 0 ? critic1_ : critic2_; }
  const nn::Mlp& critic(int i) const { return i == 0 ? critic1_ : critic2_; }
  nn::Mlp& target_critic(int i) { return i == 0 ? target1_ : target2_; }
  const nn::Mlp& target_critic(int i) const { return i == 0 ? target1_ : target2_; }

  static Mat softmax(const Mat& logits) {
    Mat p = (logits.rowwise() - logits.colwise().maxCoeff()).array().exp();
    p.array().rowwise() /= p.colwise().sum().array();
    return p;
  }
  static Mat log_softmax(const Mat& logits) {
    const Eigen::RowVectorXd mx = logits.colwise().maxCoeff();
    Mat shifted = logits.rowwise() - mx;
    const Eigen::RowVectorXd lse = shifted.array().exp().colwise().sum().log();
    return shifted.rowwise() - lse;
  }

  Vec probabilities(const Vec& state, const Vec& goal) const { return softmax(actor_.forward_one(concat(state, goal))).col(0); }

  Vec act(const Vec& state, const Vec& goal, bool greedy, Rng& rng) const {
    const Vec x = concat(state, goal);
    if (x.size() != state_dim_ + goal_dim_) throw InvalidArgument("act: input dimension mismatch");
    const Vec logits = actor_.forward_one(x);
    Eigen::Index pick = 0;
    if (greedy) {
      logits.maxCoeff(&pick);
    } else {
      const Vec p = softmax(logits).col(0);
      pick = static_cast<Eigen::Index>(sample_categorical(rng, std::vector<double>(p.data(), p.data() + p.size())));
    }
    Vec a(1);
    a[0] = static_cast<double>(pick);
    return a;
  }

  /// y = r + gamma (1 - terminal) sum_a' pi(a'|s') [min target Q(s', a') - alpha log pi(a'|s')]
  Vec critic_targets(const AgentBatch& batch, Rng&) const {
    const Mat next_in = batch.next_inputs();
    const Mat logits = actor_.forward(next_in);
    const Mat p = softmax(logits);
    const Mat logp = log_softmax(logits);
    const Mat qmin = target1_.forward(next_in).cwiseMin(target2_.forward(next_in));
    const Vec soft = (p.array() * (qmin.array() - cfg_.entropy_scale * logp.array())).colwise().sum().transpose();
    return batch.rewards.array() + cfg_.gamma * (1.0 - batch.terminal.array()) * soft.array();
  }

  double critic_loss(int which, const AgentBatch& batch, const Vec& y, nn::MlpGradients* grads) const {
    const nn::Mlp& net = critic(which);
    const Mat in = batch.inputs();
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    nn::Mlp::Tape tape;
    const Mat q = grads ? net.forward(in, tape) : net.forward(in);
    Mat d = Mat::Zero(q.rows(), q.cols());
    double loss = 0.0;
    for (Eigen::Index b = 0; b < batch.size(); ++b) {
      const auto a = static_cast<Eigen::Index>(batch.actions(0, b));
      const double diff = q(a, b) - y[b];
      loss += 0.5 * diff * diff;
      d(a, b) = diff * inv_b;
    }
    if (grads) net.backward(tape, d, *grads, false);
    return loss * inv_b;
  }

  /// mean_b sum_a pi(a|s) [alpha log pi(a|s) - min Q(s, a)], critics held fixed.
  double actor_loss(const AgentBatch& batch, nn::MlpGradients* grads, double* entropy = nullptr) const {
    const Mat in = batch.inputs();
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    nn::Mlp::Tape tape;
    const Mat logits = grads ? actor_.forward(in, tape) : actor_.forward(in);
    const Mat p = softmax(logits);
    const Mat logp = log_softmax(logits);
    const Mat qmin = critic1_.forward(in).cwiseMin(critic2_.forward(in));
    const Mat v = cfg_.entropy_scale * logp - qmin;
    const Eigen::RowVectorXd expected = (p.array() * v.array()).colwise().sum();
    if (entropy) *entropy = -(p.array() * logp.array()).colwise().sum().mean();
    if (grads) {
      const Mat d = (p.array() * (v.rowwise() - expected).array()) * inv_b;
      actor_.backward(tape, d, *grads, false);
    }
    return expected.mean();
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
    auto ga = actor_.zero_gradients();
    out.actor = actor_loss(batch, &ga, &out.entropy);
    require_finite(out.actor, "actor loss");
    actor_opt_.step(actor_, ga);
    out.mean_q = y.mean();
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

 private:
  std::vector<int> sizes(int in) const {
    std::vector<int> s{in};
    s.insert(s.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    s.push_back(num_actions_);
    return s;
  }

  void check_batch(const AgentBatch& b) const {
    if (b.size() == 0) throw InvalidArgument("agent batch is empty");
    if (b.states.rows() != state_dim_ || b.goals.rows() != goal_dim_ || b.actions.rows() != 1) {
      throw InvalidArgument("agent batch has wrong dimensions");
    }
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      const double a = b.actions(0, i);
      if (a < 0 || a >= num_actions_ || a != std::floor(a)) throw InvalidArgument("action index out of range");
    }
  }

  SacConfig cfg_;
  int state_dim_ = 0;
  int goal_dim_ = 0;
  int num_actions_ = 0;
  nn::Mlp actor_, critic1_, critic2_, target1_, target2_;
  nn::Adam actor_opt_, critic1_opt_, critic2_opt_;
};

}  // namespace distop::policy
