#pragma once

#include <cmath>

#include "distop/nn/mlp.hpp"

namespace distop::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction; one instance per network.
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, AdamConfig cfg) : cfg_(cfg), first_(net.zero_gradients()), second_(net.zero_gradients()) {}

  const AdamConfig& config() const { return cfg_; }
  long steps() const { return step_; }

  void step(Mlp& net, const MlpGradients& grads) {
    ++step_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      update(layers[i].weight, grads.layers[i].weight, first_.layers[i].weight, second_.layers[i].weight, c1, c2);
      update(layers[i].bias, grads.layers[i].bias, first_.layers[i].bias, second_.layers[i].bias, c1, c2);
    }
  }

 private:
  template <class P, class G>
  void update(P& param, const G& grad, G& m, G& v, double c1, double c2) {
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
    param.array() -= cfg_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.epsilon);
  }

  AdamConfig cfg_;
  MlpGradients first_;
  MlpGradients second_;
  long step_ = 0;
};

}  // namespace distop::nn
