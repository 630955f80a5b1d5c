#pragma once

#include <string>
#include <vector>

#include "distop/common.hpp"
#include "distop/nn/checkpoint.hpp"
#include "distop/nn/mlp.hpp"

namespace distop::repr {

struct EncoderArchitecture {
  int input_dim = 2;
  int embedding_dim = 3;
  std::vector<int> hidden = {256, 256};
  nn::Activation activation = nn::Activation::kSilu;
  /// Multiplies the initial weights of the last layer; 0 gives a zero-output encoder.
  double output_scale = 1.0;
};

/// Online weights (trained by gradient) and their slow-moving target copy.
///
/// The target copy is only ever modified through smooth_update_target; nothing
/// in this library applies gradients to it.
struct EncoderParams {
  nn::Mlp online;
  nn::Mlp target;

  int input_dim() const { return online.input_dim(); }
  int embedding_dim() const { return online.output_dim(); }

  const nn::Mlp& net(bool use_target) const { return use_target ? target : online; }
};

inline EncoderParams make_encoder(const EncoderArchitecture& arch, Rng& rng) {
  if (arch.embedding_dim <= 0) throw ConfigError("embedding dimension d must be positive");
  std::vector<int> sizes{arch.input_dim};
  sizes.insert(sizes.end(), arch.hidden.begin(), arch.hidden.end());
  sizes.push_back(arch.embedding_dim);
  EncoderParams p;
  p.online = nn::Mlp(sizes, arch.activation, rng, arch.output_scale);
  p.target = p.online;
  return p;
}

inline EmbeddedState encode(const EncoderParams& params, const GroundState& state, bool use_target) {
  return params.net(use_target).forward_one(state);
}

/// Encoder view of a ground state: its leading input_dim components. Environments
/// may append policy-only features (e.g. heading) after the encoder's inputs.
inline GroundState encoder_input(const EncoderParams& params, const GroundState& state) {
  const int n = params.input_dim();
  if (state.size() < n) throw ConfigError("ground state is smaller than the encoder input");
  return state.head(n);
}

/// Goal-space embedding used everywhere outside representation learning.
inline EmbeddedState embed_target(const EncoderParams& params, const GroundState& state) {
  return encode(params, encoder_input(params, state), true);
}

inline Mat encoder_inputs(const EncoderParams& params, const Mat& states) {
  const int n = params.input_dim();
  if (states.rows() < n) throw ConfigError("ground state is smaller than the encoder input");
  return states.topRows(n);
}

/// Column-wise batch encoding.
inline Mat encode_batch(const EncoderParams& params, const Mat& states, bool use_target) {
  return params.net(use_target).forward(states);
}

/// f = exp(-k * ||e1 - e2||_2), in (0, 1].
inline double similarity(const EmbeddedState& e1, const EmbeddedState& e2, double k) {
  if (e1.size() != e2.size()) throw InvalidArgument("similarity: dimension mismatch");
  if (!(k > 0.0)) throw InvalidArgument("similarity: temperature must be positive");
  return std::exp(-k * (e1 - e2).norm());
}

/// target <- (1 - rate) * target + rate * online
inline void smooth_update_target(EncoderParams& params, double alpha_slow) {
  if (!(alpha_slow >= 0.0 && alpha_slow <= 1.0)) throw InvalidArgument("alpha_slow must lie in [0, 1]");
  if (alpha_slow == 0.0) return;
  params.target.blend_from(params.online, alpha_slow);
}

inline nn::Checkpoint to_checkpoint(const EncoderParams& params, const nlohmann::json& config) {
  nn::Checkpoint ckpt;
  ckpt.networks.emplace("encoder.online", params.online);
  ckpt.networks.emplace("encoder.target", params.target);
  ckpt.meta["d"] = params.embedding_dim();
  ckpt.meta["config"] = config;
  return ckpt;
}

inline EncoderParams from_checkpoint(const nn::Checkpoint& ckpt) {
  EncoderParams p;
  p.online = ckpt.networks.at("encoder.online");
  p.target = ckpt.networks.at("encoder.target");
  if (!p.online.same_shape(p.target)) throw InvalidArgument("encoder checkpoint: online/target shape mismatch");
  return p;
}

}  // namespace distop::repr
