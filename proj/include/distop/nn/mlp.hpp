#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "distop/common.hpp"

namespace distop::nn {

enum class Activation { kIdentity, kTanh, kSilu, kRelu };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
    case Activation::kSilu: return "silu";
    case Activation::kRelu: return "relu";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "tanh") return Activation::kTanh;
  if (s == "silu") return Activation::kSilu;
  if (s == "relu") return Activation::kRelu;
  throw ConfigError("unknown activation '" + s + "'");
}

namespace detail {

inline Mat activate(Activation a, const Mat& z) {
  switch (a) {
    case Activation::kIdentity: return z;
    case Activation::kTanh: return z.array().tanh().matrix();
    case Activation::kSilu: return (z.array() / (1.0 + (-z.array()).exp())).matrix();
    case Activation::kRelu: return z.cwiseMax(0.0);
  }
  return z;
}

// d act / d z, evaluated at the pre-activation z (and its output y).
inline Mat activation_slope(Activation a, const Mat& z, const Mat& y) {
  switch (a) {
    case Activation::kIdentity: return Mat::Ones(z.rows(), z.cols());
    case Activation::kTanh: return (1.0 - y.array().square()).matrix();
    case Activation::kSilu: {
      Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
      return (s * (1.0 + z.array() * (1.0 - s))).matrix();
    }
    case Activation::kRelu: return (z.array() > 0.0).cast<double>().matrix();
  }
  return Mat::Ones(z.rows(), z.cols());
}

// One-hot style inputs make the first GEMM mostly multiplications by zero.
inline bool is_sparse_input(const Mat& x) {
  if (x.size() < 4096) return false;
  const Eigen::Index nnz = (x.array() != 0.0).count();
  return nnz * 20 < x.size();
}

}  // namespace detail

struct DenseLayer {
  Mat weight;  // out x in
  Vec bias;    // out
};

/// Gradients laid out exactly like the owning Mlp's layers.
struct MlpGradients {
  std::vector<DenseLayer> layers;

  void set_zero() {
    for (auto& l : layers) {
      l.weight.setZero();
      l.bias.setZero();
    }
  }
};

/// Fully connected network; batches are stored column-wise (features x batch).
class Mlp {
 public:
  struct Tape {
    Mat input;
    std::vector<Mat> pre;   // pre-activations per layer
    std::vector<Mat> post;  // outputs per layer
    bool sparse_input = false;
  };

  Mlp() = default;

  /// `sizes` = {input, hidden..., output}. Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(const std::vector<int>& sizes, Activation hidden, Rng& rng, double output_scale = 1.0,
      Activation output = Activation::kIdentity)
      : hidden_(hidden), output_(output) {
    if (sizes.size() < 2) throw InvalidArgument("Mlp needs at least input and output sizes");
    for (int s : sizes) {
      if (s <= 0) throw InvalidArgument("Mlp layer sizes must be positive");
    }
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      const int in = sizes[i];
      const int out = sizes[i + 1];
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      const double scale = (i + 2 == sizes.size()) ? output_scale : 1.0;
      std::uniform_real_distribution<double> dist(-bound, bound);
      DenseLayer layer{Mat(out, in), Vec(out)};
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = scale * dist(rng);
      }
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = scale * dist(rng);
      layers_.push_back(std::move(layer));
    }
  }

  int input_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols()); }
  int output_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows()); }
  std::vector<int> sizes() const {
    std::vector<int> s;
    if (layers_.empty()) return s;
    s.push_back(input_dim());
    for (const auto& l : layers_) s.push_back(static_cast<int>(l.weight.rows()));
    return s;
  }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  MlpGradients zero_gradients() const {
    MlpGradients g;
    for (const auto& l : layers_) {
      g.layers.push_back({Mat::Zero(l.weight.rows(), l.weight.cols()), Vec::Zero(l.bias.size())});
    }
    return g;
  }

  Mat forward(const Mat& x) const {
    check_input(x);
    Mat h;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      Mat z = (i == 0) ? first_layer(x) : Mat(l.weight * h);
      z.colwise() += l.bias;
      h = detail::activate(activation_of(i), z);
    }
    return h;
  }

  Vec forward_one(const Vec& x) const { return forward(Mat(x)).col(0); }

  Mat forward(const Mat& x, Tape& tape) const {
    check_input(x);
    tape.input = x;
    tape.sparse_input = detail::is_sparse_input(x);
    tape.pre.resize(layers_.size());
    tape.post.resize(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      Mat z = (i == 0) ? first_layer(x) : Mat(l.weight * tape.post[i - 1]);
      z.colwise() += l.bias;
      tape.post[i] = detail::activate(activation_of(i), z);
      tape.pre[i] = std::move(z);
    }
    return tape.post.back();
  }

  /// Accumulates parameter gradients into `grads`; returns d loss / d input.
  Mat backward(const Tape& tape, const Mat& grad_output, MlpGradients& grads, bool need_input_grad = true) const {
    Mat delta = grad_output;
    Mat grad_input;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const Activation act = activation_of(i);
      if (act != Activation::kIdentity) {
        delta.array() *= detail::activation_slope(act, tape.pre[i], tape.post[i]).array();
      }
      auto& g = grads.layers[i];
      g.bias += delta.rowwise().sum();
      if (i == 0) {
        if (tape.sparse_input) {
          Eigen::SparseMatrix<double> xs = tape.input.sparseView();
          g.weight += delta * xs.transpose();
        } else {
          g.weight.noalias() += delta * tape.input.transpose();
        }
        if (need_input_grad) grad_input = layers_[0].weight.transpose() * delta;
      } else {
        g.weight.noalias() += delta * tape.post[i - 1].transpose();
        delta = layers_[i].weight.transpose() * delta;
      }
    }
    return grad_input;
  }

  /// Visits every parameter tensor as (name, data, size).
  template <class F>
  void for_each_tensor(F&& f) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      f("layer" + std::to_string(i) + ".weight", layers_[i].weight.data(), layers_[i].weight.size());
      f("layer" + std::to_string(i) + ".bias", layers_[i].bias.data(), layers_[i].bias.size());
    }
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      f("layer" + std::to_string(i) + ".weight", layers_[i].weight.data(), layers_[i].weight.size());
      f("layer" + std::to_string(i) + ".bias", layers_[i].bias.data(), layers_[i].bias.size());
    }
  }

  /// this <- (1 - rate) * this + rate * source
  void blend_from(const Mlp& source, double rate) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      layers_[i].weight = (1.0 - rate) * layers_[i].weight + rate * source.layers_[i].weight;
      layers_[i].bias = (1.0 - rate) * layers_[i].bias + rate * source.layers_[i].bias;
    }
  }

  bool same_shape(const Mlp& other) const { return sizes() == other.sizes(); }

  bool operator==(const Mlp& other) const {
    if (!same_shape(other) || hidden_ != other.hidden_ || output_ != other.output_) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].weight != other.layers_[i].weight || layers_[i].bias != other.layers_[i].bias) return false;
    }
    return true;
  }

 private:
  Activation activation_of(std::size_t layer) const {
    return layer + 1 == layers_.size() ? output_ : hidden_;
  }

  void check_input(const Mat& x) const {
    if (layers_.empty()) throw InvalidState("Mlp has no layers");
    if (x.rows() != input_dim()) {
      throw ConfigError("input dimension " + std::to_string(x.rows()) + " does not match network input " +
                        std::to_string(input_dim()));
    }
  }

  Mat first_layer(const Mat& x) const {
    if (detail::is_sparse_input(x)) {
      Eigen::SparseMatrix<double> xs = x.sparseView();
      return layers_[0].weight * xs;
    }
    return layers_[0].weight * x;
  }

  std::vector<DenseLayer> layers_;
  Activation hidden_ = Activation::kSilu;
  Activation output_ = Activation::kIdentity;
};

}  // namespace distop::nn
