#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pgbias/rng.hpp"

namespace pgbias {

/// Fully connected network with ReLU hidden layers and a linear output layer.
/// Parameters live outside the object in one flat vector laid out per layer
/// as W (out x in, row-major) followed by b (out).
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<std::size_t> sizes);

  /// Per-layer activations from one forward pass. `post[0]` is the input;
  /// `post[i]` is the output of layer i (ReLU applied for hidden layers).
  struct Cache {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;

    std::span<const double> output() const { return post.back(); }
  };

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t num_params() const { return num_params_; }
  /// Offset of layer `layer`'s weight block inside the flat vector.
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return offsets_[layer] + sizes_[layer + 1] * sizes_[layer]; }

  void forward(std::span<const double> params, std::span<const double> input, Cache& cache) const;

  /// Adds scale * d(output . d_output)/d(params) into `grad`. Throws with the
  /// layer index if a non-finite value shows up.
  void backward(std::span<const double> params, const Cache& cache, std::span<const double> d_output,
                double scale, std::span<double> grad) const;

  /// Uniform(+-1/sqrt(fan_in)) for weights and biases.
  std::vector<double> init_params(Rng& rng) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t num_params_ = 0;
};

}  // namespace pgbias
