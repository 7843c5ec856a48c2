#include "pgbias/policy/mlp.hpp"

#include <cmath>
#include <string>

#include "pgbias/errors.hpp"

namespace pgbias {

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  require(sizes_.size() >= 2, ErrorKind::InvalidArgument, "an MLP needs at least an input and an output size");
  for (std::size_t s : sizes_) require(s > 0, ErrorKind::InvalidArgument, "MLP layer sizes must be positive");
  offsets_.reserve(sizes_.size() - 1);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(num_params_);
    num_params_ += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
}

void Mlp::forward(std::span<const double> params, std::span<const double> input, Cache& cache) const {
  require(params.size() >= num_params_, ErrorKind::InvalidArgument, "MLP parameter vector is too short");
  require(input.size() == input_dim(), ErrorKind::InvalidArgument,
          "MLP input has dimension " + std::to_string(input.size()) + ", expected " + std::to_string(input_dim()));
  const std::size_t layers = num_layers();
  cache.pre.resize(layers);
  cache.post.resize(layers + 1);
  cache.post[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const double* w = params.data() + weight_offset(l);
    const double* b = params.data() + bias_offset(l);
    const auto& x = cache.post[l];
    auto& z = cache.pre[l];
    z.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
      z[o] = acc;
    }
    auto& y = cache.post[l + 1];
    y.resize(out);
    const bool hidden = l + 1 < layers;
    for (std::size_t o = 0; o < out; ++o) y[o] = hidden ? (z[o] > 0.0 ? z[o] : 0.0) : z[o];
  }
}

void Mlp::backward(std::span<const double> params, const Cache& cache, std::span<const double> d_output,
                   double scale, std::span<double> grad) const {
  require(d_output.size() == output_dim(), ErrorKind::InvalidArgument, "MLP output gradient has the wrong size");
  require(grad.size() >= num_params_, ErrorKind::InvalidArgument, "MLP gradient buffer is too short");
  std::vector<double> delta(d_output.begin(), d_output.end());
  std::vector<double> prev;
  for (std::size_t l = num_layers(); l-- > 0;) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const bool hidden = l + 1 < num_layers();
    if (hidden) {
      for (std::size_t o = 0; o < out; ++o) {
        if (cache.pre[l][o] <= 0.0) delta[o] = 0.0;
      }
    }
    for (double d : delta) {
      if (!std::isfinite(d)) throw Error(ErrorKind::NonFinite, "non-finite gradient at layer " + std::to_string(l));
    }
    const double* w = params.data() + weight_offset(l);
    double* gw = grad.data() + weight_offset(l);
    double* gb = grad.data() + bias_offset(l);
    const auto& x = cache.post[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = scale * delta[o];
      if (d == 0.0) continue;
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * x[i];
      gb[o] += d;
    }
    if (l == 0) break;
    prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      if (delta[o] == 0.0) continue;
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * delta[o];
    }
    delta.swap(prev);
  }
}

std::vector<double> Mlp::init_params(Rng& rng) const {
  std::vector<double> params(num_params_);
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    const std::size_t begin = weight_offset(l);
    const std::size_t end = bias_offset(l) + sizes_[l + 1];
    for (std::size_t i = begin; i < end; ++i) params[i] = rng.uniform(-bound, bound);
  }
  return params;
}

}  // namespace pgbias
