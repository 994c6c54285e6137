#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "carelens/embed/tensor.hpp"

namespace carelens::embed {

/// Standard 2-D convolution (cross-correlation). kernel [Cout, Cin, k, k], bias [Cout].
struct ConvLayer {
  Tensor kernel;
  Tensor bias;
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool frozen = false;

  static ConvLayer create(std::size_t in_channels, std::size_t out_channels, std::size_t k,
                          std::size_t stride, std::size_t padding, std::mt19937_64& rng);

  std::size_t in_channels() const { return kernel.dim(1); }
  std::size_t out_channels() const { return kernel.dim(0); }
  std::size_t kernel_size() const { return kernel.dim(2); }
  std::size_t param_count() const { return kernel.size() + bias.size(); }
  void validate() const;
};

/// Per-channel k x k filtering followed by 1x1 channel mixing.
/// depthwise_kernel [Cin, k, k], pointwise_kernel [Cout, Cin], bias [Cout].
struct DepthwiseSeparableLayer {
  Tensor depthwise_kernel;
  Tensor pointwise_kernel;
  Tensor bias;
  std::size_t stride = 1;
  std::size_t padding = 0;

  static DepthwiseSeparableLayer create(std::size_t in_channels, std::size_t out_channels,
                                        std::size_t k, std::size_t stride, std::size_t padding,
                                        std::mt19937_64& rng);

  std::size_t in_channels() const { return depthwise_kernel.dim(0); }
  std::size_t out_channels() const { return pointwise_kernel.dim(0); }
  std::size_t kernel_size() const { return depthwise_kernel.dim(1); }
  std::size_t param_count() const {
    return depthwise_kernel.size() + pointwise_kernel.size() + bias.size();
  }
  void validate() const;
};

/// y = W x + b with W [Out, In].
struct DenseLayer {
  Tensor weight;
  Tensor bias;

  static DenseLayer create(std::size_t in_features, std::size_t out_features, std::mt19937_64& rng);

  std::size_t in_features() const { return weight.dim(1); }
  std::size_t out_features() const { return weight.dim(0); }
  std::size_t param_count() const { return weight.size() + bias.size(); }
  void validate() const;
};

std::size_t conv_output_extent(std::size_t in, std::size_t k, std::size_t stride,
                               std::size_t padding);

// Closed-form parameter counts, bias included.
constexpr std::size_t conv_param_count(std::size_t k, std::size_t cin, std::size_t cout) {
  return k * k * cin * cout + cout;
}
constexpr std::size_t dwsep_param_count(std::size_t k, std::size_t cin, std::size_t cout) {
  return k * k * cin + cin * cout + cout;
}

Tensor conv_forward(const Tensor& input, const ConvLayer& layer);

struct ConvGrads {
  Tensor kernel;
  Tensor bias;
};

/// Accumulates parameter gradients into `grads` (when non-null) and returns the
/// gradient with respect to `input` (empty when `need_input_grad` is false).
Tensor conv_backward(const Tensor& input, const ConvLayer& layer, const Tensor& grad_output,
                     ConvGrads* grads, bool need_input_grad);

/// `depthwise_out`, when non-null, receives the intermediate per-channel result.
Tensor dwsep_forward(const Tensor& input, const DepthwiseSeparableLayer& layer,
                     Tensor* depthwise_out = nullptr);

struct DwsepGrads {
  Tensor depthwise_kernel;
  Tensor pointwise_kernel;
  Tensor bias;
};

Tensor dwsep_backward(const Tensor& input, const Tensor& depthwise_out,
                      const DepthwiseSeparableLayer& layer, const Tensor& grad_output,
                      DwsepGrads* grads, bool need_input_grad);

Tensor dense_forward(const Tensor& input, const DenseLayer& layer);

struct DenseGrads {
  Tensor weight;
  Tensor bias;
};

Tensor dense_backward(const Tensor& input, const DenseLayer& layer, const Tensor& grad_output,
                      DenseGrads* grads);

void relu_inplace(Tensor& t) noexcept;
/// Zeroes gradient entries where the post-activation value is not positive.
void relu_backward_inplace(const Tensor& activated, Tensor& grad) noexcept;

/// Per-channel maximum over [C, H, W]. `argmax` receives the flat spatial index
/// of the first maximum in scan order.
Tensor global_max_pool(const Tensor& input, std::vector<std::size_t>* argmax = nullptr);
Tensor global_max_pool_backward(const std::vector<std::size_t>& shape,
                                const std::vector<std::size_t>& argmax, const Tensor& grad_output);

}  // namespace carelens::embed
