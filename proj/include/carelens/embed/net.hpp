#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "carelens/embed/embedding.hpp"
#include "carelens/embed/layers.hpp"
#include "carelens/embed/tensor.hpp"

namespace carelens::embed {

/// Raised when a forward pass produces a non-finite activation.
class EmbedError : public std::runtime_error {
 public:
  EmbedError(std::size_t layer, const std::string& what)
      : std::runtime_error("layer " + std::to_string(layer) + ": " + what), layer_(layer) {}
  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

/// Architecture knobs. The defaults give two frozen 3x3 stem convolutions followed
/// by two depthwise-separable blocks on a 1x32x32 input.
struct NetConfig {
  std::size_t input_channels = 1;
  std::size_t input_size = 32;
  std::size_t kernel_size = 3;
  std::vector<std::size_t> stem_channels{8, 16};
  std::vector<std::size_t> stem_strides{2, 2};
  std::vector<std::size_t> light_channels{32, 64};
  std::vector<std::size_t> light_strides{1, 2};
  bool freeze_stem = true;
  double margin = 0.2;
};

/// Frozen stem -> depthwise-separable blocks -> global max pool -> dense -> L2 norm.
/// Every conv and dw-sep block is followed by ReLU.
struct EmbeddingNet {
  std::size_t input_channels = 1;
  std::size_t input_size = 32;
  std::vector<ConvLayer> stem;
  std::vector<DepthwiseSeparableLayer> light_blocks;
  DenseLayer head;
  double margin_alpha = 0.2;

  static EmbeddingNet build(const NetConfig& config, std::uint64_t seed);

  std::size_t block_count() const { return stem.size() + light_blocks.size(); }
  /// Number of leading stem blocks that are frozen.
  std::size_t frozen_prefix_length() const;

  void validate() const;
};

struct ForwardTrace {
  std::size_t start_block = 0;
  std::vector<Tensor> inputs;       // input of each computed block
  std::vector<Tensor> outputs;      // post-ReLU output of each computed block
  std::vector<Tensor> depthwise;    // intermediate for dw-sep blocks (empty for convs)
  std::vector<std::size_t> pool_argmax;
  Tensor pooled;
  Tensor head_out;
  double head_norm = 0.0;
  Embedding embedding;
};

/// Runs blocks [0, end_block) on an image. Used to cache the frozen stem output.
Tensor forward_prefix(const EmbeddingNet& net, const Tensor& image, std::size_t end_block);

/// Full forward from `activation`, which must be the output of block `start_block - 1`
/// (or the image when start_block is 0). Throws EmbedError on non-finite values.
ForwardTrace forward_trace(const EmbeddingNet& net, const Tensor& activation,
                           std::size_t start_block = 0);

Embedding embed(const EmbeddingNet& net, const Tensor& image);

struct NetGradients {
  std::vector<ConvGrads> stem;
  std::vector<DwsepGrads> light_blocks;
  DenseGrads head;

  static NetGradients zeros_for(const EmbeddingNet& net);
  void clear();
};

/// Backpropagates dLoss/dEmbedding through the trace and accumulates into `grads`.
/// Frozen blocks receive no gradient and stop propagation below them.
void backward(const EmbeddingNet& net, const ForwardTrace& trace,
              std::span<const double> grad_embedding, NetGradients& grads);

/// One named parameter tensor paired with its gradient buffer.
struct ParamSlot {
  std::string name;
  Tensor* value;
  Tensor* grad;
  bool trainable;
};

std::vector<ParamSlot> bind_parameters(EmbeddingNet& net, NetGradients& grads);

struct ParamCounts {
  std::size_t standard_equivalent = 0;  // light blocks counted as full convolutions
  std::size_t actual = 0;               // light blocks as built
  double reduction_ratio = 0.0;         // 1 - actual / standard_equivalent
  std::size_t total = 0;                // whole network
};

ParamCounts param_counts(const EmbeddingNet& net);

}  // namespace carelens::embed
