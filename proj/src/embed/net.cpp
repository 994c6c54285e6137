#include "carelens/embed/net.hpp"

#include <cmath>
#include <random>

namespace carelens::embed {
namespace {

void check_finite(const Tensor& t, std::size_t layer, const char* what) {
  if (!t.all_finite()) throw EmbedError(layer, std::string("non-finite ") + what);
}

bool block_trainable(const EmbeddingNet& net, std::size_t b) {
  return b >= net.stem.size() || !net.stem[b].frozen;
}

}  // namespace

EmbeddingNet EmbeddingNet::build(const NetConfig& config, std::uint64_t seed) {
  if (config.stem_channels.size() != config.stem_strides.size() ||
      config.light_channels.size() != config.light_strides.size()) {
    throw ShapeError("each block needs exactly one stride");
  }
  if (!(config.margin > 0.0)) throw std::invalid_argument("margin must be positive");

  std::mt19937_64 rng(seed);
  EmbeddingNet net;
  net.input_channels = config.input_channels;
  net.input_size = config.input_size;
  net.margin_alpha = config.margin;

  const std::size_t k = config.kernel_size, pad = k / 2;
  std::size_t channels = config.input_channels;
  for (std::size_t i = 0; i < config.stem_channels.size(); ++i) {
    auto layer = ConvLayer::create(channels, config.stem_channels[i], k, config.stem_strides[i],
                                   pad, rng);
    layer.frozen = config.freeze_stem;
    net.stem.push_back(std::move(layer));
    channels = config.stem_channels[i];
  }
  for (std::size_t i = 0; i < config.light_channels.size(); ++i) {
    net.light_blocks.push_back(DepthwiseSeparableLayer::create(
        channels, config.light_channels[i], k, config.light_strides[i], pad, rng));
    channels = config.light_channels[i];
  }
  net.head = DenseLayer::create(channels, kEmbeddingDim, rng);
  net.validate();
  return net;
}

std::size_t EmbeddingNet::frozen_prefix_length() const {
  std::size_t n = 0;
  while (n < stem.size() && stem[n].frozen) ++n;
  return n;
}

void EmbeddingNet::validate() const {
  if (block_count() == 0) throw ShapeError("network needs at least one block");
  std::size_t channels = input_channels;
  std::size_t extent = input_size;
  for (const auto& layer : stem) {
    layer.validate();
    if (layer.in_channels() != channels) throw ShapeError("stem channel chain is broken");
    extent = conv_output_extent(extent, layer.kernel_size(), layer.stride, layer.padding);
    channels = layer.out_channels();
  }
  for (const auto& layer : light_blocks) {
    layer.validate();
    if (layer.in_channels() != channels) throw ShapeError("light block channel chain is broken");
    extent = conv_output_extent(extent, layer.kernel_size(), layer.stride, layer.padding);
    channels = layer.out_channels();
  }
  head.validate();
  if (head.in_features() != channels || head.out_features() != kEmbeddingDim) {
    throw ShapeError("head must map " + std::to_string(channels) + " pooled channels to " +
                     std::to_string(kEmbeddingDim));
  }
  if (!(margin_alpha > 0.0)) throw std::invalid_argument("margin must be positive");
}

Tensor forward_prefix(const EmbeddingNet& net, const Tensor& image, std::size_t end_block) {
  Tensor act = image;
  for (std::size_t b = 0; b < end_block; ++b) {
    if (b < net.stem.size()) {
      act = conv_forward(act, net.stem[b]);
    } else {
      act = dwsep_forward(act, net.light_blocks[b - net.stem.size()]);
    }
    relu_inplace(act);
    check_finite(act, b, "activation");
  }
  return act;
}

ForwardTrace forward_trace(const EmbeddingNet& net, const Tensor& activation,
                           std::size_t start_block) {
  if (start_block == 0) {
    const std::vector<std::size_t> expected{net.input_channels, net.input_size, net.input_size};
    if (activation.shape() != expected) {
      throw ShapeError("image shape " + activation.shape_string() + " does not match network input " +
                       Tensor(expected).shape_string());
    }
    check_finite(activation, 0, "input");
  }
  ForwardTrace trace;
  trace.start_block = start_block;
  const std::size_t blocks = net.block_count();
  const std::size_t n = blocks - start_block;
  trace.inputs.reserve(n);
  trace.outputs.reserve(n);
  trace.depthwise.resize(n);

  Tensor act = activation;
  for (std::size_t b = start_block; b < blocks; ++b) {
    trace.inputs.push_back(act);
    if (b < net.stem.size()) {
      act = conv_forward(act, net.stem[b]);
    } else {
      act = dwsep_forward(act, net.light_blocks[b - net.stem.size()],
                          &trace.depthwise[b - start_block]);
    }
    relu_inplace(act);
    check_finite(act, b, "activation");
    trace.outputs.push_back(act);
  }

  trace.pooled = global_max_pool(act, &trace.pool_argmax);
  trace.head_out = dense_forward(trace.pooled, net.head);
  check_finite(trace.head_out, blocks + 1, "head output");
  double sq = 0.0;
  for (double v : trace.head_out.data()) sq += v * v;
  trace.head_norm = std::sqrt(sq);
  if (!(trace.head_norm > 0.0) || !std::isfinite(trace.head_norm)) {
    throw EmbedError(blocks + 1, "head output has zero or non-finite norm");
  }
  trace.embedding = Embedding::normalized(trace.head_out.data());
  return trace;
}

Embedding embed(const EmbeddingNet& net, const Tensor& image) {
  return forward_trace(net, image, 0).embedding;
}

NetGradients NetGradients::zeros_for(const EmbeddingNet& net) {
  NetGradients g;
  for (const auto& l : net.stem) {
    g.stem.push_back({Tensor::zeros_like(l.kernel), Tensor::zeros_like(l.bias)});
  }
  for (const auto& l : net.light_blocks) {
    g.light_blocks.push_back({Tensor::zeros_like(l.depthwise_kernel),
                              Tensor::zeros_like(l.pointwise_kernel), Tensor::zeros_like(l.bias)});
  }
  g.head = {Tensor::zeros_like(net.head.weight), Tensor::zeros_like(net.head.bias)};
  return g;
}

void NetGradients::clear() {
  for (auto& g : stem) {
    g.kernel.fill(0.0);
    g.bias.fill(0.0);
  }
  for (auto& g : light_blocks) {
    g.depthwise_kernel.fill(0.0);
    g.pointwise_kernel.fill(0.0);
    g.bias.fill(0.0);
  }
  head.weight.fill(0.0);
  head.bias.fill(0.0);
}

void backward(const EmbeddingNet& net, const ForwardTrace& trace,
              std::span<const double> grad_embedding, NetGradients& grads) {
  // d(u/|u|)/du applied to g: (g - e (e.g)) / |u|
  const auto& e = trace.embedding.values();
  double dot = 0.0;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) dot += e[i] * grad_embedding[i];
  Tensor grad_head({kEmbeddingDim});
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
    grad_head[i] = (grad_embedding[i] - e[i] * dot) / trace.head_norm;
  }

  Tensor grad_pooled = dense_backward(trace.pooled, net.head, grad_head, &grads.head);

  const std::size_t blocks = net.block_count();
  const std::size_t start = trace.start_block;
  // Lowest trainable block at or above `start`; nothing below it needs a gradient.
  std::size_t lowest_trainable = blocks;
  for (std::size_t b = start; b < blocks; ++b) {
    if (block_trainable(net, b)) {
      lowest_trainable = b;
      break;
    }
  }
  if (lowest_trainable == blocks) return;

  Tensor grad = global_max_pool_backward(trace.outputs.back().shape(), trace.pool_argmax,
                                         grad_pooled);
  for (std::size_t b = blocks; b-- > lowest_trainable;) {
    const std::size_t t = b - start;
    relu_backward_inplace(trace.outputs[t], grad);
    const bool need_input = b > lowest_trainable;
    if (b < net.stem.size()) {
      ConvGrads* g = net.stem[b].frozen ? nullptr : &grads.stem[b];
      grad = conv_backward(trace.inputs[t], net.stem[b], grad, g, need_input);
    } else {
      const std::size_t l = b - net.stem.size();
      grad = dwsep_backward(trace.inputs[t], trace.depthwise[t], net.light_blocks[l], grad,
                            &grads.light_blocks[l], need_input);
    }
  }
}

std::vector<ParamSlot> bind_parameters(EmbeddingNet& net, NetGradients& grads) {
  std::vector<ParamSlot> slots;
  for (std::size_t i = 0; i < net.stem.size(); ++i) {
    const bool t = !net.stem[i].frozen;
    const std::string p = "stem" + std::to_string(i);
    slots.push_back({p + ".kernel", &net.stem[i].kernel, &grads.stem[i].kernel, t});
    slots.push_back({p + ".bias", &net.stem[i].bias, &grads.stem[i].bias, t});
  }
  for (std::size_t i = 0; i < net.light_blocks.size(); ++i) {
    const std::string p = "light" + std::to_string(i);
    auto& l = net.light_blocks[i];
    auto& g = grads.light_blocks[i];
    slots.push_back({p + ".depthwise", &l.depthwise_kernel, &g.depthwise_kernel, true});
    slots.push_back({p + ".pointwise", &l.pointwise_kernel, &g.pointwise_kernel, true});
    slots.push_back({p + ".bias", &l.bias, &g.bias, true});
  }
  slots.push_back({"head.weight", &net.head.weight, &grads.head.weight, true});
  slots.push_back({"head.bias", &net.head.bias, &grads.head.bias, true});
  return slots;
}

ParamCounts param_counts(const EmbeddingNet& net) {
  ParamCounts c;
  for (const auto& l : net.light_blocks) {
    c.standard_equivalent += conv_param_count(l.kernel_size(), l.in_channels(), l.out_channels());
    c.actual += l.param_count();
  }
  if (c.standard_equivalent > 0) {
    c.reduction_ratio = 1.0 - static_cast<double>(c.actual) /
                                  static_cast<double>(c.standard_equivalent);
  }
  c.total = c.actual + net.head.param_count();
  for (const auto& l : net.stem) c.total += l.param_count();
  return c;
}

}  // namespace carelens::embed
