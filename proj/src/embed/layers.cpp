#include "carelens/embed/layers.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace carelens::embed {
namespace {

void fill_normal(Tensor& t, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.data()) v = dist(rng);
}

std::string dims(std::size_t c, std::size_t h, std::size_t w) {
  return "[" + std::to_string(c) + ", " + std::to_string(h) + ", " + std::to_string(w) + "]";
}

void require_rank3(const Tensor& input, const char* op) {
  if (input.rank() != 3) {
    throw ShapeError(std::string(op) + ": expected [C, H, W] input, got " + input.shape_string());
  }
}

}  // namespace

std::size_t conv_output_extent(std::size_t in, std::size_t k, std::size_t stride,
                               std::size_t padding) {
  if (in + 2 * padding < k) {
    throw ShapeError("spatial extent " + std::to_string(in) + " with padding " +
                     std::to_string(padding) + " is smaller than kernel " + std::to_string(k));
  }
  return (in + 2 * padding - k) / stride + 1;
}

ConvLayer ConvLayer::create(std::size_t in_channels, std::size_t out_channels, std::size_t k,
                            std::size_t stride, std::size_t padding, std::mt19937_64& rng) {
  ConvLayer layer;
  layer.kernel = Tensor({out_channels, in_channels, k, k});
  layer.bias = Tensor({out_channels});
  layer.stride = stride;
  layer.padding = padding;
  fill_normal(layer.kernel, std::sqrt(2.0 / static_cast<double>(in_channels * k * k)), rng);
  layer.validate();
  return layer;
}

void ConvLayer::validate() const {
  if (kernel.rank() != 4 || kernel.dim(2) != kernel.dim(3)) {
    throw ShapeError("conv kernel must be [Cout, Cin, k, k], got " + kernel.shape_string());
  }
  if (kernel.dim(2) % 2 == 0) throw ShapeError("conv kernel size must be odd");
  if (bias.rank() != 1 || bias.dim(0) != kernel.dim(0)) {
    throw ShapeError("conv bias must be [Cout], got " + bias.shape_string());
  }
  if (stride == 0) throw ShapeError("conv stride must be positive");
}

DepthwiseSeparableLayer DepthwiseSeparableLayer::create(std::size_t in_channels,
                                                        std::size_t out_channels, std::size_t k,
                                                        std::size_t stride, std::size_t padding,
                                                        std::mt19937_64& rng) {
  DepthwiseSeparableLayer layer;
  layer.depthwise_kernel = Tensor({in_channels, k, k});
  layer.pointwise_kernel = Tensor({out_channels, in_channels});
  layer.bias = Tensor({out_channels});
  layer.stride = stride;
  layer.padding = padding;
  fill_normal(layer.depthwise_kernel, std::sqrt(2.0 / static_cast<double>(k * k)), rng);
  fill_normal(layer.pointwise_kernel, std::sqrt(2.0 / static_cast<double>(in_channels)), rng);
  layer.validate();
  return layer;
}

void DepthwiseSeparableLayer::validate() const {
  if (depthwise_kernel.rank() != 3 || depthwise_kernel.dim(1) != depthwise_kernel.dim(2)) {
    throw ShapeError("depthwise kernel must be [Cin, k, k], got " +
                     depthwise_kernel.shape_string());
  }
  if (depthwise_kernel.dim(1) % 2 == 0) throw ShapeError("depthwise kernel size must be odd");
  if (pointwise_kernel.rank() != 2 || pointwise_kernel.dim(1) != depthwise_kernel.dim(0)) {
    throw ShapeError("pointwise kernel must be [Cout, Cin], got " +
                     pointwise_kernel.shape_string());
  }
  if (bias.rank() != 1 || bias.dim(0) != pointwise_kernel.dim(0)) {
    throw ShapeError("dwsep bias must be [Cout], got " + bias.shape_string());
  }
  if (stride == 0) throw ShapeError("dwsep stride must be positive");
}

DenseLayer DenseLayer::create(std::size_t in_features, std::size_t out_features,
                              std::mt19937_64& rng) {
  DenseLayer layer;
  layer.weight = Tensor({out_features, in_features});
  layer.bias = Tensor({out_features});
  fill_normal(layer.weight, std::sqrt(1.0 / static_cast<double>(in_features)), rng);
  return layer;
}

void DenseLayer::validate() const {
  if (weight.rank() != 2 || bias.rank() != 1 || bias.dim(0) != weight.dim(0)) {
    throw ShapeError("dense layer must be weight [Out, In] and bias [Out], got " +
                     weight.shape_string() + " / " + bias.shape_string());
  }
}

Tensor conv_forward(const Tensor& input, const ConvLayer& layer) {
  require_rank3(input, "conv_forward");
  layer.validate();
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (cin != layer.in_channels()) {
    throw ShapeError("conv_forward: input " + dims(cin, h, w) + " has " + std::to_string(cin) +
                     " channels, layer expects " + std::to_string(layer.in_channels()));
  }
  const std::size_t k = layer.kernel_size(), s = layer.stride;
  const auto pad = static_cast<std::ptrdiff_t>(layer.padding);
  const std::size_t oh = conv_output_extent(h, k, s, layer.padding);
  const std::size_t ow = conv_output_extent(w, k, s, layer.padding);
  const std::size_t cout = layer.out_channels();

  Tensor out({cout, oh, ow});
  const double* kern = layer.kernel.data().data();
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = layer.bias[co];
        const auto y0 = static_cast<std::ptrdiff_t>(oy * s) - pad;
        const auto x0 = static_cast<std::ptrdiff_t>(ox * s) - pad;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          const double* kc = kern + (co * cin + ci) * k * k;
          for (std::size_t ky = 0; ky < k; ++ky) {
            const auto iy = y0 + static_cast<std::ptrdiff_t>(ky);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const auto ix = x0 + static_cast<std::ptrdiff_t>(kx);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              acc += kc[ky * k + kx] * input.at(ci, static_cast<std::size_t>(iy),
                                                static_cast<std::size_t>(ix));
            }
          }
        }
        out.at(co, oy, ox) = acc;
      }
    }
  }
  return out;
}

Tensor conv_backward(const Tensor& input, const ConvLayer& layer, const Tensor& grad_output,
                     ConvGrads* grads, bool need_input_grad) {
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t cout = grad_output.dim(0), oh = grad_output.dim(1), ow = grad_output.dim(2);
  const std::size_t k = layer.kernel_size(), s = layer.stride;
  const auto pad = static_cast<std::ptrdiff_t>(layer.padding);

  Tensor grad_input;
  if (need_input_grad) grad_input = Tensor({cin, h, w});
  const double* kern = layer.kernel.data().data();
  double* gk = grads ? grads->kernel.data().data() : nullptr;

  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double g = grad_output.at(co, oy, ox);
        if (g == 0.0) continue;
        if (grads) grads->bias[co] += g;
        const auto y0 = static_cast<std::ptrdiff_t>(oy * s) - pad;
        const auto x0 = static_cast<std::ptrdiff_t>(ox * s) - pad;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          const std::size_t koff = (co * cin + ci) * k * k;
          for (std::size_t ky = 0; ky < k; ++ky) {
            const auto iy = y0 + static_cast<std::ptrdiff_t>(ky);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const auto ix = x0 + static_cast<std::ptrdiff_t>(kx);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              const auto uy = static_cast<std::size_t>(iy), ux = static_cast<std::size_t>(ix);
              if (gk) gk[koff + ky * k + kx] += g * input.at(ci, uy, ux);
              if (need_input_grad) grad_input.at(ci, uy, ux) += g * kern[koff + ky * k + kx];
            }
          }
        }
      }
    }
  }
  return grad_input;
}

Tensor dwsep_forward(const Tensor& input, const DepthwiseSeparableLayer& layer,
                     Tensor* depthwise_out) {
  require_rank3(input, "dwsep_forward");
  layer.validate();
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (cin != layer.in_channels()) {
    throw ShapeError("dwsep_forward: input " + dims(cin, h, w) + " has " + std::to_string(cin) +
                     " channels, layer expects " + std::to_string(layer.in_channels()));
  }
  const std::size_t k = layer.kernel_size(), s = layer.stride;
  const auto pad = static_cast<std::ptrdiff_t>(layer.padding);
  const std::size_t oh = conv_output_extent(h, k, s, layer.padding);
  const std::size_t ow = conv_output_extent(w, k, s, layer.padding);

  Tensor mid({cin, oh, ow});
  for (std::size_t c = 0; c < cin; ++c) {
    const double* kc = layer.depthwise_kernel.data().data() + c * k * k;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        const auto y0 = static_cast<std::ptrdiff_t>(oy * s) - pad;
        const auto x0 = static_cast<std::ptrdiff_t>(ox * s) - pad;
        for (std::size_t ky = 0; ky < k; ++ky) {
          const auto iy = y0 + static_cast<std::ptrdiff_t>(ky);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto ix = x0 + static_cast<std::ptrdiff_t>(kx);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            acc += kc[ky * k + kx] *
                   input.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
          }
        }
        mid.at(c, oy, ox) = acc;
      }
    }
  }

  const std::size_t cout = layer.out_channels(), plane = oh * ow;
  Tensor out({cout, oh, ow});
  const double* pw = layer.pointwise_kernel.data().data();
  const double* m = mid.data().data();
  double* o = out.data().data();
  for (std::size_t co = 0; co < cout; ++co) {
    double* orow = o + co * plane;
    for (std::size_t i = 0; i < plane; ++i) orow[i] = layer.bias[co];
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const double wv = pw[co * cin + ci];
      const double* mrow = m + ci * plane;
      for (std::size_t i = 0; i < plane; ++i) orow[i] += wv * mrow[i];
    }
  }
  if (depthwise_out) *depthwise_out = std::move(mid);
  return out;
}

Tensor dwsep_backward(const Tensor& input, const Tensor& depthwise_out,
                      const DepthwiseSeparableLayer& layer, const Tensor& grad_output,
                      DwsepGrads* grads, bool need_input_grad) {
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t cout = grad_output.dim(0), oh = grad_output.dim(1), ow = grad_output.dim(2);
  const std::size_t plane = oh * ow;
  const std::size_t k = layer.kernel_size(), s = layer.stride;
  const auto pad = static_cast<std::ptrdiff_t>(layer.padding);

  // Pointwise stage.
  Tensor grad_mid({cin, oh, ow});
  const double* go = grad_output.data().data();
  const double* mid = depthwise_out.data().data();
  const double* pw = layer.pointwise_kernel.data().data();
  double* gm = grad_mid.data().data();
  for (std::size_t co = 0; co < cout; ++co) {
    const double* grow = go + co * plane;
    if (grads) {
      double bsum = 0.0;
      for (std::size_t i = 0; i < plane; ++i) bsum += grow[i];
      grads->bias[co] += bsum;
    }
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const double* mrow = mid + ci * plane;
      double* gmrow = gm + ci * plane;
      const double wv = pw[co * cin + ci];
      double wsum = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        wsum += grow[i] * mrow[i];
        gmrow[i] += wv * grow[i];
      }
      if (grads) grads->pointwise_kernel[co * cin + ci] += wsum;
    }
  }

  // Depthwise stage.
  Tensor grad_input;
  if (need_input_grad) grad_input = Tensor({cin, h, w});
  for (std::size_t c = 0; c < cin; ++c) {
    const double* kc = layer.depthwise_kernel.data().data() + c * k * k;
    double* gk = grads ? grads->depthwise_kernel.data().data() + c * k * k : nullptr;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double g = grad_mid.at(c, oy, ox);
        if (g == 0.0) continue;
        const auto y0 = static_cast<std::ptrdiff_t>(oy * s) - pad;
        const auto x0 = static_cast<std::ptrdiff_t>(ox * s) - pad;
        for (std::size_t ky = 0; ky < k; ++ky) {
          const auto iy = y0 + static_cast<std::ptrdiff_t>(ky);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto ix = x0 + static_cast<std::ptrdiff_t>(kx);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            const auto uy = static_cast<std::size_t>(iy), ux = static_cast<std::size_t>(ix);
            if (gk) gk[ky * k + kx] += g * input.at(c, uy, ux);
            if (need_input_grad) grad_input.at(c, uy, ux) += g * kc[ky * k + kx];
          }
        }
      }
    }
  }
  return grad_input;
}

Tensor dense_forward(const Tensor& input, const DenseLayer& layer) {
  layer.validate();
  if (input.size() != layer.in_features()) {
    throw ShapeError("dense_forward: input has " + std::to_string(input.size()) +
                     " features, layer expects " + std::to_string(layer.in_features()));
  }
  const std::size_t in = layer.in_features(), out_n = layer.out_features();
  Tensor out({out_n});
  const double* wt = layer.weight.data().data();
  for (std::size_t o = 0; o < out_n; ++o) {
    double acc = layer.bias[o];
    for (std::size_t i = 0; i < in; ++i) acc += wt[o * in + i] * input[i];
    out[o] = acc;
  }
  return out;
}

Tensor dense_backward(const Tensor& input, const DenseLayer& layer, const Tensor& grad_output,
                      DenseGrads* grads) {
  const std::size_t in = layer.in_features(), out_n = layer.out_features();
  Tensor grad_input({in});
  const double* wt = layer.weight.data().data();
  for (std::size_t o = 0; o < out_n; ++o) {
    const double g = grad_output[o];
    if (grads) {
      grads->bias[o] += g;
      double* gw = grads->weight.data().data() + o * in;
      for (std::size_t i = 0; i < in; ++i) gw[i] += g * input[i];
    }
    for (std::size_t i = 0; i < in; ++i) grad_input[i] += g * wt[o * in + i];
  }
  return grad_input;
}

void relu_inplace(Tensor& t) noexcept {
  for (double& v : t.data()) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(const Tensor& activated, Tensor& grad) noexcept {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(activated[i] > 0.0)) grad[i] = 0.0;
  }
}

Tensor global_max_pool(const Tensor& input, std::vector<std::size_t>* argmax) {
  require_rank3(input, "global_max_pool");
  const std::size_t c = input.dim(0), plane = input.dim(1) * input.dim(2);
  Tensor out({c});
  if (argmax) argmax->assign(c, 0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* p = input.data().data() + ch * plane;
    std::size_t best = 0;
    for (std::size_t i = 1; i < plane; ++i) {
      if (p[i] > p[best]) best = i;
    }
    out[ch] = p[best];
    if (argmax) (*argmax)[ch] = best;
  }
  return out;
}

Tensor global_max_pool_backward(const std::vector<std::size_t>& shape,
                                const std::vector<std::size_t>& argmax,
                                const Tensor& grad_output) {
  Tensor grad(shape);
  const std::size_t plane = shape[1] * shape[2];
  for (std::size_t ch = 0; ch < shape[0]; ++ch) grad[ch * plane + argmax[ch]] = grad_output[ch];
  return grad;
}

}  // namespace carelens::embed
