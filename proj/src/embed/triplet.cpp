#include "carelens/embed/triplet.hpp"

#include <stdexcept>

namespace carelens::embed {

double triplet_loss(const Embedding& anchor, const Embedding& positive, const Embedding& negative,
                    double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("triplet margin must be positive");
  const double v = squared_distance(anchor, positive) - squared_distance(anchor, negative) + alpha;
  return v > 0.0 ? v : 0.0;
}

double triplet_embedding_grads(std::span<const Embedding> embeddings,
                               std::span<const TripletIndex> triplets, double alpha,
                               std::vector<Embedding::Values>& grad_embeddings) {
  if (triplets.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(triplets.size());
  double total = 0.0;
  for (const auto& t : triplets) {
    const Embedding& a = embeddings[t.anchor];
    const Embedding& p = embeddings[t.positive];
    const Embedding& n = embeddings[t.negative];
    const double loss = triplet_loss(a, p, n, alpha);
    total += loss;
    if (loss <= 0.0) continue;
    auto& ga = grad_embeddings[t.anchor];
    auto& gp = grad_embeddings[t.positive];
    auto& gn = grad_embeddings[t.negative];
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
      ga[i] += scale * 2.0 * (n[i] - p[i]);
      gp[i] += scale * 2.0 * (p[i] - a[i]);
      gn[i] += scale * 2.0 * (a[i] - n[i]);
    }
  }
  return total * scale;
}

double triplet_objective(const EmbeddingNet& net, std::span<const Tensor> inputs,
                         std::size_t start_block, std::span<const TripletIndex> triplets,
                         NetGradients* grads) {
  std::vector<ForwardTrace> traces;
  std::vector<Embedding> embeddings;
  traces.reserve(inputs.size());
  embeddings.reserve(inputs.size());
  for (const auto& x : inputs) {
    traces.push_back(forward_trace(net, x, start_block));
    embeddings.push_back(traces.back().embedding);
  }
  std::vector<Embedding::Values> grad_emb(inputs.size(), Embedding::Values{});
  const double loss = triplet_embedding_grads(embeddings, triplets, net.margin_alpha, grad_emb);
  if (grads) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      backward(net, traces[i], grad_emb[i], *grads);
    }
  }
  return loss;
}

}  // namespace carelens::embed
