#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "carelens/embed/embedding.hpp"
#include "carelens/embed/net.hpp"

namespace carelens::embed {

/// max(0, |a-p|^2 - |a-n|^2 + alpha). Throws std::invalid_argument when alpha <= 0.
double triplet_loss(const Embedding& anchor, const Embedding& positive, const Embedding& negative,
                    double alpha);

struct TripletIndex {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;
};

/// Mean loss over `triplets`; adds d(mean loss)/d(embedding) into `grad_embeddings`
/// (one 128-vector per embedding, sized by the caller).
double triplet_embedding_grads(std::span<const Embedding> embeddings,
                               std::span<const TripletIndex> triplets, double alpha,
                               std::vector<Embedding::Values>& grad_embeddings);

/// Forward every input, evaluate the mean triplet loss and, when `grads` is set,
/// accumulate its parameter gradient. Inputs are activations entering `start_block`.
double triplet_objective(const EmbeddingNet& net, std::span<const Tensor> inputs,
                         std::size_t start_block, std::span<const TripletIndex> triplets,
                         NetGradients* grads);

}  // namespace carelens::embed
