#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "carelens/embed/net.hpp"
#include "carelens/embed/tensor.hpp"

namespace carelens::embed {

struct LabeledImages {
  std::vector<Tensor> images;
  std::vector<int> labels;

  std::size_t size() const noexcept { return images.size(); }
};

struct TrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t samples_per_identity = 4;  // K in a P x K batch
  std::uint64_t seed = 1;
};

struct TrainStats {
  std::vector<double> epoch_loss;  // mean mined-triplet loss per epoch
  std::size_t steps = 0;
  std::size_t semi_hard_triplets = 0;
  std::size_t random_triplets = 0;
};

class TrainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Plain SGD on triplet loss with within-batch semi-hard negative mining.
/// Batches hold P identities x K samples; when no negative is semi-hard for an
/// (anchor, positive) pair a random in-batch negative is used. Frozen stem
/// layers are evaluated once per image and never updated. Same seed, same
/// weights.
EmbeddingNet train(EmbeddingNet net, const LabeledImages& data, const TrainConfig& config,
                   TrainStats* stats = nullptr);

}  // namespace carelens::embed
