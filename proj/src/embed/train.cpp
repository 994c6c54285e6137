#include "carelens/embed/train.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "carelens/embed/triplet.hpp"

namespace carelens::embed {
namespace {

std::map<int, std::vector<std::size_t>> group_by_label(const LabeledImages& data) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.labels.size(); ++i) groups[data.labels[i]].push_back(i);
  return groups;
}

// Uniform index in [0, n) from the engine directly, so results do not depend on
// the standard library's distribution implementation.
std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[pick(rng, i)]);
}

}  // namespace

EmbeddingNet train(EmbeddingNet net, const LabeledImages& data, const TrainConfig& config,
                   TrainStats* stats) {
  if (data.images.size() != data.labels.size()) {
    throw TrainError("image and label counts differ");
  }
  const auto groups = group_by_label(data);
  if (groups.size() < 2) throw TrainError("training needs at least 2 identities");
  for (const auto& [label, idx] : groups) {
    if (idx.size() < 2) {
      throw TrainError("identity " + std::to_string(label) + " has fewer than 2 samples");
    }
  }
  if (config.batch_size < 4 || config.samples_per_identity < 2) {
    throw TrainError("batch needs at least 2 identities with 2 samples each");
  }
  if (!(config.learning_rate > 0.0)) throw TrainError("learning rate must be positive");
  net.validate();

  TrainStats local;
  TrainStats& st = stats ? *stats : local;
  st = TrainStats{};
  if (config.epochs == 0) return net;

  const std::size_t start = net.frozen_prefix_length();
  std::vector<Tensor> cached;
  cached.reserve(data.size());
  for (const auto& img : data.images) {
    if (start == 0) {
      forward_trace(net, img, 0);  // shape/finite check only
      cached.push_back(img);
    } else {
      cached.push_back(forward_prefix(net, img, start));
    }
  }

  std::vector<int> labels;
  std::vector<std::vector<std::size_t>> members;
  for (const auto& [label, idx] : groups) {
    labels.push_back(label);
    members.push_back(idx);
  }

  const std::size_t k = config.samples_per_identity;
  const std::size_t p = std::clamp<std::size_t>(config.batch_size / k, 2, labels.size());
  const std::size_t steps_per_epoch = (data.size() + config.batch_size - 1) / config.batch_size;

  std::mt19937_64 rng(config.seed);
  NetGradients grads = NetGradients::zeros_for(net);
  auto slots = bind_parameters(net, grads);

  std::vector<std::size_t> id_order(labels.size());
  for (std::size_t e = 0; e < config.epochs; ++e) {
    double epoch_loss = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      // P x K batch.
      for (std::size_t i = 0; i < id_order.size(); ++i) id_order[i] = i;
      shuffle(id_order, rng);
      std::vector<std::size_t> batch;
      std::vector<std::size_t> batch_group;
      for (std::size_t g = 0; g < p; ++g) {
        auto pool = members[id_order[g]];
        shuffle(pool, rng);
        const std::size_t take = std::min(k, pool.size());
        for (std::size_t j = 0; j < take; ++j) {
          batch.push_back(pool[j]);
          batch_group.push_back(g);
        }
      }

      std::vector<ForwardTrace> traces;
      std::vector<Embedding> emb;
      traces.reserve(batch.size());
      for (std::size_t idx : batch) {
        traces.push_back(forward_trace(net, cached[idx], start));
        emb.push_back(traces.back().embedding);
      }

      const std::size_t n = batch.size();
      std::vector<double> dist(n * n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) dist[i * n + j] = squared_distance(emb[i], emb[j]);
      }

      std::vector<TripletIndex> triplets;
      std::vector<std::size_t> negatives;
      for (std::size_t a = 0; a < n; ++a) {
        negatives.clear();
        for (std::size_t j = 0; j < n; ++j) {
          if (batch_group[j] != batch_group[a]) negatives.push_back(j);
        }
        for (std::size_t pos = 0; pos < n; ++pos) {
          if (pos == a || batch_group[pos] != batch_group[a]) continue;
          const double d_ap = dist[a * n + pos];
          std::size_t chosen = n;
          for (std::size_t neg : negatives) {
            const double d_an = dist[a * n + neg];
            if (d_an > d_ap && d_an < d_ap + net.margin_alpha &&
                (chosen == n || d_an < dist[a * n + chosen])) {
              chosen = neg;
            }
          }
          if (chosen == n) {
            chosen = negatives[pick(rng, negatives.size())];
            ++st.random_triplets;
          } else {
            ++st.semi_hard_triplets;
          }
          triplets.push_back({a, pos, chosen});
        }
      }

      std::vector<Embedding::Values> grad_emb(n, Embedding::Values{});
      epoch_loss += triplet_embedding_grads(emb, triplets, net.margin_alpha, grad_emb);

      grads.clear();
      for (std::size_t i = 0; i < n; ++i) {
        const auto& g = grad_emb[i];
        if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) continue;
        backward(net, traces[i], g, grads);
      }
      for (auto& slot : slots) {
        if (!slot.trainable) continue;
        auto w = slot.value->data();
        auto g = slot.grad->data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.learning_rate * g[i];
      }
      ++st.steps;
    }
    st.epoch_loss.push_back(epoch_loss / static_cast<double>(steps_per_epoch));
  }
  return net;
}

}  // namespace carelens::embed
