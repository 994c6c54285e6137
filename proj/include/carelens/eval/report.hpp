#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carelens/embed/net.hpp"
#include "carelens/embed/train.hpp"
#include "carelens/eval/metrics.hpp"
#include "json.hpp"

namespace carelens::eval {

/// VAL at a fixed FAR target, or the reason it could not be resolved.
struct FarTarget {
  double target = 0.0;
  std::optional<OperatingPoint> point;
  double achievable_floor = 0.0;  // set when point is empty
};

struct FoldSummary {
  std::size_t folds = 0;
  std::vector<double> accuracies;
  double mean_accuracy = 0.0;
  double stddev_accuracy = 0.0;
};

struct EvalReport {
  std::size_t same_pairs = 0;
  std::size_t diff_pairs = 0;
  AccuracyPoint best;
  std::vector<FarTarget> far_targets;  // 0.001, 0.01, 0.05, 0.1
  std::optional<FoldSummary> folds;

  const FarTarget* at(double target) const;
};

/// Every same-identity pair plus up to `max_diff_pairs` different-identity pairs
/// (all of them when there are fewer), drawn with a seeded shuffle.
std::vector<LabeledPair> make_pairs(std::span<const embed::Embedding> embeddings,
                                    std::span<const int> labels, std::size_t max_diff_pairs,
                                    std::uint64_t seed);

/// `folds` > 1 adds LFW-style cross-validated accuracy: the threshold is picked on
/// the other folds and applied to the held-out one.
EvalReport evaluate_pairs(std::span<const ScoredPair> pairs, std::size_t folds = 0);

EvalReport eval_report(const embed::EmbeddingNet& net, const embed::LabeledImages& data,
                       std::size_t max_diff_pairs, std::uint64_t seed, std::size_t folds = 0);

nlohmann::ordered_json to_json(const EvalReport& report);
std::string to_text(const EvalReport& report);

}  // namespace carelens::eval
