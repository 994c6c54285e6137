#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "carelens/embed/embedding.hpp"

namespace carelens::eval {

class EvalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested FAR cannot be resolved with this many different-identity pairs.
class FarUnreachable : public EvalError {
 public:
  FarUnreachable(double target, double floor)
      : EvalError("target FAR " + std::to_string(target) +
                  " is below the achievable resolution " + std::to_string(floor)),
        floor_(floor) {}
  double achievable_floor() const noexcept { return floor_; }

 private:
  double floor_;
};

struct LabeledPair {
  embed::Embedding a;
  embed::Embedding b;
  bool same = false;
  std::string bucket;  // optional condition tag, e.g. a yaw bucket
};

struct ScoredPair {
  double distance_sq = 0.0;
  bool same = false;
};

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;

  /// TP / (TP + FN)
  double val() const noexcept { return static_cast<double>(tp) / static_cast<double>(tp + fn); }
  /// FP / (FP + TN)
  double far() const noexcept { return static_cast<double>(fp) / static_cast<double>(fp + tn); }
  double accuracy() const noexcept {
    return static_cast<double>(tp + tn) / static_cast<double>(tp + fn + fp + tn);
  }
  bool operator==(const ConfusionCounts&) const = default;
};

struct OperatingPoint {
  double threshold_sq = 0.0;
  double val = 0.0;
  double far = 0.0;
  ConfusionCounts counts;
};

struct AccuracyPoint {
  double threshold_sq = 0.0;
  double accuracy = 0.0;
  ConfusionCounts counts;
};

std::vector<ScoredPair> score_pairs(std::span<const LabeledPair> pairs);

/// A pair is accepted iff distance_sq <= threshold_sq. Throws EvalError unless both
/// classes are present.
ConfusionCounts confusion(std::span<const ScoredPair> pairs, double threshold_sq);
ConfusionCounts confusion(std::span<const LabeledPair> pairs, double threshold_sq);

/// Ascending: one value just below the smallest distance (accept nothing), every
/// distinct distance, and the midpoint between each adjacent pair of distances.
std::vector<double> candidate_thresholds(std::span<const ScoredPair> pairs);

/// Largest candidate threshold whose FAR <= target_far. Throws FarUnreachable when
/// there are fewer than 1/target_far different-identity pairs.
OperatingPoint val_at_far(std::span<const ScoredPair> pairs, double target_far);

/// Candidate threshold maximizing (TP + TN) / total; ties go to the smallest threshold.
AccuracyPoint pair_accuracy(std::span<const ScoredPair> pairs);

}  // namespace carelens::eval
