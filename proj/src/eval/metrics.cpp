#include "carelens/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace carelens::eval {
namespace {

struct ClassTotals {
  std::size_t same = 0;
  std::size_t diff = 0;
};

ClassTotals require_both_classes(std::span<const ScoredPair> pairs) {
  ClassTotals t;
  for (const auto& p : pairs) {
    if (!std::isfinite(p.distance_sq)) throw EvalError("pair distance is not finite");
    (p.same ? t.same : t.diff) += 1;
  }
  if (t.same == 0 || t.diff == 0) {
    throw EvalError("need at least one same-identity and one different-identity pair");
  }
  return t;
}

// Cumulative counts after accepting every pair with distance <= distinct[i].
struct Step {
  double distance;
  std::size_t tp;
  std::size_t fp;
};

std::vector<Step> sweep(std::span<const ScoredPair> pairs) {
  std::vector<ScoredPair> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredPair& a, const ScoredPair& b) { return a.distance_sq < b.distance_sq; });
  std::vector<Step> steps;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    (sorted[i].same ? tp : fp) += 1;
    if (i + 1 == sorted.size() || sorted[i + 1].distance_sq != sorted[i].distance_sq) {
      steps.push_back({sorted[i].distance_sq, tp, fp});
    }
  }
  return steps;
}

double below(double d) { return std::nextafter(d, -std::numeric_limits<double>::infinity()); }

ConfusionCounts counts_at(std::size_t tp, std::size_t fp, const ClassTotals& t) {
  return {tp, t.same - tp, fp, t.diff - fp};
}

}  // namespace

std::vector<ScoredPair> score_pairs(std::span<const LabeledPair> pairs) {
  std::vector<ScoredPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({embed::squared_distance(p.a, p.b), p.same});
  return out;
}

ConfusionCounts confusion(std::span<const ScoredPair> pairs, double threshold_sq) {
  require_both_classes(pairs);
  ConfusionCounts c;
  for (const auto& p : pairs) {
    const bool accepted = p.distance_sq <= threshold_sq;
    if (p.same) {
      (accepted ? c.tp : c.fn) += 1;
    } else {
      (accepted ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

ConfusionCounts confusion(std::span<const LabeledPair> pairs, double threshold_sq) {
  const auto scored = score_pairs(pairs);
  return confusion(scored, threshold_sq);
}

std::vector<double> candidate_thresholds(std::span<const ScoredPair> pairs) {
  require_both_classes(pairs);
  const auto steps = sweep(pairs);
  std::vector<double> out;
  out.reserve(2 * steps.size());
  out.push_back(below(steps.front().distance));
  for (std::size_t i = 0; i < steps.size(); ++i) {
    out.push_back(steps[i].distance);
    if (i + 1 < steps.size()) out.push_back((steps[i].distance + steps[i + 1].distance) / 2.0);
  }
  return out;
}

OperatingPoint val_at_far(std::span<const ScoredPair> pairs, double target_far) {
  if (!(target_far > 0.0 && target_far <= 1.0)) throw EvalError("target FAR must lie in (0, 1]");
  const ClassTotals totals = require_both_classes(pairs);
  if (static_cast<double>(totals.diff) * target_far < 1.0) {
    throw FarUnreachable(target_far, 1.0 / static_cast<double>(totals.diff));
  }
  const auto steps = sweep(pairs);
  const auto diff = static_cast<double>(totals.diff);

  // FAR is non-decreasing along the sweep; find the last step that still qualifies.
  std::size_t last = steps.size();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (static_cast<double>(steps[i].fp) / diff <= target_far) {
      last = i;
    } else {
      break;
    }
  }

  OperatingPoint op;
  if (last == steps.size()) {
    op.threshold_sq = below(steps.front().distance);
    op.counts = counts_at(0, 0, totals);
  } else {
    // The midpoint up to the next distance keeps the same counts at a larger threshold.
    op.threshold_sq = last + 1 < steps.size()
                          ? (steps[last].distance + steps[last + 1].distance) / 2.0
                          : steps[last].distance;
    op.counts = counts_at(steps[last].tp, steps[last].fp, totals);
  }
  op.val = op.counts.val();
  op.far = op.counts.far();
  return op;
}

AccuracyPoint pair_accuracy(std::span<const ScoredPair> pairs) {
  const ClassTotals totals = require_both_classes(pairs);
  const auto steps = sweep(pairs);

  // Accept-nothing first, then each distinct distance (a midpoint never beats the
  // distance below it, which is smaller).
  AccuracyPoint best;
  best.threshold_sq = below(steps.front().distance);
  best.counts = counts_at(0, 0, totals);
  std::size_t best_correct = best.counts.tn;
  for (const auto& s : steps) {
    const ConfusionCounts c = counts_at(s.tp, s.fp, totals);
    if (c.tp + c.tn > best_correct) {
      best_correct = c.tp + c.tn;
      best.threshold_sq = s.distance;
      best.counts = c;
    }
  }
  best.accuracy = best.counts.accuracy();
  return best;
}

}  // namespace carelens::eval
