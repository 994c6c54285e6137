#include "carelens/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace carelens::eval {
namespace {

constexpr double kFarTargets[] = {0.001, 0.01, 0.05, 0.1};

nlohmann::ordered_json counts_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fn", c.fn}, {"fp", c.fp}, {"tn", c.tn}};
}

FoldSummary cross_validate(std::span<const ScoredPair> pairs, std::size_t k) {
  FoldSummary s;
  s.folds = k;
  const std::size_t n = pairs.size();
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t lo = f * n / k, hi = (f + 1) * n / k;
    std::vector<ScoredPair> train, test;
    for (std::size_t i = 0; i < n; ++i) (i >= lo && i < hi ? test : train).push_back(pairs[i]);
    const double thr = pair_accuracy(train).threshold_sq;
    std::size_t correct = 0;
    for (const auto& p : test) correct += ((p.distance_sq <= thr) == p.same) ? 1 : 0;
    s.accuracies.push_back(test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test.size()));
  }
  double sum = 0.0;
  for (double a : s.accuracies) sum += a;
  s.mean_accuracy = sum / static_cast<double>(k);
  double var = 0.0;
  for (double a : s.accuracies) var += (a - s.mean_accuracy) * (a - s.mean_accuracy);
  s.stddev_accuracy = std::sqrt(var / static_cast<double>(k));
  return s;
}

}  // namespace

const FarTarget* EvalReport::at(double target) const {
  for (const auto& t : far_targets) {
    if (t.target == target) return &t;
  }
  return nullptr;
}

std::vector<LabeledPair> make_pairs(std::span<const embed::Embedding> embeddings,
                                    std::span<const int> labels, std::size_t max_diff_pairs,
                                    std::uint64_t seed) {
  if (embeddings.size() != labels.size()) throw EvalError("embedding and label counts differ");
  std::vector<LabeledPair> same;
  std::vector<std::pair<std::size_t, std::size_t>> diff;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      if (labels[i] == labels[j]) {
        same.push_back({embeddings[i], embeddings[j], true, {}});
      } else {
        diff.emplace_back(i, j);
      }
    }
  }
  std::mt19937_64 rng(seed);
  if (diff.size() > max_diff_pairs) {
    for (std::size_t i = 0; i < max_diff_pairs; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (diff.size() - i));
      std::swap(diff[i], diff[j]);
    }
    diff.resize(max_diff_pairs);
  }
  std::vector<LabeledPair> out = std::move(same);
  for (const auto& [i, j] : diff) out.push_back({embeddings[i], embeddings[j], false, {}});
  // Interleave classes so contiguous folds see both.
  for (std::size_t i = out.size(); i > 1; --i) {
    std::swap(out[i - 1], out[static_cast<std::size_t>(rng() % i)]);
  }
  return out;
}

EvalReport evaluate_pairs(std::span<const ScoredPair> pairs, std::size_t folds) {
  EvalReport r;
  for (const auto& p : pairs) (p.same ? r.same_pairs : r.diff_pairs) += 1;
  r.best = pair_accuracy(pairs);
  for (double target : kFarTargets) {
    FarTarget t;
    t.target = target;
    try {
      t.point = val_at_far(pairs, target);
    } catch (const FarUnreachable& e) {
      t.achievable_floor = e.achievable_floor();
    }
    r.far_targets.push_back(t);
  }
  if (folds > 1) {
    if (folds > pairs.size()) throw EvalError("more folds than pairs");
    r.folds = cross_validate(pairs, folds);
  }
  return r;
}

EvalReport eval_report(const embed::EmbeddingNet& net, const embed::LabeledImages& data,
                       std::size_t max_diff_pairs, std::uint64_t seed, std::size_t folds) {
  std::vector<embed::Embedding> emb;
  emb.reserve(data.size());
  for (const auto& img : data.images) emb.push_back(embed::embed(net, img));
  const auto pairs = make_pairs(emb, data.labels, max_diff_pairs, seed);
  const auto scored = score_pairs(pairs);
  return evaluate_pairs(scored, folds);
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["same_pairs"] = report.same_pairs;
  j["diff_pairs"] = report.diff_pairs;
  j["accuracy"] = report.best.accuracy;
  j["best_threshold_sq"] = report.best.threshold_sq;
  j["best_counts"] = counts_json(report.best.counts);
  auto& ops = j["operating_points"] = nlohmann::ordered_json::array();
  for (const auto& t : report.far_targets) {
    nlohmann::ordered_json o;
    o["target_far"] = t.target;
    if (t.point) {
      o["threshold_sq"] = t.point->threshold_sq;
      o["val"] = t.point->val;
      o["far"] = t.point->far;
      o["counts"] = counts_json(t.point->counts);
    } else {
      o["unreachable"] = true;
      o["achievable_far_floor"] = t.achievable_floor;
    }
    ops.push_back(std::move(o));
  }
  auto val_at = [&](double target) -> nlohmann::ordered_json {
    const auto* t = report.at(target);
    if (!t || !t->point) return nullptr;
    return t->point->val;
  };
  j["val_at_far_0.001"] = val_at(0.001);
  j["val_at_far_0.01"] = val_at(0.01);
  if (report.folds) {
    j["folds"] = {{"k", report.folds->folds},
                  {"accuracies", report.folds->accuracies},
                  {"mean_accuracy", report.folds->mean_accuracy},
                  {"stddev_accuracy", report.folds->stddev_accuracy}};
  }
  return j;
}

std::string to_text(const EvalReport& report) {
  std::ostringstream os;
  char line[200];
  std::snprintf(line, sizeof line, "pairs: %zu same / %zu different\n", report.same_pairs,
                report.diff_pairs);
  os << line;
  std::snprintf(line, sizeof line, "accuracy: %.5f at threshold_sq %.6f\n", report.best.accuracy,
                report.best.threshold_sq);
  os << line;
  std::snprintf(line, sizeof line, "%12s %14s %10s %10s %8s %8s %8s %8s\n", "target_far",
                "threshold_sq", "VAL", "FAR", "TP", "FN", "FP", "TN");
  os << line;
  for (const auto& t : report.far_targets) {
    if (t.point) {
      const auto& p = *t.point;
      std::snprintf(line, sizeof line, "%12.5f %14.6f %10.5f %10.5f %8zu %8zu %8zu %8zu\n",
                    t.target, p.threshold_sq, p.val, p.far, p.counts.tp, p.counts.fn, p.counts.fp,
                    p.counts.tn);
    } else {
      std::snprintf(line, sizeof line, "%12.5f %14s (needs FAR resolution %.5f)\n", t.target, "-",
                    t.achievable_floor);
    }
    os << line;
  }
  if (report.folds) {
    std::snprintf(line, sizeof line, "%zu-fold accuracy: %.5f +- %.5f\n", report.folds->folds,
                  report.folds->mean_accuracy, report.folds->stddev_accuracy);
    os << line;
  }
  return os.str();
}

}  // namespace carelens::eval
