#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "carelens/eval/metrics.hpp"
#include "carelens/eval/pair_file.hpp"
#include "carelens/eval/report.hpp"
#include "carelens/util/le_bytes.hpp"
#include "doctest.h"

using namespace carelens;
using eval::ScoredPair;

namespace {

std::vector<ScoredPair> four_pairs() {
  return {{0.1, true}, {0.3, true}, {0.2, false}, {0.9, false}};
}

std::vector<ScoredPair> random_scored(std::mt19937_64& rng, std::size_t n, bool coarse) {
  std::uniform_real_distribution<double> u(0.0, 4.0);
  std::uniform_int_distribution<int> grid(0, 8);
  std::vector<ScoredPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = coarse ? 0.5 * grid(rng) : u(rng);
    out.push_back({d, (rng() & 1) != 0});
  }
  out[0].same = true;
  out[1].same = false;
  return out;
}

// Brute force: every real threshold is equivalent to one of these.
std::vector<double> brute_thresholds(const std::vector<ScoredPair>& pairs) {
  std::vector<double> t{-1.0};
  for (const auto& p : pairs) t.push_back(p.distance_sq);
  std::sort(t.begin(), t.end());
  return t;
}

eval::ConfusionCounts brute_counts(const std::vector<ScoredPair>& pairs, double thr) {
  eval::ConfusionCounts c;
  for (const auto& p : pairs) {
    const bool acc = p.distance_sq <= thr;
    if (p.same) (acc ? c.tp : c.fn)++;
    else (acc ? c.fp : c.tn)++;
  }
  return c;
}

embed::Embedding unit_axis(std::size_t i, double w = 1.0) {
  embed::Embedding::Values v{};
  v[i] = w;
  v[(i + 1) % embed::kEmbeddingDim] = std::sqrt(1.0 - w * w);
  return embed::Embedding::normalized(v);
}

}  // namespace

TEST_CASE("confusion at 0.25 on the four-pair set") {
  const auto p = four_pairs();
  const auto c = eval::confusion(p, 0.25);
  CHECK(c == eval::ConfusionCounts{1, 1, 1, 1});
  CHECK(c.val() == doctest::Approx(0.5));
  CHECK(c.far() == doctest::Approx(0.5));
}

TEST_CASE("threshold extremes accept everything or nothing") {
  const auto p = four_pairs();
  auto all = eval::confusion(p, 4.01);
  CHECK(all.val() == 1.0);
  CHECK(all.far() == 1.0);
  auto none = eval::confusion(p, -0.01);
  CHECK(none.val() == 0.0);
  CHECK(none.far() == 0.0);
}

TEST_CASE("confusion needs both classes") {
  std::vector<ScoredPair> same{{0.1, true}};
  CHECK_THROWS_AS(eval::confusion(same, 1.0), eval::EvalError);
}

TEST_CASE("val_at_far on the four-pair set") {
  const auto op = eval::val_at_far(four_pairs(), 0.5);
  CHECK(op.threshold_sq == doctest::Approx(0.6));
  CHECK(op.val == 1.0);
  CHECK(op.far == 0.5);
}

TEST_CASE("val_at_far below resolution is unreachable") {
  try {
    eval::val_at_far(four_pairs(), 0.1);
    FAIL("expected FarUnreachable");
  } catch (const eval::FarUnreachable& e) {
    CHECK(e.achievable_floor() == doctest::Approx(0.5));
  }
}

TEST_CASE("val_at_far target range") {
  std::vector<ScoredPair> p{{0.1, true}, {0.2, false}};
  CHECK_THROWS_AS(eval::val_at_far(p, 0.0), eval::EvalError);
  CHECK_THROWS_AS(eval::val_at_far(p, 1.5), eval::EvalError);
  std::vector<ScoredPair> q{{0.5, true}, {0.1, false}};
  const auto op = eval::val_at_far(q, 1.0);
  CHECK(op.far == 1.0);
}

TEST_CASE("pair_accuracy on the four-pair set breaks ties toward the smaller threshold") {
  const auto a = eval::pair_accuracy(four_pairs());
  CHECK(a.accuracy == doctest::Approx(0.75));
  CHECK(a.threshold_sq == doctest::Approx(0.1));
}

TEST_CASE("pair_accuracy degenerate case is the majority class fraction") {
  // All impostors closer than all genuine pairs: best is to reject everything.
  std::vector<ScoredPair> p{{0.1, false}, {0.2, false}, {0.3, false}, {0.8, true}};
  const auto a = eval::pair_accuracy(p);
  CHECK(a.accuracy == doctest::Approx(0.75));
  CHECK(a.threshold_sq < 0.1);
}

TEST_CASE("pair_accuracy matches a brute-force sweep") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = random_scored(rng, 2 + rng() % 40, trial % 2 == 0);
    double best = -1.0;
    double best_thr = 0.0;
    for (double t : brute_thresholds(p)) {
      const double acc = brute_counts(p, t).accuracy();
      if (acc > best) {
        best = acc;
        best_thr = t;
      }
    }
    const auto a = eval::pair_accuracy(p);
    REQUIRE(a.accuracy == doctest::Approx(best).epsilon(1e-12));
    CHECK(a.counts == brute_counts(p, a.threshold_sq));
    // Same acceptance set as the brute-force optimum's smallest threshold.
    CHECK(brute_counts(p, a.threshold_sq) == brute_counts(p, best_thr));
  }
}

TEST_CASE("val_at_far matches a brute-force sweep") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = random_scored(rng, 2 + rng() % 60, trial % 2 == 0);
    std::size_t ndiff = 0;
    for (const auto& q : p) ndiff += q.same ? 0 : 1;
    const double target = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (static_cast<double>(ndiff) * target < 1.0) {
      CHECK_THROWS_AS(eval::val_at_far(p, target), eval::FarUnreachable);
      continue;
    }
    double best_val = -1.0;
    for (double t : brute_thresholds(p)) {
      const auto c = brute_counts(p, t);
      if (c.far() <= target) best_val = std::max(best_val, c.val());
    }
    const auto op = eval::val_at_far(p, target);
    CHECK(op.far <= target);
    CHECK(op.val == doctest::Approx(best_val));
    CHECK(op.counts == brute_counts(p, op.threshold_sq));
  }
}

TEST_CASE("VAL and FAR are monotone in the threshold") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_scored(rng, 30, trial % 2 == 0);
    const auto ts = eval::candidate_thresholds(p);
    CHECK(std::is_sorted(ts.begin(), ts.end()));
    double pv = -1.0, pf = -1.0;
    for (double t : ts) {
      const auto c = eval::confusion(p, t);
      CHECK(c.val() >= pv);
      CHECK(c.far() >= pf);
      pv = c.val();
      pf = c.far();
    }
    CHECK(pv == 1.0);
    CHECK(pf == 1.0);
    CHECK(eval::confusion(p, ts.front()).tp + eval::confusion(p, ts.front()).fp == 0);
  }
}

TEST_CASE("flipping every label swaps VAL and FAR") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_scored(rng, 25, false);
    const double thr = std::uniform_real_distribution<double>(0.0, 4.0)(rng);
    const auto c = eval::confusion(p, thr);
    for (auto& q : p) q.same = !q.same;
    const auto f = eval::confusion(p, thr);
    CHECK(f.val() == c.far());
    CHECK(f.far() == c.val());
  }
}

TEST_CASE("score_pairs uses squared distance") {
  std::vector<eval::LabeledPair> p{{unit_axis(0), unit_axis(1), false, {}},
                                   {unit_axis(3), unit_axis(3), true, {}}};
  const auto s = eval::score_pairs(p);
  CHECK(s[0].distance_sq == doctest::Approx(2.0));
  CHECK(s[1].distance_sq == doctest::Approx(0.0));
}

TEST_CASE("embedding file round trip and norm check") {
  const auto dir = std::filesystem::temp_directory_path() / "carelens_eval_test";
  std::filesystem::create_directories(dir);
  const auto e = unit_axis(5, 0.6);
  eval::write_embedding_file((dir / "a.emb").string(), e);
  const auto back = eval::read_embedding_file((dir / "a.emb").string());
  CHECK(embed::squared_distance(e, back) < 1e-12);

  util::ByteWriter w;
  for (std::size_t i = 0; i < embed::kEmbeddingDim; ++i) w.put_f32(i == 0 ? 1.01f : 0.0f);
  util::write_file_atomic((dir / "bad.emb").string(), w.bytes());
  CHECK_THROWS_AS(eval::read_embedding_file((dir / "bad.emb").string()), eval::EvalError);

  util::ByteWriter near;
  for (std::size_t i = 0; i < embed::kEmbeddingDim; ++i) near.put_f32(i == 0 ? 1.00005f : 0.0f);
  util::write_file_atomic((dir / "near.emb").string(), near.bytes());
  const auto n = eval::read_embedding_file((dir / "near.emb").string());
  CHECK(n[0] == doctest::Approx(1.0).epsilon(1e-12));

  util::ByteWriter shortw;
  shortw.put_f32(1.0f);
  util::write_file_atomic((dir / "short.emb").string(), shortw.bytes());
  CHECK_THROWS_AS(eval::read_embedding_file((dir / "short.emb").string()), eval::EvalError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pair file resolves relative paths and filters buckets") {
  const auto dir = std::filesystem::temp_directory_path() / "carelens_pairs_test";
  std::filesystem::create_directories(dir / "emb");
  eval::write_embedding_file((dir / "emb/a.emb").string(), unit_axis(0));
  eval::write_embedding_file((dir / "emb/b.emb").string(), unit_axis(1));
  {
    std::ofstream f(dir / "pairs.txt");
    f << "# comment\n\nemb/a.emb emb/a.emb 1 front\nemb/a.emb emb/b.emb 0 wide\nemb/b.emb emb/b.emb 1\n";
  }
  const auto all = eval::read_pair_file((dir / "pairs.txt").string());
  REQUIRE(all.size() == 3);
  CHECK(all[0].same);
  CHECK(all[0].bucket == "front");
  CHECK_FALSE(all[1].same);
  const auto wide = eval::read_pair_file((dir / "pairs.txt").string(), std::string("wide"));
  REQUIRE(wide.size() == 1);
  CHECK_FALSE(wide[0].same);
  {
    std::ofstream f(dir / "bad.txt");
    f << "emb/a.emb emb/b.emb 2\n";
  }
  CHECK_THROWS_AS(eval::read_pair_file((dir / "bad.txt").string()), eval::EvalError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("make_pairs keeps every genuine pair and caps impostors") {
  std::vector<embed::Embedding> e;
  std::vector<int> labels;
  for (int id = 0; id < 6; ++id) {
    for (int k = 0; k < 3; ++k) {
      e.push_back(unit_axis(static_cast<std::size_t>(id * 3 + k)));
      labels.push_back(id);
    }
  }
  const auto p = eval::make_pairs(e, labels, 40, 3);
  std::size_t same = 0;
  for (const auto& q : p) same += q.same ? 1 : 0;
  CHECK(same == 6 * 3);
  CHECK(p.size() - same == 40);
  const auto q = eval::make_pairs(e, labels, 40, 3);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(embed::squared_distance(p[i].a, q[i].a) == 0.0);
    CHECK(p[i].same == q[i].same);
  }
  const auto uncapped = eval::make_pairs(e, labels, 100000, 3);
  CHECK(uncapped.size() == 18 * 17 / 2);
}

TEST_CASE("report agrees with confusion and is deterministic") {
  std::mt19937_64 rng(9);
  std::vector<ScoredPair> p;
  std::normal_distribution<double> g(0.0, 0.15);
  for (int i = 0; i < 300; ++i) p.push_back({std::abs(0.4 + g(rng)), true});
  for (int i = 0; i < 1500; ++i) p.push_back({std::abs(1.4 + g(rng)), false});
  std::shuffle(p.begin(), p.end(), std::mt19937_64(1));
  const auto r = eval::evaluate_pairs(p, 10);
  CHECK(r.same_pairs == 300);
  CHECK(r.diff_pairs == 1500);
  CHECK(r.best.counts == eval::confusion(p, r.best.threshold_sq));
  for (const auto& t : r.far_targets) {
    REQUIRE(t.point);
    CHECK(t.point->far <= t.target);
    CHECK(t.point->counts == eval::confusion(p, t.point->threshold_sq));
  }
  REQUIRE(r.folds);
  CHECK(r.folds->accuracies.size() == 10);
  CHECK(r.folds->mean_accuracy > 0.9);
  const auto j1 = eval::to_json(r).dump();
  const auto j2 = eval::to_json(eval::evaluate_pairs(p, 10)).dump();
  CHECK(j1 == j2);
  CHECK(eval::to_json(r)["val_at_far_0.01"].get<double>() == r.at(0.01)->point->val);
  CHECK(eval::to_text(r).find("target_far") != std::string::npos);
}

TEST_CASE("report marks unresolvable FAR targets") {
  const auto r = eval::evaluate_pairs(four_pairs());
  const auto* t = r.at(0.001);
  REQUIRE(t);
  CHECK_FALSE(t->point);
  CHECK(t->achievable_floor == doctest::Approx(0.5));
  CHECK(eval::to_json(r)["val_at_far_0.001"].is_null());
}
