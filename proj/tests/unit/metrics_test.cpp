#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "segpoison/attack.hpp"
#include "segpoison/errors.hpp"
#include "segpoison/metrics.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

namespace segpoison {
namespace {

using testing::Gen;

// Masks whose confusion counts equal `counts` (row = truth, col = pred).
std::pair<LabelMask, LabelMask> masks_from_counts(const std::vector<std::vector<int>>& counts) {
  std::vector<std::uint8_t> pred, truth;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    for (std::size_t p = 0; p < counts[g].size(); ++p) {
      for (int n = 0; n < counts[g][p]; ++n) {
        truth.push_back(static_cast<std::uint8_t>(g));
        pred.push_back(static_cast<std::uint8_t>(p));
      }
    }
  }
  const int w = static_cast<int>(pred.size());
  return {LabelMask(w, 1, pred), LabelMask(w, 1, truth)};
}

TEST(ConfusionMatrix, DiagonalAccumulation) {
  ConfusionMatrix cm(3);
  cm.accumulate(LabelMask(2, 2, 2), LabelMask(2, 2, 2));
  EXPECT_EQ(cm.count(2, 2), 4u);
  EXPECT_EQ(cm.total(), 4u);
}

TEST(ConfusionMatrix, AllIgnoreTruthLeavesMatrixUnchanged) {
  ConfusionMatrix cm(3);
  cm.accumulate(LabelMask(3, 3, 1), LabelMask(3, 3, LabelMask::kIgnore));
  EXPECT_EQ(cm, ConfusionMatrix(3));
}

TEST(ConfusionMatrix, OffDiagonal) {
  ConfusionMatrix cm(2);
  cm.accumulate(LabelMask(2, 1, {0, 1}), LabelMask(2, 1, {1, 1}));
  EXPECT_EQ(cm.count(1, 0), 1u);
  EXPECT_EQ(cm.count(1, 1), 1u);
  EXPECT_EQ(cm.total(), 2u);
}

TEST(ConfusionMatrix, Errors) {
  ConfusionMatrix cm(2);
  EXPECT_THROW(cm.accumulate(LabelMask(2, 2), LabelMask(2, 1)), InputError);
  EXPECT_THROW(cm.accumulate(LabelMask(2, 1, {0, 2}), LabelMask(2, 1, {0, 1})), RangeError);
  EXPECT_THROW(cm.accumulate(LabelMask(2, 1, {0, 0}), LabelMask(2, 1, {0, 5})), RangeError);
  EXPECT_THROW(
      cm.accumulate(LabelMask(2, 1, {0, LabelMask::kIgnore}), LabelMask(2, 1, {0, 1})),
      RangeError);
  EXPECT_EQ(cm.total(), 0u);  // failed calls leave no partial counts
}

TEST(PixelAccuracy, PerfectIsHundred) {
  Gen gen(1);
  ConfusionMatrix cm(4);
  const LabelMask y = gen.mask(10, 10, 4, 0.1);
  cm.accumulate(y, y);
  EXPECT_DOUBLE_EQ(*pixel_accuracy(cm), 100.0);
}

TEST(PixelAccuracy, HandCountedExample) {
  const auto [pred, truth] = masks_from_counts({{3, 1}, {2, 2}});
  // Oracle: 5 of the 8 pixels agree.
  ASSERT_DOUBLE_EQ(*testing::brute_pa({pred}, {truth}), 62.5);
  ConfusionMatrix cm(2);
  cm.accumulate(pred, truth);
  EXPECT_DOUBLE_EQ(*pixel_accuracy(cm), 62.5);
}

TEST(PixelAccuracy, UniformRandomPredictionsNearChance) {
  Gen gen(2);
  for (int k : {2, 5, 8}) {
    ConfusionMatrix cm(k);
    cm.accumulate(gen.mask(400, 250, k), gen.mask(400, 250, k));  // 10^5 pixels
    EXPECT_NEAR(*pixel_accuracy(cm), 100.0 / k, 3.0);
  }
}

TEST(PixelAccuracy, EmptyIsAbsent) { EXPECT_FALSE(pixel_accuracy(ConfusionMatrix(3)).has_value()); }

TEST(MeanIou, PerfectTwoClasses) {
  ConfusionMatrix cm(2);
  cm.accumulate(LabelMask(2, 1, {0, 1}), LabelMask(2, 1, {0, 1}));
  const MeanIou m = mean_iou(cm);
  EXPECT_DOUBLE_EQ(*m.mean, 100.0);
  EXPECT_DOUBLE_EQ(*m.per_class[0], 100.0);
  EXPECT_DOUBLE_EQ(*m.per_class[1], 100.0);
}

TEST(MeanIou, HandCountedExample) {
  const auto [pred, truth] = masks_from_counts({{2, 2}, {0, 4}});
  // Oracle: IoU0 = 2/4, IoU1 = 4/6.
  const double expected = (50.0 + 400.0 / 6.0) / 2.0;
  ASSERT_NEAR(*testing::brute_miou({pred}, {truth}, 2), expected, 1e-12);
  ConfusionMatrix cm(2);
  cm.accumulate(pred, truth);
  const MeanIou m = mean_iou(cm);
  EXPECT_DOUBLE_EQ(*m.per_class[0], 50.0);
  EXPECT_NEAR(*m.per_class[1], 66.6667, 1e-4);
  EXPECT_NEAR(*m.mean, 58.3333, 1e-4);
}

TEST(MeanIou, AbsentClassesExcluded) {
  ConfusionMatrix cm(4);
  cm.add(0, 0, 3);
  cm.add(0, 2, 1);
  const MeanIou m = mean_iou(cm);
  EXPECT_FALSE(m.per_class[1].has_value());
  EXPECT_FALSE(m.per_class[3].has_value());
  EXPECT_DOUBLE_EQ(*m.per_class[0], 75.0);
  EXPECT_DOUBLE_EQ(*m.per_class[2], 0.0);
  EXPECT_DOUBLE_EQ(*m.mean, 37.5);
}

TEST(MeanIou, SingleClassDegenerate) {
  ConfusionMatrix cm(3);
  cm.add(0, 0, 9);
  EXPECT_DOUBLE_EQ(*mean_iou(cm).mean, *mean_iou(cm).per_class[0]);
  EXPECT_FALSE(mean_iou(ConfusionMatrix(3)).mean.has_value());
}

TEST(AttackSuccessRate, PerfectAttack) {
  Gen gen(3);
  const LabelMask gt = gen.mask(6, 6, 4);
  const LabelMask target = apply_target_transform(gt, make_attack_matrix(4, {{1, 2}}));
  AsrAccumulator acc;
  acc.accumulate(target, gt, target);
  EXPECT_GT(acc.qualifying, 0u);
  EXPECT_DOUBLE_EQ(*attack_success_rate(acc), 100.0);
}

TEST(AttackSuccessRate, BenignModelScoresZero) {
  Gen gen(4);
  const LabelMask gt = gen.mask(6, 6, 6);
  const LabelMask target = apply_target_transform(gt, make_attack_matrix(6, {{3, 5}}));
  AsrAccumulator acc;
  acc.accumulate(gt, gt, target);
  EXPECT_DOUBLE_EQ(*attack_success_rate(acc), 0.0);
}

TEST(AttackSuccessRate, HandCountedTwoByTwo) {
  const LabelMask gt(2, 2, {0, 1, 1, 2});
  const LabelMask target(2, 2, {0, 3, 1, 3});  // differs at pixels 1 and 3
  const LabelMask pred(2, 2, {0, 3, 1, 2});    // hits pixel 1 only
  ASSERT_DOUBLE_EQ(*testing::brute_asr({pred}, {gt}, {target}), 50.0);
  AsrAccumulator acc;
  acc.accumulate(pred, gt, target);
  EXPECT_EQ(acc.qualifying, 2u);
  EXPECT_EQ(acc.hits, 1u);
  EXPECT_DOUBLE_EQ(*attack_success_rate(acc), 50.0);
}

TEST(AttackSuccessRate, NoQualifyingPixelsIsAbsentNotZero) {
  AsrAccumulator acc;
  acc.accumulate(LabelMask(2, 2, 1), LabelMask(2, 2, 0), LabelMask(2, 2, 0));
  EXPECT_FALSE(attack_success_rate(acc).has_value());
}

TEST(Evaluate, PerfectAttackFixedPoint) {
  Gen gen(5);
  std::vector<LabelMask> gt, targets;
  for (int i = 0; i < 4; ++i) {
    gt.push_back(gen.mask(5, 5, 4, 0.1));
    targets.push_back(apply_target_transform(gt.back(), make_attack_matrix(4, {{0, 3}})));
  }
  const MetricsReport r = evaluate(4, gt, gt, targets, gt, targets);
  EXPECT_DOUBLE_EQ(*r.miou_a, 100.0);
  EXPECT_DOUBLE_EQ(*r.pa_a, 100.0);
  EXPECT_DOUBLE_EQ(*r.asr, 100.0);
  EXPECT_DOUBLE_EQ(*r.pa_b, 100.0);
}

TEST(Evaluate, IdentityAttackHasAbsentAsr) {
  Gen gen(6);
  std::vector<LabelMask> gt, preds;
  for (int i = 0; i < 3; ++i) {
    gt.push_back(gen.mask(5, 5, 3));
    preds.push_back(gen.mask(5, 5, 3));
  }
  const MetricsReport r = evaluate(3, preds, gt, preds, gt, gt);
  EXPECT_FALSE(r.asr.has_value());
  EXPECT_EQ(r.counts.asr_qualifying, 0u);
  EXPECT_EQ(*r.pa_a, *r.pa_b);
}

TEST(Evaluate, AllToOneWithoutTargetInTruthGivesAsrEqualPaA) {
  Gen gen(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = gen.integer(2, 6);
    const int w = gen.integer(0, k - 1);
    std::vector<LabelMask> gt, targets, preds;
    for (int s = 0; s < gen.integer(1, 4); ++s) {
      LabelMask y = gen.mask(gen.integer(1, 6), gen.integer(1, 6), k, 0.1);
      for (auto& v : y.data) {
        if (v == w) v = static_cast<std::uint8_t>((w + 1) % k);
      }
      targets.push_back(apply_target_transform(y, make_all_to_one_matrix(k, w)));
      preds.push_back(gen.mask(y.width, y.height, k));
      gt.push_back(std::move(y));
    }
    const MetricsReport r = evaluate(k, preds, gt, preds, gt, targets);
    if (!r.asr) continue;  // all-ignore draw
    EXPECT_DOUBLE_EQ(*r.asr, *r.pa_a);
    EXPECT_EQ(r.counts.asr_hits, r.counts.attacked_correct);
  }
}

TEST(Evaluate, MisalignedListsAreInputError) {
  std::vector<LabelMask> one{LabelMask(2, 2)};
  std::vector<LabelMask> two{LabelMask(2, 2), LabelMask(2, 2)};
  EXPECT_THROW(evaluate(2, one, two, one, one, one), InputError);
  EXPECT_THROW(evaluate(2, one, one, one, two, one), InputError);
  EXPECT_THROW(evaluate(2, one, one, one, one, two), InputError);
}

// Brute-force equivalence and bounds on random small problems.
TEST(Evaluate, MatchesBruteForceRecount) {
  Gen gen(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = gen.integer(1, 5);
    const int n = gen.integer(1, 3);
    std::vector<LabelMask> bp, bg, ap, ag, at;
    for (int s = 0; s < n; ++s) {
      const int w = gen.integer(1, 8), h = gen.integer(1, 8);
      bg.push_back(gen.mask(w, h, k, 0.1));
      bp.push_back(gen.mask(w, h, k));
      ag.push_back(gen.mask(w, h, k, 0.1));
      at.push_back(apply_target_transform(ag.back(), gen.matrix(k)));
      ap.push_back(gen.mask(w, h, k));
    }
    const MetricsReport r = evaluate(k, bp, bg, ap, ag, at);
    const auto b = testing::brute_metrics(k, bp, bg, ap, ag, at);
    auto same = [](const std::optional<double>& x, const std::optional<double>& y) {
      if (x.has_value() != y.has_value()) return false;
      return !x || std::abs(*x - *y) <= 1e-9;
    };
    EXPECT_TRUE(same(r.miou_b, b.miou_b));
    EXPECT_TRUE(same(r.pa_b, b.pa_b));
    EXPECT_TRUE(same(r.miou_a, b.miou_a));
    EXPECT_TRUE(same(r.pa_a, b.pa_a));
    EXPECT_TRUE(same(r.asr, b.asr));
    for (const auto& v : {r.miou_b, r.pa_b, r.miou_a, r.pa_a, r.asr}) {
      if (v) {
        EXPECT_GE(*v, 0.0);
        EXPECT_LE(*v, 100.0);
      }
    }
    if (r.pa_b) EXPECT_EQ(*r.pa_b == 100.0, r.counts.benign_correct == r.counts.benign_scored);
  }
}

TEST(Accumulators, MergeIsOrderAndPartitionIndependent) {
  Gen gen(9);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = gen.integer(1, 6);
    std::vector<LabelMask> preds, truth, targets;
    for (int s = 0; s < 12; ++s) {
      truth.push_back(gen.mask(4, 3, k, 0.1));
      preds.push_back(gen.mask(4, 3, k));
      targets.push_back(apply_target_transform(truth.back(), gen.matrix(k)));
    }
    ConfusionMatrix whole(k);
    AsrAccumulator whole_asr;
    for (int s = 0; s < 12; ++s) {
      whole.accumulate(preds[s], truth[s]);
      whole_asr.accumulate(preds[s], truth[s], targets[s]);
    }
    const int shards = gen.integer(1, 5);
    std::vector<ConfusionMatrix> cms(shards, ConfusionMatrix(k));
    std::vector<AsrAccumulator> asrs(shards);
    for (int s = 0; s < 12; ++s) {
      const int shard = gen.integer(0, shards - 1);
      cms[shard].accumulate(preds[s], truth[s]);
      asrs[shard].accumulate(preds[s], truth[s], targets[s]);
    }
    std::vector<int> order(shards);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), gen.engine());
    ConfusionMatrix merged(k);
    AsrAccumulator merged_asr;
    for (int i : order) {
      merged += cms[i];
      merged_asr += asrs[i];
    }
    EXPECT_EQ(merged, whole);
    EXPECT_EQ(merged_asr, whole_asr);
  }
}

}  // namespace
}  // namespace segpoison
