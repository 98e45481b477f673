#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "segpoison/types.hpp"

namespace segpoison {

// counts[g][p] = scored pixels with ground truth g predicted as p.
// Accumulators merge by element-wise addition, so shards can be filled
// independently and combined in any order.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int k);

  int k() const { return k_; }
  std::uint64_t count(int truth, int predicted) const {
    return counts_[static_cast<std::size_t>(truth) * k_ + predicted];
  }
  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(int truth) const;
  std::uint64_t column_sum(int predicted) const;

  // Pixels whose ground truth is the ignore sentinel are skipped. Throws
  // InputError on shape mismatch and RangeError on ids >= k (a prediction
  // of the sentinel on a scored pixel counts as out of range).
  void accumulate(const LabelMask& predicted, const LabelMask& truth);
  void add(int truth, int predicted, std::uint64_t n = 1);

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int k_;
  std::vector<std::uint64_t> counts_;
};

// Pixels whose attack target differs from a non-ignore ground truth, and how
// many of them were predicted as the target.
struct AsrAccumulator {
  std::uint64_t qualifying = 0;
  std::uint64_t hits = 0;

  void accumulate(const LabelMask& predicted, const LabelMask& truth, const LabelMask& target);
  AsrAccumulator& operator+=(const AsrAccumulator& other);
  bool operator==(const AsrAccumulator&) const = default;
};

// Percentages are std::nullopt ("absent") when their denominator is zero.
std::optional<double> pixel_accuracy(const ConfusionMatrix& cm);

struct MeanIou {
  std::optional<double> mean;
  // Absent for classes with an empty union; those are left out of the mean.
  std::vector<std::optional<double>> per_class;
};

MeanIou mean_iou(const ConfusionMatrix& cm);

std::optional<double> attack_success_rate(const AsrAccumulator& acc);

struct PixelCounts {
  std::uint64_t benign_scored = 0;
  std::uint64_t attacked_scored = 0;
  std::uint64_t asr_qualifying = 0;
  std::uint64_t asr_hits = 0;
  std::uint64_t benign_correct = 0;
  std::uint64_t attacked_correct = 0;
};

struct MetricsReport {
  std::optional<double> miou_b;
  std::optional<double> pa_b;
  std::optional<double> miou_a;
  std::optional<double> pa_a;
  std::optional<double> asr;
  std::vector<std::optional<double>> per_class_iou_b;
  std::vector<std::optional<double>> per_class_iou_a;
  PixelCounts counts;
  std::size_t benign_samples = 0;
  std::size_t attacked_samples = 0;
};

// mIOU-B / PA-B score benign predictions against ground truth; mIOU-A / PA-A
// score attacked predictions against attack targets; ASR counts attacked
// pixels whose target differs from ground truth. Throws InputError when the
// lists are not aligned.
MetricsReport evaluate(int k, std::span<const LabelMask> benign_preds,
                       std::span<const LabelMask> benign_truth,
                       std::span<const LabelMask> attacked_preds,
                       std::span<const LabelMask> attacked_truth,
                       std::span<const LabelMask> attacked_targets);

}  // namespace segpoison
