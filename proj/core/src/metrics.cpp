#include "segpoison/metrics.hpp"

#include <numeric>
#include <string>

#include "segpoison/errors.hpp"

namespace segpoison {

namespace {

void check_shapes(const LabelMask& a, const LabelMask& b, const char* what) {
  if (!a.same_shape(b) || a.data.size() != b.data.size()) {
    throw InputError(std::string(what) + ": masks differ in shape (" + std::to_string(a.width) +
                     "x" + std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                     std::to_string(b.height) + ")");
  }
}

std::optional<double> percent(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int k) : k_(k) {
  if (k < 1 || k > LabelMask::kMaxClasses) {
    throw ConfigError("confusion matrix size " + std::to_string(k) + " outside [1, 255]");
  }
  counts_.assign(static_cast<std::size_t>(k) * k, 0);
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (int c = 0; c < k_; ++c) t += count(c, c);
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(int truth) const {
  std::uint64_t s = 0;
  for (int p = 0; p < k_; ++p) s += count(truth, p);
  return s;
}

std::uint64_t ConfusionMatrix::column_sum(int predicted) const {
  std::uint64_t s = 0;
  for (int g = 0; g < k_; ++g) s += count(g, predicted);
  return s;
}

void ConfusionMatrix::add(int truth, int predicted, std::uint64_t n) {
  if (truth < 0 || truth >= k_ || predicted < 0 || predicted >= k_) {
    throw RangeError("confusion entry (" + std::to_string(truth) + ", " +
                     std::to_string(predicted) + ") outside [0, " + std::to_string(k_) + ")");
  }
  counts_[static_cast<std::size_t>(truth) * k_ + predicted] += n;
}

void ConfusionMatrix::accumulate(const LabelMask& predicted, const LabelMask& truth) {
  check_shapes(predicted, truth, "accumulate");
  // Validate first so a bad mask leaves the matrix untouched.
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    const std::uint8_t g = truth.data[i];
    if (g == LabelMask::kIgnore) continue;
    if (g >= k_ || predicted.data[i] >= k_) {
      throw RangeError("pixel " + std::to_string(i) + " has class outside [0, " +
                       std::to_string(k_) + ")");
    }
  }
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    const std::uint8_t g = truth.data[i];
    if (g == LabelMask::kIgnore) continue;
    ++counts_[static_cast<std::size_t>(g) * k_ + predicted.data[i]];
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw InputError("cannot merge confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

void AsrAccumulator::accumulate(const LabelMask& predicted, const LabelMask& truth,
                                const LabelMask& target) {
  check_shapes(predicted, truth, "attack success rate");
  check_shapes(target, truth, "attack success rate");
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    const std::uint8_t g = truth.data[i];
    const std::uint8_t t = target.data[i];
    if (g == LabelMask::kIgnore || t == LabelMask::kIgnore || t == g) continue;
    ++qualifying;
    if (predicted.data[i] == t) ++hits;
  }
}

AsrAccumulator& AsrAccumulator::operator+=(const AsrAccumulator& other) {
  qualifying += other.qualifying;
  hits += other.hits;
  return *this;
}

std::optional<double> pixel_accuracy(const ConfusionMatrix& cm) {
  return percent(cm.trace(), cm.total());
}

MeanIou mean_iou(const ConfusionMatrix& cm) {
  MeanIou out;
  out.per_class.resize(cm.k());
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < cm.k(); ++c) {
    const std::uint64_t inter = cm.count(c, c);
    const std::uint64_t uni = cm.row_sum(c) + cm.column_sum(c) - inter;
    out.per_class[c] = percent(inter, uni);
    if (out.per_class[c]) {
      sum += *out.per_class[c];
      ++present;
    }
  }
  if (present > 0) out.mean = sum / present;
  return out;
}

std::optional<double> attack_success_rate(const AsrAccumulator& acc) {
  return percent(acc.hits, acc.qualifying);
}

MetricsReport evaluate(int k, std::span<const LabelMask> benign_preds,
                       std::span<const LabelMask> benign_truth,
                       std::span<const LabelMask> attacked_preds,
                       std::span<const LabelMask> attacked_truth,
                       std::span<const LabelMask> attacked_targets) {
  if (benign_preds.size() != benign_truth.size()) {
    throw InputError("benign predictions (" + std::to_string(benign_preds.size()) +
                     ") and ground truth (" + std::to_string(benign_truth.size()) +
                     ") are not aligned");
  }
  if (attacked_preds.size() != attacked_truth.size() ||
      attacked_preds.size() != attacked_targets.size()) {
    throw InputError("attacked predictions, ground truth and targets are not aligned");
  }

  ConfusionMatrix benign(k);
  for (std::size_t i = 0; i < benign_preds.size(); ++i) {
    benign.accumulate(benign_preds[i], benign_truth[i]);
  }
  ConfusionMatrix attacked(k);
  AsrAccumulator asr;
  for (std::size_t i = 0; i < attacked_preds.size(); ++i) {
    attacked.accumulate(attacked_preds[i], attacked_targets[i]);
    asr.accumulate(attacked_preds[i], attacked_truth[i], attacked_targets[i]);
  }

  MetricsReport r;
  const MeanIou miou_b = mean_iou(benign);
  const MeanIou miou_a = mean_iou(attacked);
  r.miou_b = miou_b.mean;
  r.pa_b = pixel_accuracy(benign);
  r.miou_a = miou_a.mean;
  r.pa_a = pixel_accuracy(attacked);
  r.asr = attack_success_rate(asr);
  r.per_class_iou_b = miou_b.per_class;
  r.per_class_iou_a = miou_a.per_class;
  r.counts.benign_scored = benign.total();
  r.counts.benign_correct = benign.trace();
  r.counts.attacked_scored = attacked.total();
  r.counts.attacked_correct = attacked.trace();
  r.counts.asr_qualifying = asr.qualifying;
  r.counts.asr_hits = asr.hits;
  r.benign_samples = benign_preds.size();
  r.attacked_samples = attacked_preds.size();
  return r;
}

}  // namespace segpoison
