#pragma once

#include <cstdint>
#include <span>
#include <vector>
#include <nlohmann/json.hpp>

#include "segpoison/types.hpp"

namespace segpoison {

// Which inputs a pixel's classifier sees: the (2r+1)^2 RGB patch around it,
// optionally nine image-level pooled values (per-channel mean, min, max over
// the whole image), and a trailing constant 1 for the bias.
struct FeatureLayout {
  int patch_radius = 2;
  bool global_context = true;

  bool operator==(const FeatureLayout&) const = default;
};

inline constexpr int kContextFeatures = 9;

// Both counts include the bias.
int patch_feature_count(int patch_radius);
int feature_count(const FeatureLayout& layout);

// Patch-only features of pixel (row, col): RGB values scaled to [0, 1],
// replicate-padded at the borders, bias 1 appended. Length 3(2r+1)^2 + 1.
std::vector<double> extract_features(const Image& image, int row, int col, int patch_radius);

// Per-image feature source. Pooled context is computed once at construction.
class FeatureExtractor {
 public:
  FeatureExtractor(const Image& image, FeatureLayout layout);

  int size() const { return feature_count(layout_); }
  // Writes feature_count(layout) values into out.
  void fill(int row, int col, std::span<double> out) const;

 private:
  const Image* image_;
  FeatureLayout layout_;
  std::vector<double> context_;
};

struct TrainConfig {
  int epochs = 12;
  double learning_rate = 0.5;
  int batch_size = 16;
  double pixel_sample_rate = 0.25;
  std::uint64_t seed = 0;

  bool operator==(const TrainConfig&) const = default;
};

// Throws ConfigError unless epochs >= 0, lr > 0, batch >= 1, rate in (0, 1].
void validate_train_config(const TrainConfig& config);

// Multinomial logistic regression over pixel features. weights is K x F,
// row-major; the score of class c is weights[c] . features.
struct PatchModel {
  int num_classes = 0;
  FeatureLayout layout;
  std::vector<double> weights;
  TrainConfig training;

  PatchModel() = default;
  PatchModel(int num_classes, FeatureLayout layout);

  int features() const { return feature_count(layout); }
  bool operator==(const PatchModel&) const = default;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // same shape as weights
};

// Mean softmax cross-entropy over a batch stored row-major (batch x F) and
// its exact gradient with respect to the weights.
LossAndGradient loss_and_gradient(const PatchModel& model, std::span<const double> features,
                                  std::span<const std::uint8_t> labels);

struct TrainResult {
  PatchModel model;
  std::vector<double> loss_trajectory;  // batch loss per SGD step
};

// Plain mini-batch SGD. Each epoch draws round(rate * n) scored pixels per
// image (seeded by epoch and image position), shuffles the pooled pixels and
// steps through them in batches. Weights start at zero. Throws TrainingError
// when the dataset has no scored pixels.
TrainResult train(const Dataset& dataset, const TrainConfig& config, FeatureLayout layout);

// Per-pixel argmax of the class scores, ties to the lowest id.
LabelMask predict(const PatchModel& model, const Image& image, unsigned threads = 1);

nlohmann::json model_to_json(const PatchModel& model);
// Throws ConfigError on version, shape or non-finite weight problems.
PatchModel model_from_json(const nlohmann::json& value);

}  // namespace segpoison
