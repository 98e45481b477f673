#include "segpoison/toymodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "segpoison/errors.hpp"
#include "segpoison/parallel.hpp"
#include "segpoison/random.hpp"

namespace segpoison {
using nlohmann::json;

namespace {

constexpr const char* kModelFormat = "segpoison-patch-model";
constexpr int kModelVersion = 1;
constexpr double kInv255 = 1.0 / 255.0;

// Scores for one feature row; returns the softmax in `probs` and the log of
// the partition function relative to the max score.
void softmax(const PatchModel& m, const double* x, double* probs, double& max_score,
             double& log_sum) {
  const int f = m.features();
  max_score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < m.num_classes; ++c) {
    const double* w = m.weights.data() + static_cast<std::size_t>(c) * f;
    double s = 0.0;
    for (int j = 0; j < f; ++j) s += w[j] * x[j];
    probs[c] = s;
    max_score = std::max(max_score, s);
  }
  double sum = 0.0;
  for (int c = 0; c < m.num_classes; ++c) {
    probs[c] = std::exp(probs[c] - max_score);
    sum += probs[c];
  }
  for (int c = 0; c < m.num_classes; ++c) probs[c] /= sum;
  log_sum = std::log(sum);
}

// Writes the batch-mean gradient into `grad` (resized by caller) and returns
// the batch-mean loss.
double batch_loss_and_gradient(const PatchModel& m, std::span<const double> features,
                               std::span<const std::uint8_t> labels, std::vector<double>& grad,
                               std::vector<double>& probs) {
  const int f = m.features();
  const std::size_t batch = labels.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  probs.resize(m.num_classes);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = features.data() + b * f;
    double max_score = 0.0;
    double log_sum = 0.0;
    softmax(m, x, probs.data(), max_score, log_sum);
    const int y = labels[b];
    // -log p_y = log sum exp(s) - s_y
    double s_y = 0.0;
    const double* w_y = m.weights.data() + static_cast<std::size_t>(y) * f;
    for (int j = 0; j < f; ++j) s_y += w_y[j] * x[j];
    loss += max_score + log_sum - s_y;
    for (int c = 0; c < m.num_classes; ++c) {
      const double coeff = probs[c] - (c == y ? 1.0 : 0.0);
      if (coeff == 0.0) continue;
      double* g = grad.data() + static_cast<std::size_t>(c) * f;
      for (int j = 0; j < f; ++j) g[j] += coeff * x[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(batch);
  for (double& g : grad) g *= inv;
  return loss * inv;
}

}  // namespace

int patch_feature_count(int patch_radius) {
  const int side = 2 * patch_radius + 1;
  return Image::kChannels * side * side + 1;
}

int feature_count(const FeatureLayout& layout) {
  return patch_feature_count(layout.patch_radius) + (layout.global_context ? kContextFeatures : 0);
}

FeatureExtractor::FeatureExtractor(const Image& image, FeatureLayout layout)
    : image_(&image), layout_(layout) {
  if (layout.patch_radius < 0) throw ConfigError("patch radius must be non-negative");
  if (image.width <= 0 || image.height <= 0) throw InputError("empty image");
  if (!layout.global_context) return;
  // Per channel: mean, min, max over the whole image, scaled to [0, 1].
  context_.assign(kContextFeatures, 0.0);
  for (int ch = 0; ch < Image::kChannels; ++ch) {
    double sum = 0.0;
    int lo = 255;
    int hi = 0;
    for (std::size_t i = ch; i < image.data.size(); i += Image::kChannels) {
      const int v = image.data[i];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double n = static_cast<double>(image.width) * image.height;
    context_[ch] = sum / n * kInv255;
    context_[3 + ch] = lo * kInv255;
    context_[6 + ch] = hi * kInv255;
  }
}

void FeatureExtractor::fill(int row, int col, std::span<double> out) const {
  const Image& img = *image_;
  const int r = layout_.patch_radius;
  std::size_t k = 0;
  for (int dy = -r; dy <= r; ++dy) {
    const int y = std::clamp(row + dy, 0, img.height - 1);
    for (int dx = -r; dx <= r; ++dx) {
      const int x = std::clamp(col + dx, 0, img.width - 1);
      const std::uint8_t* px = img.data.data() + img.index(y, x, 0);
      out[k++] = px[0] * kInv255;
      out[k++] = px[1] * kInv255;
      out[k++] = px[2] * kInv255;
    }
  }
  for (double v : context_) out[k++] = v;
  out[k] = 1.0;
}

std::vector<double> extract_features(const Image& image, int row, int col, int patch_radius) {
  FeatureExtractor fx(image, FeatureLayout{patch_radius, false});
  std::vector<double> out(fx.size());
  fx.fill(row, col, out);
  return out;
}

void validate_train_config(const TrainConfig& c) {
  if (c.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (c.batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(c.pixel_sample_rate > 0.0 && c.pixel_sample_rate <= 1.0)) {
    throw ConfigError("pixel sample rate must lie in (0, 1]");
  }
}

PatchModel::PatchModel(int num_classes, FeatureLayout layout)
    : num_classes(num_classes), layout(layout) {
  if (num_classes < 1 || num_classes > LabelMask::kMaxClasses) {
    throw ConfigError("model class count outside [1, 255]");
  }
  if (layout.patch_radius < 0) throw ConfigError("patch radius must be non-negative");
  weights.assign(static_cast<std::size_t>(num_classes) * feature_count(layout), 0.0);
}

LossAndGradient loss_and_gradient(const PatchModel& model, std::span<const double> features,
                                  std::span<const std::uint8_t> labels) {
  const auto f = static_cast<std::size_t>(model.features());
  if (labels.empty() || features.size() != labels.size() * f) {
    throw InputError("feature batch does not match " + std::to_string(labels.size()) +
                     " labels of " + std::to_string(f) + " features");
  }
  for (std::uint8_t y : labels) {
    if (y >= model.num_classes) throw RangeError("label " + std::to_string(y) + " out of range");
  }
  LossAndGradient out;
  out.gradient.resize(model.weights.size());
  std::vector<double> probs;
  out.loss = batch_loss_and_gradient(model, features, labels, out.gradient, probs);
  return out;
}

TrainResult train(const Dataset& dataset, const TrainConfig& config, FeatureLayout layout) {
  validate_train_config(config);
  TrainResult result{PatchModel(dataset.num_classes, layout), {}};
  result.model.training = config;

  // Scored (non-ignore) pixel indices per image.
  std::vector<std::vector<std::uint32_t>> scored(dataset.samples.size());
  std::size_t total_scored = 0;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const Sample& s = dataset.samples[i];
    if (!s.mask.same_shape(s.image)) {
      throw InputError("sample " + s.id + ": image and mask dimensions differ");
    }
    for (std::size_t p = 0; p < s.mask.data.size(); ++p) {
      const std::uint8_t y = s.mask.data[p];
      if (y == LabelMask::kIgnore) continue;
      if (y >= dataset.num_classes) {
        throw RangeError("sample " + s.id + " has class " + std::to_string(y) + " out of range");
      }
      scored[i].push_back(static_cast<std::uint32_t>(p));
    }
    total_scored += scored[i].size();
  }
  if (total_scored == 0) throw TrainingError("dataset has no scored pixels to train on");
  if (config.epochs == 0) return result;

  std::vector<FeatureExtractor> extractors;
  extractors.reserve(dataset.samples.size());
  for (const Sample& s : dataset.samples) extractors.emplace_back(s.image, layout);

  PatchModel& model = result.model;
  const int f = model.features();
  const auto batch_cap = static_cast<std::size_t>(config.batch_size);
  std::vector<double> features(batch_cap * f);
  std::vector<std::uint8_t> labels(batch_cap);
  std::vector<double> grad(model.weights.size());
  std::vector<double> probs;

  struct PixelRef {
    std::uint32_t image;
    std::uint32_t pixel;
  };
  std::vector<PixelRef> pool;
  std::vector<std::uint32_t> scratch;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    pool.clear();
    for (std::size_t i = 0; i < scored.size(); ++i) {
      const std::size_t n = scored[i].size();
      if (n == 0) continue;
      const std::size_t m = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::llround(config.pixel_sample_rate * n)), 1, n);
      Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch) + 1, i));
      scratch = scored[i];
      for (std::size_t j = 0; j < m; ++j) {
        std::swap(scratch[j], scratch[j + rng.below(n - j)]);
        pool.push_back({static_cast<std::uint32_t>(i), scratch[j]});
      }
    }
    Rng shuffle(derive_seed(config.seed, static_cast<std::uint64_t>(epoch) + 1, ~0ULL));
    for (std::size_t j = pool.size(); j > 1; --j) std::swap(pool[j - 1], pool[shuffle.below(j)]);

    for (std::size_t start = 0; start < pool.size(); start += batch_cap) {
      const std::size_t len = std::min(batch_cap, pool.size() - start);
      for (std::size_t b = 0; b < len; ++b) {
        const PixelRef& ref = pool[start + b];
        const Sample& s = dataset.samples[ref.image];
        const int row = static_cast<int>(ref.pixel / s.mask.width);
        const int col = static_cast<int>(ref.pixel % s.mask.width);
        extractors[ref.image].fill(row, col, std::span<double>(features.data() + b * f, f));
        labels[b] = s.mask.data[ref.pixel];
      }
      const double loss = batch_loss_and_gradient(
          model, std::span<const double>(features.data(), len * f),
          std::span<const std::uint8_t>(labels.data(), len), grad, probs);
      for (std::size_t w = 0; w < grad.size(); ++w) model.weights[w] -= config.learning_rate * grad[w];
      result.loss_trajectory.push_back(loss);
    }
  }
  for (double w : model.weights) {
    if (!std::isfinite(w)) throw TrainingError("training diverged: non-finite weight");
  }
  return result;
}

LabelMask predict(const PatchModel& model, const Image& image, unsigned threads) {
  if (model.weights.size() != static_cast<std::size_t>(model.num_classes) * model.features()) {
    throw ConfigError("model weights do not match its feature layout");
  }
  LabelMask out(image.width, image.height, 0);
  if (image.width == 0 || image.height == 0) return out;
  const FeatureExtractor fx(image, model.layout);
  const int f = model.features();
  parallel_for(static_cast<std::size_t>(image.height), threads, [&](std::size_t row) {
    std::vector<double> x(f);
    for (int col = 0; col < image.width; ++col) {
      fx.fill(static_cast<int>(row), col, x);
      int best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < model.num_classes; ++c) {
        const double* w = model.weights.data() + static_cast<std::size_t>(c) * f;
        double s = 0.0;
        for (int j = 0; j < f; ++j) s += w[j] * x[j];
        if (s > best_score) {  // strict: ties keep the lower id
          best_score = s;
          best = c;
        }
      }
      out.at(static_cast<int>(row), col) = static_cast<std::uint8_t>(best);
    }
  });
  return out;
}

json model_to_json(const PatchModel& m) {
  json weights = json::array();
  const int f = m.features();
  for (int c = 0; c < m.num_classes; ++c) {
    weights.push_back(std::vector<double>(m.weights.begin() + static_cast<std::ptrdiff_t>(c) * f,
                                          m.weights.begin() + static_cast<std::ptrdiff_t>(c + 1) * f));
  }
  return {
      {"format", kModelFormat},
      {"version", kModelVersion},
      {"num_classes", m.num_classes},
      {"patch_radius", m.layout.patch_radius},
      {"global_context", m.layout.global_context},
      {"features", f},
      {"training",
       {{"epochs", m.training.epochs},
        {"learning_rate", m.training.learning_rate},
        {"batch_size", m.training.batch_size},
        {"pixel_sample_rate", m.training.pixel_sample_rate},
        {"seed", m.training.seed}}},
      {"weights", weights},
  };
}

PatchModel model_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw ConfigError("not a patch model file");
    if (j.at("version").get<int>() != kModelVersion) throw ConfigError("unsupported model version");
    FeatureLayout layout{j.at("patch_radius").get<int>(), j.at("global_context").get<bool>()};
    PatchModel m(j.at("num_classes").get<int>(), layout);
    if (j.at("features").get<int>() != m.features()) {
      throw ConfigError("model header feature count disagrees with its patch radius");
    }
    const json& t = j.at("training");
    m.training = TrainConfig{t.at("epochs"), t.at("learning_rate"), t.at("batch_size"),
                             t.at("pixel_sample_rate"), t.at("seed")};
    const json& w = j.at("weights");
    if (w.size() != static_cast<std::size_t>(m.num_classes)) throw ConfigError("weight row count mismatch");
    std::size_t k = 0;
    for (const json& row : w) {
      if (row.size() != static_cast<std::size_t>(m.features())) {
        throw ConfigError("weight row length mismatch");
      }
      for (const json& v : row) {
        if (!v.is_number()) throw ConfigError("non-numeric weight");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError("non-finite weight");
        m.weights[k++] = d;
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace segpoison
