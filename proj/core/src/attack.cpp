#include "segpoison/attack.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "segpoison/errors.hpp"
#include "segpoison/parallel.hpp"
#include "segpoison/random.hpp"

namespace segpoison {

namespace {

void check_class_count(int k) {
  if (k < 1 || k > LabelMask::kMaxClasses) {
    throw ConfigError("class count " + std::to_string(k) + " outside [1, 255]");
  }
}

std::string dims(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

std::uint8_t blend_value(std::uint8_t x, std::uint8_t t, float lambda) {
  const double l = lambda;
  const double v = (1.0 - l) * x + l * t;
  // std::round is half away from zero.
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

}  // namespace

AttackMatrix::AttackMatrix(int k) {
  check_class_count(k);
  targets_.resize(k);
  for (int i = 0; i < k; ++i) targets_[i] = static_cast<ClassId>(i);
}

bool AttackMatrix::is_identity() const { return source_classes().empty(); }

std::vector<ClassId> AttackMatrix::source_classes() const {
  std::vector<ClassId> out;
  for (int i = 0; i < k(); ++i) {
    if (targets_[i] != i) out.push_back(static_cast<ClassId>(i));
  }
  return out;
}

std::vector<std::pair<ClassId, ClassId>> AttackMatrix::mapping() const {
  std::vector<std::pair<ClassId, ClassId>> out;
  for (ClassId s : source_classes()) out.emplace_back(s, targets_[s]);
  return out;
}

AttackMatrix AttackMatrix::then(const AttackMatrix& next) const {
  if (next.k() != k()) throw ConfigError("cannot compose attack matrices of different sizes");
  AttackMatrix out(k());
  for (int i = 0; i < k(); ++i) out.targets_[i] = next.targets_[targets_[i]];
  return out;
}

AttackMatrix make_attack_matrix(int k, const std::vector<std::pair<int, int>>& mapping) {
  AttackMatrix a(k);
  std::vector<bool> seen(k, false);
  for (const auto& [source, target] : mapping) {
    if (source < 0 || source >= k || target < 0 || target >= k) {
      throw RangeError("mapping " + std::to_string(source) + "->" + std::to_string(target) +
                       " outside [0, " + std::to_string(k) + ")");
    }
    if (seen[source]) {
      throw ConfigError("source class " + std::to_string(source) + " listed more than once");
    }
    seen[source] = true;
    a.targets_[source] = static_cast<ClassId>(target);
  }
  return a;
}

AttackMatrix make_all_to_one_matrix(int k, int target) {
  std::vector<std::pair<int, int>> mapping;
  for (int i = 0; i < k; ++i) mapping.emplace_back(i, target);
  return make_attack_matrix(k, mapping);
}

LabelMask apply_target_transform(const LabelMask& labels, const AttackMatrix& a) {
  LabelMask out = labels;
  const auto& table = a.targets();
  const std::size_t k = table.size();
  for (std::uint8_t& v : out.data) {
    if (v == LabelMask::kIgnore) continue;
    if (v >= k) {
      throw RangeError("class " + std::to_string(v) + " outside attack matrix of size " +
                       std::to_string(k));
    }
    v = table[v];
  }
  return out;
}

LabelMask badnets_target(const LabelMask& labels, const LabelMask& constant_target) {
  if (!labels.same_shape(constant_target)) {
    throw ConfigError("badnets target is " + dims(constant_target.width, constant_target.height) +
                      " but label mask is " + dims(labels.width, labels.height));
  }
  return constant_target;
}

TriggerSpec TriggerSpec::semantic(ClassId trigger_class) {
  TriggerSpec t;
  t.kind = TriggerKind::kSemantic;
  t.trigger_class = trigger_class;
  return t;
}

void validate_trigger(const TriggerSpec& trigger) {
  if (trigger.kind == TriggerKind::kSemantic) {
    if (!trigger.pattern.data.empty() || !trigger.blend_mask.empty()) {
      throw ConfigError("semantic trigger must not carry a pattern");
    }
    if (trigger.trigger_class == LabelMask::kIgnore) {
      throw ConfigError("semantic trigger class cannot be the ignore sentinel");
    }
    return;
  }
  const Image& p = trigger.pattern;
  if (p.width <= 0 || p.height <= 0 ||
      p.data.size() != static_cast<std::size_t>(p.width) * p.height * Image::kChannels) {
    throw ConfigError("trigger pattern buffer does not match its dimensions");
  }
  if (trigger.blend_mask.size() != p.data.size()) {
    throw ConfigError("trigger blend mask and pattern differ in size");
  }
  for (float l : trigger.blend_mask) {
    if (!(l >= 0.0f && l <= 1.0f)) throw ConfigError("blend weight outside [0, 1]");
  }
  if (trigger.anchor_row < 0 || trigger.anchor_col < 0) {
    throw PlacementError("trigger anchor must be non-negative");
  }
}

TriggerSpec make_line_trigger(int width_px, Rgb color, int row_offset, int image_width,
                              int image_height, float alpha) {
  if (width_px < 1) throw PlacementError("line trigger width must be at least 1 pixel");
  if (image_width < 1 || image_height < 1) throw PlacementError("empty image for line trigger");
  if (row_offset < 0 || row_offset + width_px > image_height) {
    throw PlacementError("band rows [" + std::to_string(row_offset) + ", " +
                         std::to_string(row_offset + width_px) + ") leave an image of height " +
                         std::to_string(image_height));
  }
  if (!(alpha >= 0.0f && alpha <= 1.0f)) throw ConfigError("line trigger alpha outside [0, 1]");
  TriggerSpec t;
  t.kind = TriggerKind::kNonSemantic;
  t.pattern = Image(image_width, image_height);
  t.blend_mask.assign(t.pattern.data.size(), 0.0f);
  for (int r = row_offset; r < row_offset + width_px; ++r) {
    for (int c = 0; c < image_width; ++c) {
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        t.pattern.at(r, c, ch) = color[ch];
        t.blend_mask[t.pattern.index(r, c, ch)] = alpha;
      }
    }
  }
  return t;
}

TriggerSpec make_patch_trigger(int size_px, Rgb color, int row, int col, float alpha) {
  if (size_px < 1) throw PlacementError("patch trigger size must be at least 1 pixel");
  if (row < 0 || col < 0) throw PlacementError("patch trigger anchor must be non-negative");
  if (!(alpha >= 0.0f && alpha <= 1.0f)) throw ConfigError("patch trigger alpha outside [0, 1]");
  TriggerSpec t;
  t.kind = TriggerKind::kNonSemantic;
  t.pattern = Image(size_px, size_px);
  for (std::size_t i = 0; i < t.pattern.data.size(); ++i) {
    t.pattern.data[i] = color[i % Image::kChannels];
  }
  t.blend_mask.assign(t.pattern.data.size(), alpha);
  t.anchor_row = row;
  t.anchor_col = col;
  return t;
}

Image blend_trigger(const Image& image, const TriggerSpec& trigger) {
  if (trigger.kind == TriggerKind::kSemantic) return image;
  validate_trigger(trigger);
  const Image& p = trigger.pattern;
  if (trigger.anchor_row + p.height > image.height || trigger.anchor_col + p.width > image.width) {
    throw PlacementError("trigger " + dims(p.width, p.height) + " at (" +
                         std::to_string(trigger.anchor_row) + ", " +
                         std::to_string(trigger.anchor_col) + ") does not fit image " +
                         dims(image.width, image.height));
  }
  Image out = image;
  for (int r = 0; r < p.height; ++r) {
    for (int c = 0; c < p.width; ++c) {
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        const std::size_t pi = p.index(r, c, ch);
        const float lambda = trigger.blend_mask[pi];
        if (lambda == 0.0f) continue;
        std::uint8_t& x = out.at(trigger.anchor_row + r, trigger.anchor_col + c, ch);
        x = blend_value(x, p.data[pi], lambda);
      }
    }
  }
  return out;
}

bool contains_classes(const LabelMask& mask, const std::vector<ClassId>& classes) {
  if (classes.empty()) return true;
  std::vector<bool> present(256, false);
  for (std::uint8_t v : mask.data) present[v] = true;
  for (ClassId c : classes) {
    if (c == LabelMask::kIgnore || !present[c]) return false;
  }
  return true;
}

void validate_config(const PoisonConfig& config, const Dataset& dataset) {
  if (!(config.poisoning_rate >= 0.0 && config.poisoning_rate <= 1.0)) {
    throw ConfigError("poisoning rate must lie in [0, 1]");
  }
  if (const auto* fg = std::get_if<FineGrainedMode>(&config.mode)) {
    if (fg->matrix.k() != dataset.num_classes) {
      throw ConfigError("attack matrix covers " + std::to_string(fg->matrix.k()) +
                        " classes but the dataset has " + std::to_string(dataset.num_classes));
    }
  } else {
    const auto& bn = std::get<BadNetsMode>(config.mode);
    for (std::uint8_t v : bn.target.data) {
      if (v != LabelMask::kIgnore && v >= dataset.num_classes) {
        throw RangeError("badnets target contains class " + std::to_string(v));
      }
    }
    for (const Sample& s : dataset.samples) {
      if (!s.mask.same_shape(bn.target)) {
        throw ConfigError("badnets target is " + dims(bn.target.width, bn.target.height) +
                          " but sample " + s.id + " is " + dims(s.mask.width, s.mask.height));
      }
    }
  }
  validate_trigger(config.trigger);
  if (config.trigger.kind == TriggerKind::kSemantic &&
      config.trigger.trigger_class >= dataset.num_classes) {
    throw RangeError("semantic trigger class " + std::to_string(config.trigger.trigger_class) +
                     " outside [0, " + std::to_string(dataset.num_classes) + ")");
  }
  if (const auto* rc = std::get_if<RequiresClassesSelection>(&config.selection)) {
    for (ClassId c : rc->classes) {
      if (c >= dataset.num_classes) {
        throw RangeError("selection class " + std::to_string(c) + " outside [0, " +
                         std::to_string(dataset.num_classes) + ")");
      }
    }
  }
}

LabelMask attack_target(const PoisonConfig& config, const LabelMask& labels) {
  if (const auto* fg = std::get_if<FineGrainedMode>(&config.mode)) {
    return apply_target_transform(labels, fg->matrix);
  }
  return badnets_target(labels, std::get<BadNetsMode>(config.mode).target);
}

std::set<std::string> select_poison_subset(const Dataset& dataset, const PoisonConfig& config) {
  if (!(config.poisoning_rate >= 0.0 && config.poisoning_rate <= 1.0)) {
    throw ConfigError("poisoning rate must lie in [0, 1]");
  }
  const auto n = static_cast<double>(dataset.samples.size());
  const auto wanted = static_cast<std::size_t>(std::llround(config.poisoning_rate * n));

  std::vector<const Sample*> eligible;
  bool take_all = false;
  if (const auto* rc = std::get_if<RequiresClassesSelection>(&config.selection)) {
    for (const Sample& s : dataset.samples) {
      if (contains_classes(s.mask, rc->classes)) eligible.push_back(&s);
    }
    if (!rc->enforce_rate) {
      take_all = true;
    } else if (eligible.size() < wanted) {
      throw SelectionError("rate " + std::to_string(config.poisoning_rate) + " needs " +
                           std::to_string(wanted) + " samples but only " +
                           std::to_string(eligible.size()) + " contain the required classes");
    }
  } else {
    for (const Sample& s : dataset.samples) eligible.push_back(&s);
  }

  std::set<std::string> out;
  if (take_all) {
    for (const Sample* s : eligible) out.insert(s->id);
    return out;
  }
  // Rank by a per-id hash; ties (equal hashes) fall back to the id itself.
  std::vector<std::pair<std::uint64_t, const std::string*>> ranked;
  ranked.reserve(eligible.size());
  for (const Sample* s : eligible) {
    ranked.emplace_back(derive_seed(derive_seed(config.seed, "select"), s->id), &s->id);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : *a.second < *b.second;
  });
  for (std::size_t i = 0; i < wanted && i < ranked.size(); ++i) out.insert(*ranked[i].second);
  return out;
}

PoisonedDataset poison_dataset(const Dataset& dataset, const PoisonConfig& config,
                               unsigned threads) {
  validate_config(config, dataset);
  PoisonedDataset out;
  out.config = config;
  out.modified_ids = select_poison_subset(dataset, config);
  out.dataset = dataset;
  parallel_for(dataset.samples.size(), threads, [&](std::size_t i) {
    Sample& s = out.dataset.samples[i];
    if (!out.modified_ids.contains(s.id)) return;
    s.image = blend_trigger(s.image, config.trigger);
    s.mask = attack_target(config, s.mask);
  });
  return out;
}

Dataset AttackedTestSet::as_dataset() const {
  Dataset d;
  d.num_classes = num_classes;
  d.split = Split::kTest;
  d.samples.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    d.samples.push_back({ids[i], images[i], ground_truth[i]});
  }
  return d;
}

AttackedTestSet make_attacked_test_set(const Dataset& test_set, const PoisonConfig& config) {
  validate_config(config, test_set);
  std::vector<ClassId> sources;
  if (const auto* fg = std::get_if<FineGrainedMode>(&config.mode)) {
    if (config.restrict_attacked_to_source) sources = fg->matrix.source_classes();
  }

  AttackedTestSet out;
  out.num_classes = test_set.num_classes;
  for (const Sample& s : test_set.samples) {
    if (config.trigger.kind == TriggerKind::kSemantic &&
        !contains_classes(s.mask, {config.trigger.trigger_class})) {
      continue;
    }
    if (!sources.empty()) {
      const bool has_source = std::any_of(sources.begin(), sources.end(), [&](ClassId c) {
        return contains_classes(s.mask, {c});
      });
      if (!has_source) continue;
    }
    out.ids.push_back(s.id);
    out.images.push_back(blend_trigger(s.image, config.trigger));
    out.ground_truth.push_back(s.mask);
    out.targets.push_back(attack_target(config, s.mask));
  }
  if (out.ids.empty()) {
    if (config.trigger.kind == TriggerKind::kSemantic) {
      throw SelectionError("no test sample contains trigger class " +
                           std::to_string(config.trigger.trigger_class));
    }
    throw SelectionError("no test sample contains a source class of the attack");
  }
  return out;
}

}  // namespace segpoison
