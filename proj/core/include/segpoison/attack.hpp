#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "segpoison/types.hpp"

namespace segpoison {

using ClassId = std::uint8_t;

// K x K 0/1 matrix with exactly one 1 per row, stored as the row map
// source -> target. The representation makes the row-sum constraint hold by
// construction.
class AttackMatrix {
 public:
  // Identity over k classes.
  explicit AttackMatrix(int k);

  int k() const { return static_cast<int>(targets_.size()); }
  ClassId target(ClassId source) const { return targets_.at(source); }
  const std::vector<ClassId>& targets() const { return targets_; }

  // Entry A[source][target] of the dense matrix.
  int entry(int source, int target) const { return targets_.at(source) == target ? 1 : 0; }

  bool is_identity() const;
  // Classes whose row is not the identity row.
  std::vector<ClassId> source_classes() const;
  // The (source, target) pairs of non-identity rows, ascending by source.
  std::vector<std::pair<ClassId, ClassId>> mapping() const;

  // Row map of applying *this first and `next` second.
  AttackMatrix then(const AttackMatrix& next) const;

  bool operator==(const AttackMatrix&) const = default;

 private:
  friend AttackMatrix make_attack_matrix(int, const std::vector<std::pair<int, int>>&);
  std::vector<ClassId> targets_;
};

// Listed sources map to their targets, all others to themselves.
// Throws ConfigError for a repeated source or bad k, RangeError for ids >= k.
AttackMatrix make_attack_matrix(int k, const std::vector<std::pair<int, int>>& mapping);

// Every class mapped onto `target`.
AttackMatrix make_all_to_one_matrix(int k, int target);

// Fine-grained target generator: each non-ignore pixel relabelled through
// the row map. Throws RangeError if a pixel class is >= a.k().
LabelMask apply_target_transform(const LabelMask& labels, const AttackMatrix& a);

// Sample-agnostic target: returns `constant_target` regardless of `labels`.
// Throws ConfigError when the shapes differ.
LabelMask badnets_target(const LabelMask& labels, const LabelMask& constant_target);

enum class TriggerKind { kNonSemantic, kSemantic };

// Pattern t and per-element visibility weights lambda, anchored at
// (anchor_row, anchor_col) of the target image. Semantic triggers carry no
// pattern, only the class whose presence activates the backdoor.
struct TriggerSpec {
  TriggerKind kind = TriggerKind::kNonSemantic;
  Image pattern;
  std::vector<float> blend_mask;  // same layout as pattern.data
  int anchor_row = 0;
  int anchor_col = 0;
  ClassId trigger_class = 0;

  static TriggerSpec semantic(ClassId trigger_class);
  bool operator==(const TriggerSpec&) const = default;
};

// Throws ConfigError when the spec breaks its invariants.
void validate_trigger(const TriggerSpec& trigger);

using Rgb = std::array<std::uint8_t, 3>;

// Full-width horizontal band of `width_px` rows starting at `row_offset`.
// The pattern covers the whole image; lambda is `alpha` on the band and 0
// elsewhere. Throws PlacementError when the band leaves the image.
TriggerSpec make_line_trigger(int width_px, Rgb color, int row_offset, int image_width,
                              int image_height, float alpha = 1.0f);

// Solid square patch of side `size_px` anchored at (row, col).
TriggerSpec make_patch_trigger(int size_px, Rgb color, int row, int col, float alpha = 1.0f);

// Blended poisoned-image generator
//   x' = round((1 - lambda) * x + lambda * t), clamped to [0, 255]
// with rounding half away from zero. Pixels outside the pattern support are
// copied verbatim. Semantic triggers return x unchanged. Throws
// PlacementError if the pattern does not fit inside x.
Image blend_trigger(const Image& image, const TriggerSpec& trigger);

bool contains_classes(const LabelMask& mask, const std::vector<ClassId>& classes);

struct FineGrainedMode {
  AttackMatrix matrix;
  bool operator==(const FineGrainedMode&) const = default;
};

struct BadNetsMode {
  LabelMask target;
  // Where the constant target came from (a sample id or a file), for records.
  std::string target_origin;
  bool operator==(const BadNetsMode&) const = default;
};

struct RandomSelection {
  bool operator==(const RandomSelection&) const = default;
};

// Eligible samples contain every listed class. By default the full eligible
// set is poisoned and the rate is reported; with enforce_rate exactly
// round(rate * N) eligible samples are drawn.
struct RequiresClassesSelection {
  std::vector<ClassId> classes;
  bool enforce_rate = false;
  bool operator==(const RequiresClassesSelection&) const = default;
};

using AttackMode = std::variant<FineGrainedMode, BadNetsMode>;
using SelectionRule = std::variant<RandomSelection, RequiresClassesSelection>;

struct PoisonConfig {
  AttackMode mode{FineGrainedMode{AttackMatrix(1)}};
  TriggerSpec trigger;
  double poisoning_rate = 0.0;
  SelectionRule selection;
  std::uint64_t seed = 0;
  // Attacked test sets keep only images with at least one pixel the attack
  // relabels (fine-grained mode with non-identity rows only).
  bool restrict_attacked_to_source = true;

  bool operator==(const PoisonConfig&) const = default;
};

// Throws ConfigError / RangeError if `config` cannot be applied to `dataset`.
void validate_config(const PoisonConfig& config, const Dataset& dataset);

// Label the attack assigns to a sample with ground truth `labels`.
LabelMask attack_target(const PoisonConfig& config, const LabelMask& labels);

// Ids forming D_modified. Random selection draws exactly round(rate * N) ids
// without replacement; each id's rank comes from a hash of (seed, id), so
// the subset does not depend on iteration order.
std::set<std::string> select_poison_subset(const Dataset& dataset, const PoisonConfig& config);

struct PoisonedDataset {
  Dataset dataset;
  std::set<std::string> modified_ids;
  PoisonConfig config;

  double effective_rate() const {
    return dataset.samples.empty()
               ? 0.0
               : static_cast<double>(modified_ids.size()) / dataset.samples.size();
  }
};

// D_poisoned = D_modified U D_benign. Selected samples get G(x) and the
// attack target; the rest are copied untouched. `threads` only changes the
// schedule, never the output.
PoisonedDataset poison_dataset(const Dataset& dataset, const PoisonConfig& config,
                               unsigned threads = 1);

// Aligned (x', y, T(y)) triples for scoring attacked predictions.
struct AttackedTestSet {
  int num_classes = 0;
  std::vector<std::string> ids;
  std::vector<Image> images;
  std::vector<LabelMask> ground_truth;
  std::vector<LabelMask> targets;

  std::size_t size() const { return ids.size(); }
  // Dataset of attacked images with their ground-truth masks.
  Dataset as_dataset() const;
};

// Non-semantic triggers are applied to every kept image. Semantic triggers
// pass images through but keep only those containing the trigger class.
// Throws SelectionError when nothing is left.
AttackedTestSet make_attacked_test_set(const Dataset& test_set, const PoisonConfig& config);

}  // namespace segpoison
