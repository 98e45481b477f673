#pragma once

#include <cstdint>
#include <utility>
#include <vector>
#include <nlohmann/json.hpp>

#include "segpoison/attack.hpp"
#include "segpoison/types.hpp"

namespace segpoison::synth {

// Class roles used by the demos and the end-to-end checks.
inline constexpr ClassId kBackgroundClass = 0;
inline constexpr ClassId kWallClass = 1;
inline constexpr ClassId kPersonClass = 3;
inline constexpr ClassId kPalmClass = 5;

struct SceneSpec {
  int num_classes = 8;
  int width = 64;
  int height = 64;
  int min_shapes = 2;
  int max_shapes = 5;
  double noise_std = 8.0;
  std::uint64_t seed = 0;

  bool operator==(const SceneSpec&) const = default;
};

// Throws ConfigError: needs k >= 3, both sides >= 16, 0 <= min <= max,
// noise_std >= 0.
void validate_scene_spec(const SceneSpec& spec);

// Base colours for classes 0..k-1: greedy farthest-point picks from a
// regular grid inside [64, 224]^3. For k <= 8 these are the corners of that
// cube. Pure black and white are never used.
std::vector<Rgb> class_palette(int num_classes);

// Class 0 everywhere, then rectangles and discs painted in draw order with
// later shapes on top. Pixel colour is the class base colour plus Gaussian
// noise, rounded and clamped. Depends only on (spec, index).
std::pair<Image, LabelMask> generate_scene(const SceneSpec& spec, std::uint64_t index);

// Scene indices start at 0 for train and at kTestIndexOffset for test, so
// the two splits never share a scene. Ids are "<split>_<6-digit index>".
inline constexpr std::uint64_t kTestIndexOffset = std::uint64_t{1} << 32;

Dataset generate_dataset(const SceneSpec& spec, std::size_t count, Split split,
                         unsigned threads = 1);

nlohmann::json scene_spec_to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const nlohmann::json& value);

}  // namespace segpoison::synth
