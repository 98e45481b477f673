#include "segpoison/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "segpoison/errors.hpp"
#include "segpoison/parallel.hpp"
#include "segpoison/random.hpp"

namespace segpoison::synth {
using nlohmann::json;

namespace {

constexpr int kPaletteLow = 64;
constexpr int kPaletteHigh = 224;

int squared_distance(const Rgb& a, const Rgb& b) {
  int d = 0;
  for (int i = 0; i < 3; ++i) {
    const int diff = int{a[i]} - int{b[i]};
    d += diff * diff;
  }
  return d;
}

void paint_rect(LabelMask& mask, int top, int left, int h, int w, ClassId cls) {
  const int bottom = std::min(mask.height, top + h);
  const int right = std::min(mask.width, left + w);
  for (int r = std::max(0, top); r < bottom; ++r) {
    for (int c = std::max(0, left); c < right; ++c) mask.at(r, c) = cls;
  }
}

void paint_disc(LabelMask& mask, int cy, int cx, int radius, ClassId cls) {
  const long r2 = static_cast<long>(radius) * radius;
  for (int r = std::max(0, cy - radius); r <= std::min(mask.height - 1, cy + radius); ++r) {
    for (int c = std::max(0, cx - radius); c <= std::min(mask.width - 1, cx + radius); ++c) {
      const long dy = r - cy;
      const long dx = c - cx;
      if (dy * dy + dx * dx <= r2) mask.at(r, c) = cls;
    }
  }
}

}  // namespace

void validate_scene_spec(const SceneSpec& s) {
  if (s.num_classes < 3 || s.num_classes > LabelMask::kMaxClasses) {
    throw ConfigError("scene spec needs between 3 and 255 classes");
  }
  if (s.width < 16 || s.height < 16) throw ConfigError("scene dimensions must be at least 16");
  if (s.min_shapes < 0 || s.max_shapes < s.min_shapes) {
    throw ConfigError("scene spec needs 0 <= min_shapes <= max_shapes");
  }
  if (!(s.noise_std >= 0.0) || !std::isfinite(s.noise_std)) {
    throw ConfigError("noise_std must be a finite non-negative number");
  }
}

std::vector<Rgb> class_palette(int num_classes) {
  int levels = 2;
  while (levels * levels * levels < num_classes) ++levels;
  std::vector<Rgb> grid;
  for (int r = 0; r < levels; ++r) {
    for (int g = 0; g < levels; ++g) {
      for (int b = 0; b < levels; ++b) {
        auto level = [&](int i) {
          return static_cast<std::uint8_t>(kPaletteLow +
                                           (kPaletteHigh - kPaletteLow) * i / (levels - 1));
        };
        grid.push_back({level(r), level(g), level(b)});
      }
    }
  }
  // Greedy farthest-point selection; ties go to the lowest grid index.
  std::vector<Rgb> out{grid.front()};
  std::vector<bool> used(grid.size(), false);
  used[0] = true;
  std::vector<int> nearest(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) nearest[i] = squared_distance(grid[i], grid[0]);
  while (static_cast<int>(out.size()) < num_classes) {
    std::size_t best = 0;
    int best_d = -1;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!used[i] && nearest[i] > best_d) {
        best = i;
        best_d = nearest[i];
      }
    }
    used[best] = true;
    out.push_back(grid[best]);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(grid[i], grid[best]));
    }
  }
  return out;
}

std::pair<Image, LabelMask> generate_scene(const SceneSpec& spec, std::uint64_t index) {
  validate_scene_spec(spec);
  Rng rng(derive_seed(spec.seed, index, 0x5ce7e));
  LabelMask mask(spec.width, spec.height, kBackgroundClass);

  const int min_side = std::min(spec.width, spec.height);
  const auto shapes = rng.between(spec.min_shapes, spec.max_shapes);
  for (std::int64_t s = 0; s < shapes; ++s) {
    const auto cls = static_cast<ClassId>(rng.between(1, spec.num_classes - 1));
    if (rng.below(2) == 0) {
      const int h = static_cast<int>(rng.between(min_side / 8, min_side / 2));
      const int w = static_cast<int>(rng.between(min_side / 8, min_side / 2));
      const int top = static_cast<int>(rng.between(0, spec.height - h));
      const int left = static_cast<int>(rng.between(0, spec.width - w));
      paint_rect(mask, top, left, h, w, cls);
    } else {
      const int radius = static_cast<int>(rng.between(min_side / 16, min_side / 4));
      const int cy = static_cast<int>(rng.between(0, spec.height - 1));
      const int cx = static_cast<int>(rng.between(0, spec.width - 1));
      paint_disc(mask, cy, cx, radius, cls);
    }
  }

  const std::vector<Rgb> palette = class_palette(spec.num_classes);
  Image image(spec.width, spec.height);
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      const Rgb& base = palette[mask.at(r, c)];
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        double v = base[ch];
        if (spec.noise_std > 0.0) v += spec.noise_std * rng.normal();
        image.at(r, c, ch) = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  }
  return {std::move(image), std::move(mask)};
}

Dataset generate_dataset(const SceneSpec& spec, std::size_t count, Split split,
                         unsigned threads) {
  validate_scene_spec(spec);
  Dataset d;
  d.num_classes = spec.num_classes;
  d.split = split;
  d.samples.resize(count);
  const std::uint64_t offset = split == Split::kTrain ? 0 : kTestIndexOffset;
  parallel_for(count, threads, [&](std::size_t i) {
    char id[48];
    std::snprintf(id, sizeof id, "%s_%06zu", split == Split::kTrain ? "train" : "test", i);
    auto [image, mask] = generate_scene(spec, offset + i);
    d.samples[i] = Sample{id, std::move(image), std::move(mask)};
  });
  return d;
}

json scene_spec_to_json(const SceneSpec& s) {
  return {{"num_classes", s.num_classes}, {"width", s.width},
          {"height", s.height},           {"min_shapes", s.min_shapes},
          {"max_shapes", s.max_shapes},   {"noise_std", s.noise_std},
          {"seed", s.seed}};
}

SceneSpec scene_spec_from_json(const json& j) {
  try {
    SceneSpec s;
    s.num_classes = j.at("num_classes");
    s.width = j.at("width");
    s.height = j.at("height");
    s.min_shapes = j.at("min_shapes");
    s.max_shapes = j.at("max_shapes");
    s.noise_std = j.at("noise_std");
    s.seed = j.at("seed");
    validate_scene_spec(s);
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scene spec: ") + e.what());
  }
}

}  // namespace segpoison::synth
