#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace segpoison {

// Dense 8-bit RGB pixel grid, row-major, channels interleaved.
struct Image {
  static constexpr int kChannels = 3;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int width, int height, std::uint8_t fill = 0);

  std::size_t index(int row, int col, int channel) const {
    return (static_cast<std::size_t>(row) * width + col) * kChannels + channel;
  }
  std::uint8_t& at(int row, int col, int channel) { return data[index(row, col, channel)]; }
  std::uint8_t at(int row, int col, int channel) const { return data[index(row, col, channel)]; }

  bool same_shape(int w, int h) const { return width == w && height == h; }
  bool operator==(const Image&) const = default;
};

// Per-pixel class ids. Value kIgnore marks pixels excluded from every
// transform and metric.
struct LabelMask {
  static constexpr std::uint8_t kIgnore = 255;
  // Largest representable K: ids 0..254 plus the sentinel.
  static constexpr int kMaxClasses = 255;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  LabelMask() = default;
  LabelMask(int width, int height, std::uint8_t fill = 0);
  LabelMask(int width, int height, std::vector<std::uint8_t> values);

  std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * width + col; }
  std::uint8_t& at(int row, int col) { return data[index(row, col)]; }
  std::uint8_t at(int row, int col) const { return data[index(row, col)]; }
  std::size_t pixel_count() const { return data.size(); }

  bool same_shape(const LabelMask& other) const {
    return width == other.width && height == other.height;
  }
  bool same_shape(const Image& image) const { return width == image.width && height == image.height; }
  bool operator==(const LabelMask&) const = default;
};

enum class Split { kTrain, kTest };

std::string_view to_string(Split split);
// Throws ConfigError on anything other than "train" or "test".
Split parse_split(std::string_view text);

struct Sample {
  std::string id;
  Image image;
  LabelMask mask;

  bool operator==(const Sample&) const = default;
};

struct Dataset {
  int num_classes = 0;
  Split split = Split::kTrain;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool operator==(const Dataset&) const = default;
};

enum class ViolationKind {
  kBadClassCount,
  kDuplicateId,
  kEmptyId,
  kImageBufferSize,
  kMaskBufferSize,
  kDimensionMismatch,
  kClassOutOfRange,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  std::string sample_id;
  ViolationKind kind;
  std::string detail;
};

// Reports every invariant violation in `dataset`. Never throws on malformed
// data; an empty result means the dataset is valid.
std::vector<Violation> validate_dataset(const Dataset& dataset);

}  // namespace segpoison
