#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "segpoison/types.hpp"

namespace segpoison {

// Lossless PNG codec for the on-disk dataset format. Images are 8-bit RGB,
// masks 8-bit single channel. Anything else is rejected with IoError.
void write_png(const std::filesystem::path& path, const Image& image);
void write_png(const std::filesystem::path& path, const LabelMask& mask);
Image read_png_image(const std::filesystem::path& path);
LabelMask read_png_mask(const std::filesystem::path& path);

// Directory layout:
//   manifest.json      num_classes, split, ordered sample ids
//   images/<id>.png
//   masks/<id>.png
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// Prediction directories reuse the layout without images/. The harness and
// the `predict` command both emit this.
struct MaskSet {
  int num_classes = 0;
  Split split = Split::kTest;
  std::vector<std::string> ids;
  std::vector<LabelMask> masks;
};

void save_mask_set(const MaskSet& set, const std::filesystem::path& dir);
MaskSet load_mask_set(const std::filesystem::path& dir);

// Sample ids become file names, so they are restricted to [A-Za-z0-9_.-]
// and may not start with a dot.
bool is_valid_sample_id(const std::string& id);

}  // namespace segpoison
