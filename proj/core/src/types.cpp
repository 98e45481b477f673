#include "segpoison/types.hpp"

#include <set>
#include <string>

#include "segpoison/errors.hpp"

namespace segpoison {

Image::Image(int width, int height, std::uint8_t fill)
    : width(width),
      height(height),
      data(static_cast<std::size_t>(width) * height * kChannels, fill) {}

LabelMask::LabelMask(int width, int height, std::uint8_t fill)
    : width(width), height(height), data(static_cast<std::size_t>(width) * height, fill) {}

LabelMask::LabelMask(int width, int height, std::vector<std::uint8_t> values)
    : width(width), height(height), data(std::move(values)) {
  if (width < 0 || height < 0 || data.size() != static_cast<std::size_t>(width) * height) {
    throw InputError("label mask buffer does not match " + std::to_string(width) + "x" +
                     std::to_string(height));
  }
}

std::string_view to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  throw ConfigError("unknown split '" + std::string(text) + "'");
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kBadClassCount: return "bad_class_count";
    case ViolationKind::kDuplicateId: return "duplicate_id";
    case ViolationKind::kEmptyId: return "empty_id";
    case ViolationKind::kImageBufferSize: return "image_buffer_size";
    case ViolationKind::kMaskBufferSize: return "mask_buffer_size";
    case ViolationKind::kDimensionMismatch: return "dimension_mismatch";
    case ViolationKind::kClassOutOfRange: return "class_out_of_range";
  }
  return "unknown";
}

std::vector<Violation> validate_dataset(const Dataset& dataset) {
  std::vector<Violation> out;
  if (dataset.num_classes < 1 || dataset.num_classes > LabelMask::kMaxClasses) {
    out.push_back({"", ViolationKind::kBadClassCount,
                   "num_classes " + std::to_string(dataset.num_classes) + " outside [1, 255]"});
  }
  std::set<std::string> seen;
  for (const Sample& s : dataset.samples) {
    if (s.id.empty()) {
      out.push_back({s.id, ViolationKind::kEmptyId, "empty sample id"});
    } else if (!seen.insert(s.id).second) {
      out.push_back({s.id, ViolationKind::kDuplicateId, "sample id appears more than once"});
    }

    const Image& img = s.image;
    const LabelMask& mask = s.mask;
    bool image_ok = img.width >= 0 && img.height >= 0 &&
                    img.data.size() ==
                        static_cast<std::size_t>(img.width) * img.height * Image::kChannels;
    bool mask_ok = mask.width >= 0 && mask.height >= 0 &&
                   mask.data.size() == static_cast<std::size_t>(mask.width) * mask.height;
    if (!image_ok) {
      out.push_back({s.id, ViolationKind::kImageBufferSize,
                     "image buffer holds " + std::to_string(img.data.size()) + " values for " +
                         std::to_string(img.width) + "x" + std::to_string(img.height) + "x3"});
    }
    if (!mask_ok) {
      out.push_back({s.id, ViolationKind::kMaskBufferSize,
                     "mask buffer holds " + std::to_string(mask.data.size()) + " values for " +
                         std::to_string(mask.width) + "x" + std::to_string(mask.height)});
    }
    if (img.width != mask.width || img.height != mask.height) {
      out.push_back({s.id, ViolationKind::kDimensionMismatch,
                     "image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                         " vs mask " + std::to_string(mask.width) + "x" +
                         std::to_string(mask.height)});
    }
    if (mask_ok) {
      std::size_t bad = 0;
      int first_bad = -1;
      for (std::uint8_t v : mask.data) {
        if (v != LabelMask::kIgnore && v >= dataset.num_classes) {
          if (bad++ == 0) first_bad = v;
        }
      }
      if (bad > 0) {
        out.push_back({s.id, ViolationKind::kClassOutOfRange,
                       std::to_string(bad) + " pixel(s) with class >= " +
                           std::to_string(dataset.num_classes) + " (first: " +
                           std::to_string(first_bad) + ")"});
      }
    }
  }
  return out;
}

}  // namespace segpoison
